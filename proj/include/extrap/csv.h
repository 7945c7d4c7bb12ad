#ifndef EXTRAP_CSV_H_
#define EXTRAP_CSV_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace extrap {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Rendered as the first line of every CSV:
//   # spec_hash=<16 hex>, seed=<seed>, version=<version>[, key=value ...]
struct Provenance {
  std::string spec_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> extra;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

// 17 significant digits, '.' decimal separator, "nan"/"inf" for non-finite.
std::string format_real(double value);

// 64-bit FNV-1a of text, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

// UTF-8, LF line endings, no quoting (fields never contain commas).
void write_csv(std::ostream& out, const Provenance& provenance,
               const CsvTable& table);

// Parses a file written by write_csv; the provenance line is returned raw.
struct ParsedCsv {
  std::string provenance_line;
  CsvTable table;
};
ParsedCsv read_csv(std::istream& in);

}  // namespace extrap

#endif  // EXTRAP_CSV_H_
