#include "extrap/csv.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "extrap/errors.h"

namespace extrap {

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw FormatError(fmt::format("CSV row has {} fields, header has {}",
                                  row.size(), header.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", hash);
}

void write_csv(std::ostream& out, const Provenance& provenance,
               const CsvTable& table) {
  out << "# spec_hash=" << provenance.spec_hash << ", seed=" << provenance.seed
      << ", version=" << kArtifactVersion;
  for (const auto& [key, value] : provenance.extra) {
    out << ", " << key << '=' << value;
  }
  out << '\n';
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

ParsedCsv read_csv(std::istream& in) {
  ParsedCsv parsed;
  std::string line;
  auto split = [](const std::string& text) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(text);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!text.empty() && text.back() == ',') fields.emplace_back();
    return fields;
  };
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw FormatError("CSV is missing its provenance line");
  }
  parsed.provenance_line = line;
  if (!std::getline(in, line)) throw FormatError("CSV is missing its header");
  parsed.table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    parsed.table.add_row(split(line));
  }
  return parsed;
}

}  // namespace extrap
