#include "extrap/dataset.h"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "extrap/errors.h"

namespace extrap {

static_assert(std::endian::native == std::endian::little,
              "dataset binary I/O assumes a little-endian host");

Matrix SequenceGroup::sequence(std::size_t i) const {
  Matrix out(input_dim(), length());
  for (std::size_t t = 0; t < length(); ++t)
    for (std::size_t c = 0; c < input_dim(); ++c) out(c, t) = steps[t](c, i);
  return out;
}

std::size_t LabeledDataset::size() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.count();
  return total;
}

std::size_t LabeledDataset::input_dim() const {
  return groups.empty() ? 0 : groups.front().input_dim();
}

std::size_t LabeledDataset::output_dim() const {
  return groups.empty() ? 0 : groups.front().output_dim();
}

void LabeledDataset::validate() const {
  if (groups.empty() || size() == 0) throw DomainError("empty dataset");
  const std::size_t n = input_dim();
  const std::size_t m = output_dim();
  for (const auto& g : groups) {
    if (g.steps.empty()) throw DimensionError("group with zero length");
    if (g.output_dim() != m) throw DimensionError("label width differs");
    for (const auto& x : g.steps) {
      if (x.rows() != n || x.cols() != g.count()) {
        throw DimensionError(fmt::format(
            "group of length {}: step is {}x{}, expected {}x{}", g.length(),
            x.rows(), x.cols(), n, g.count()));
      }
    }
  }
}

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'X', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("truncated dataset stream");
  return value;
}

std::size_t get_size(std::istream& in) {
  return static_cast<std::size_t>(get<std::uint64_t>(in));
}

}  // namespace

void write_dataset_binary(std::ostream& out, const LabeledDataset& data) {
  data.validate();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, data.groups.size());
  put<std::uint8_t>(out, data.adversarial ? 1 : 0);
  put<std::uint64_t>(out, data.seed);
  put<std::uint64_t>(out, data.provenance.size());
  out.write(data.provenance.data(),
            static_cast<std::streamsize>(data.provenance.size()));
  for (const auto& g : data.groups) {
    put<std::uint64_t>(out, g.length());
    put<std::uint64_t>(out, g.count());
    put<std::uint64_t>(out, g.input_dim());
    put<std::uint64_t>(out, g.output_dim());
    for (std::size_t i = 0; i < g.count(); ++i) {
      for (std::size_t t = 0; t < g.length(); ++t)
        for (std::size_t c = 0; c < g.input_dim(); ++c)
          put<double>(out, g.steps[t](c, i));
      for (std::size_t r = 0; r < g.output_dim(); ++r)
        put<double>(out, g.labels(r, i));
    }
  }
  if (!out) throw FormatError("failed writing dataset");
}

LabeledDataset read_dataset_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("bad dataset magic");
  if (get<std::uint32_t>(in) != kVersion) {
    throw FormatError("unsupported dataset version");
  }
  LabeledDataset data;
  const std::size_t group_count = get_size(in);
  data.adversarial = get<std::uint8_t>(in) != 0;
  data.seed = get<std::uint64_t>(in);
  data.provenance.resize(get_size(in));
  in.read(data.provenance.data(),
          static_cast<std::streamsize>(data.provenance.size()));
  for (std::size_t gi = 0; gi < group_count; ++gi) {
    const std::size_t length = get_size(in);
    const std::size_t count = get_size(in);
    const std::size_t n = get_size(in);
    const std::size_t m = get_size(in);
    SequenceGroup g;
    g.steps.assign(length, Matrix(n, count));
    g.labels = Matrix(m, count);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t t = 0; t < length; ++t)
        for (std::size_t c = 0; c < n; ++c) g.steps[t](c, i) = get<double>(in);
      for (std::size_t r = 0; r < m; ++r) g.labels(r, i) = get<double>(in);
    }
    for (const auto& x : g.steps) require_finite(x, "read_dataset_binary");
    require_finite(g.labels, "read_dataset_binary");
    data.groups.push_back(std::move(g));
  }
  data.validate();
  return data;
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
  data.validate();
  out << fmt::format("# provenance={}, adversarial={}, seed={}\n",
                     data.provenance, data.adversarial ? 1 : 0, data.seed);
  for (const auto& g : data.groups) {
    out << fmt::format("#group,{},{},{},{}\n", g.length(), g.count(),
                       g.input_dim(), g.output_dim());
    for (std::size_t i = 0; i < g.count(); ++i) {
      bool first = true;
      auto emit = [&](double v) {
        if (!first) out << ',';
        first = false;
        out << fmt::format("{:.17g}", v);
      };
      for (std::size_t t = 0; t < g.length(); ++t)
        for (std::size_t c = 0; c < g.input_dim(); ++c) emit(g.steps[t](c, i));
      for (std::size_t r = 0; r < g.output_dim(); ++r) emit(g.labels(r, i));
      out << '\n';
    }
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) out.push_back(field);
  return out;
}

double parse_double(const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw FormatError(fmt::format("bad number '{}'", field));
  }
  if (used != field.size()) throw FormatError(fmt::format("bad number '{}'", field));
  return v;
}

std::size_t parse_count(const std::string& field) {
  try {
    return static_cast<std::size_t>(std::stoull(field));
  } catch (const std::exception&) {
    throw FormatError(fmt::format("bad count '{}'", field));
  }
}

}  // namespace

LabeledDataset read_dataset_csv(std::istream& in) {
  LabeledDataset data;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# provenance=", 0) != 0) {
    throw FormatError("missing dataset provenance line");
  }
  {
    const std::string body = line.substr(2);
    const auto adv = body.rfind(", adversarial=");
    const auto seed = body.rfind(", seed=");
    if (adv == std::string::npos || seed == std::string::npos || seed < adv) {
      throw FormatError("malformed provenance line");
    }
    data.provenance = body.substr(std::string("provenance=").size(),
                                  adv - std::string("provenance=").size());
    data.adversarial =
        body.substr(adv + 14, seed - adv - 14) == std::string("1");
    data.seed = std::stoull(body.substr(seed + 7));
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto header = split(line, ',');
    if (header.size() != 5 || header[0] != "#group") {
      throw FormatError(fmt::format("expected group header, got '{}'", line));
    }
    const std::size_t length = parse_count(header[1]);
    const std::size_t count = parse_count(header[2]);
    const std::size_t n = parse_count(header[3]);
    const std::size_t m = parse_count(header[4]);
    SequenceGroup g;
    g.steps.assign(length, Matrix(n, count));
    g.labels = Matrix(m, count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) throw FormatError("truncated group");
      const auto fields = split(line, ',');
      if (fields.size() != length * n + m) {
        throw FormatError(fmt::format("row has {} fields, expected {}",
                                      fields.size(), length * n + m));
      }
      std::size_t f = 0;
      for (std::size_t t = 0; t < length; ++t)
        for (std::size_t c = 0; c < n; ++c)
          g.steps[t](c, i) = parse_double(fields[f++]);
      for (std::size_t r = 0; r < m; ++r)
        g.labels(r, i) = parse_double(fields[f++]);
    }
    for (const auto& x : g.steps) require_finite(x, "read_dataset_csv");
    require_finite(g.labels, "read_dataset_csv");
    data.groups.push_back(std::move(g));
  }
  data.validate();
  return data;
}

}  // namespace extrap
