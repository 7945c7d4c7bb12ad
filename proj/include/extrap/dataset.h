#ifndef EXTRAP_DATASET_H_
#define EXTRAP_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "extrap/linalg.h"

namespace extrap {

// Sequences of one common length, stored time-major: steps[t] is n x N with
// one sequence per column. labels is m x N.
struct SequenceGroup {
  std::vector<Matrix> steps;
  Matrix labels;

  std::size_t length() const { return steps.size(); }
  std::size_t count() const { return labels.cols(); }
  std::size_t input_dim() const { return steps.empty() ? 0 : steps[0].rows(); }
  std::size_t output_dim() const { return labels.rows(); }

  // Sequence i as an n x length matrix (column t is x_{t+1}).
  Matrix sequence(std::size_t i) const;
};

// Labeled training or evaluation data, possibly mixing several lengths.
struct LabeledDataset {
  std::vector<SequenceGroup> groups;
  std::string provenance;  // teacher description
  bool adversarial = false;
  std::uint64_t seed = 0;

  // Total number of sequences across groups.
  std::size_t size() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;

  // Throws DomainError when empty and DimensionError on inconsistent shapes.
  void validate() const;
};

// Binary layout (little-endian):
//   "EXDS" magic, u32 version = 1, u64 group count, u8 adversarial, u64 seed,
//   u64 provenance byte count + bytes; then per group
//   u64 length, u64 N, u64 n, u64 m, followed by N records of
//   length*n inputs (time-major) and m labels, as f64.
void write_dataset_binary(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset_binary(std::istream& in);

// CSV layout: a "# provenance=..., adversarial=..., seed=..." comment line,
// then per group a "#group,length,N,n,m" header line followed by N rows of
// length*n inputs (time-major) and m labels, 17 significant digits.
void write_dataset_csv(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset_csv(std::istream& in);

}  // namespace extrap

#endif  // EXTRAP_DATASET_H_
