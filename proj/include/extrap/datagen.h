#ifndef EXTRAP_DATAGEN_H_
#define EXTRAP_DATAGEN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "extrap/dataset.h"
#include "extrap/linalg.h"
#include "extrap/model.h"
#include "extrap/objective.h"

namespace extrap {

// Teacher with memory: a linear dynamical system (A*, B*, C*).
struct LdsTeacher {
  LinearRNN system;
};

using Teacher = std::variant<MemorylessTeacher, LdsTeacher>;

std::size_t input_dim(const Teacher& teacher);
std::size_t output_dim(const Teacher& teacher);
std::string describe(const Teacher& teacher);

// Lags 0..horizon of the teacher's impulse response. A memoryless teacher
// contributes W* at lag 0 and zeros afterwards.
std::vector<Matrix> teacher_impulse_response(const Teacher& teacher,
                                             std::size_t horizon);

inline constexpr double kLdsSpectralRadius = 0.7;

// Random LDS teacher of state dimension `state_dim`. A* has N(0, 1/d*)
// entries rescaled to spectral radius 0.7; B* and C* have N(0, 1) entries
// and are scaled by a common factor so the output variance at length k,
// sum_{j<k} ||C* A*^j B*||_F^2, equals 1. Draw order: A* row-major, then B*,
// then C*, on one CounterRng(seed) stream.
LdsTeacher make_lds_teacher(std::size_t state_dim, std::size_t k,
                            std::uint64_t seed, std::size_t n = 1,
                            std::size_t m = 1);

// N i.i.d. standard normal sequences of the given length and width.
// Entry c of x_{t+1} of sequence i uses normal draw ((i * length + t) * n + c)
// of CounterRng(seed). Returned time-major: result[t] is n x N.
std::vector<Matrix> sample_sequences(std::size_t count, std::size_t length,
                                     std::size_t n, std::uint64_t seed);

// Teacher output on each sequence of a time-major batch; m x N.
Matrix label(const Teacher& teacher, std::span<const Matrix> steps);

// One group of `count` honest sequences of length k.
LabeledDataset make_honest(const Teacher& teacher, std::size_t k,
                           std::size_t count, std::uint64_t seed);

// How labels of sequences longer than k are corrupted, with T(x_1..x_l)
// the honest teacher output:
//   kEcho:  y = T(x_1..x_l) + T(x_1..x_{l-k})
//   kShift: y = T(x_1..x_{l-k})
// For a memoryless teacher these are W*(x_l + x_{l-k}) and W* x_{l-k}.
enum class CorruptionRule { kEcho, kShift };

// Corrupted label of a length-l batch (l > k) under `rule`; m x N.
Matrix adversarial_label(const Teacher& teacher, std::size_t k,
                         std::span<const Matrix> steps, CorruptionRule rule);

// Groups of lengths k..l_adv with n_per_length sequences each. The length-k
// group is labeled honestly; longer groups per `rule`. Group l uses
// sub-seed derive_seed(seed, l). Throws PreconditionError unless l_adv > k.
LabeledDataset make_adversarial(const Teacher& teacher, std::size_t k,
                                std::size_t l_adv, std::size_t n_per_length,
                                std::uint64_t seed,
                                CorruptionRule rule = CorruptionRule::kEcho);

}  // namespace extrap

#endif  // EXTRAP_DATAGEN_H_
