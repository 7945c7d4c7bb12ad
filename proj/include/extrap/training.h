#ifndef EXTRAP_TRAINING_H_
#define EXTRAP_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "extrap/dataset.h"
#include "extrap/errors.h"
#include "extrap/linalg.h"
#include "extrap/model.h"
#include "extrap/objective.h"

namespace extrap {

enum class InitScheme { kSymmetric, kXavier, kIdentityScaled, kExplicit };

struct InitSpec {
  InitScheme scheme = InitScheme::kSymmetric;
  // A_0 = alpha I. Required for kIdentityScaled; optional for kSymmetric,
  // where it replaces the symmetrized Gaussian A_0.
  std::optional<double> alpha;
  double variance = 1.0;  // sigma^2 for Gaussian draws
  int sign = +1;          // B_0 = sign * C_0^T for kSymmetric
  std::uint64_t seed = 0;
  std::optional<LinearRNN> weights;  // kExplicit only

  // Throws PreconditionError on invalid parameters.
  void validate() const;
};

// Draw order on CounterRng(seed): A entries row-major, then C, then B.
//   kSymmetric:      A = sigma (G + G^T)/2 (or alpha I), C ~ N(0, sigma^2),
//                    B = sign C^T. Requires n == m.
//   kXavier:         every weight N(0, 2/(fan_in + fan_out)), independent.
//   kIdentityScaled: A = alpha I, B and C ~ N(0, sigma^2) independent.
//   kExplicit:       spec.weights, checked against (d, n, m).
LinearRNN init(std::size_t d, std::size_t n, std::size_t m,
               const InitSpec& spec);

enum class OptimizerKind { kGd, kGdBacktracking, kAdam };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kGd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-7;
  std::uint64_t max_steps = 10000;
  double stop_tol = 0.0;  // stop once loss <= stop_tol

  void validate() const;
};

inline constexpr double kArmijoShrink = 0.5;
inline constexpr double kArmijoC = 1e-4;
inline constexpr int kArmijoMaxHalvings = 60;
inline constexpr double kDivergenceLoss = 1e12;

// W <- W - lr * dW for each block.
LinearRNN gd_step(const LinearRNN& model, const GradTriple& grads, double lr);

// First/second moment estimates for a list of parameter blocks.
struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::uint64_t step = 0;
};

// Bias-corrected Adam update of `params` in place. An empty state is
// initialized to zeros on first use.
void adam_update(std::span<Matrix> params, std::span<const Matrix> grads,
                 AdamState& state, const OptimizerSpec& spec);

LinearRNN adam_step(const LinearRNN& model, const GradTriple& grads,
                    AdamState& state, const OptimizerSpec& spec);

// One recorded point of a training trajectory.
struct TrainStep {
  std::uint64_t step = 0;
  double loss = 0.0;
  double norm_A = 0.0;
  double norm_B = 0.0;
  double norm_C = 0.0;
  double asym_A = 0.0;   // ||A - A^T||_F
  double asym_BC = 0.0;  // ||B - C^T||_F, NaN when n != m
};

enum class StopReason { kConverged, kMaxSteps, kLineSearchFailed };
std::string to_string(StopReason reason);

struct TrainRecord {
  std::vector<TrainStep> steps;
  LinearRNN final_model;
  std::uint64_t steps_taken = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
  double final_loss = 0.0;
};

TrainStep measure(std::uint64_t step, double loss, const LinearRNN& model);

// Raised when the loss exceeds 1e12 or a weight becomes non-finite. Carries
// the trajectory up to the last finite record.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainRecord partial)
      : Error(what), partial_(std::move(partial)) {}
  const TrainRecord& partial() const { return partial_; }

 private:
  TrainRecord partial_;
};

// Closed-form objective of a memoryless teacher at sequence length k.
struct PopulationObjective {
  MemorylessTeacher teacher;
  std::size_t k = 2;
};

// Fresh data at every optimizer step; batch(step) must be deterministic.
struct SampledObjective {
  std::function<LabeledDataset(std::uint64_t step)> batch;
};

using TrainingSource =
    std::variant<PopulationObjective, LabeledDataset, SampledObjective>;

// Optimizes until loss <= stop_tol or max_steps updates. The loss at step t
// is evaluated before update t; steps divisible by record_every and the
// final step are recorded. Backtracking uses Armijo halving from spec.lr on
// the same data as the gradient.
TrainRecord train(const LinearRNN& model0, const TrainingSource& source,
                  const OptimizerSpec& spec, std::uint64_t record_every = 1);

// Zero-loss but non-extrapolating weights: A is the d x d cyclic down-shift,
// B = e_1 b^T and C = c e_1^T with W* = c b^T. For the scalar and the
// zero-padded MIMO case this is B = e_1, C = w* e_1^T. Requires d >= k >= 2
// and a rank-one W*.
LinearRNN make_cyclic_bad(std::size_t d, std::size_t k,
                          const MemorylessTeacher& teacher);

// Symmetric low-loss non-extrapolating weights: C = B^T =
// (sqrt(w*), 0, ..., 0, sqrt(delta)), A = diag(0, ..., 0, 2). Population
// loss is delta^2 (4^k - 1) / 6. Requires d >= k >= 2, w* > 0, delta > 0.
LinearRNN make_diag_bad(std::size_t k, std::size_t d, double w_star,
                        double delta);

}  // namespace extrap

#endif  // EXTRAP_TRAINING_H_
