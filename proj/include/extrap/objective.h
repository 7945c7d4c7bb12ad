#ifndef EXTRAP_OBJECTIVE_H_
#define EXTRAP_OBJECTIVE_H_

#include <cstddef>

#include "extrap/dataset.h"
#include "extrap/linalg.h"
#include "extrap/model.h"

namespace extrap {

// Teacher whose label depends only on the latest input: y = W* x_k.
struct MemorylessTeacher {
  Matrix gain;  // W*, m x n

  // Throws DomainError when W* is zero.
  explicit MemorylessTeacher(Matrix w_star);
  static MemorylessTeacher scalar(double w_star);

  bool operator==(const MemorylessTeacher&) const = default;
};

// Gradient of a loss with respect to (A, B, C).
struct GradTriple {
  Matrix dA;
  Matrix dB;
  Matrix dC;

  double squared_norm() const;
  // <this, other> summed over all three blocks.
  double dot(const GradTriple& other) const;
};

// E[1/2 ||y_hat - y||^2] under identity-covariance inputs of length k:
//   1/2 sum_{j=1}^{k-1} ||C A^j B||_F^2 + 1/2 ||CB - W*||_F^2.
// Throws DomainError for k < 2.
double population_loss(const LinearRNN& model,
                       const MemorylessTeacher& teacher, std::size_t k);

// Analytic gradient of population_loss. Powers A^i are formed once per call.
GradTriple population_grad(const LinearRNN& model,
                           const MemorylessTeacher& teacher, std::size_t k);

// (1/2N) sum_i ||forward(model, x_i) - y_i||^2 over every group.
double empirical_loss(const LinearRNN& model, const LabeledDataset& data);

// Reverse-mode gradient of empirical_loss through the recurrence.
GradTriple bptt_grad(const LinearRNN& model, const LabeledDataset& data);

struct LossAndGrad {
  double loss = 0.0;
  GradTriple grad;
};

// Both in one forward/backward pass.
LossAndGrad empirical_loss_and_grad(const LinearRNN& model,
                                    const LabeledDataset& data);

}  // namespace extrap

#endif  // EXTRAP_OBJECTIVE_H_
