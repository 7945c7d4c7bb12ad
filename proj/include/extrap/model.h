#ifndef EXTRAP_MODEL_H_
#define EXTRAP_MODEL_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "extrap/linalg.h"

namespace extrap {

// Linear recurrent network s_{t+1} = A s_t + B x_{t+1}, y_t = C s_t, s_0 = 0.
struct LinearRNN {
  Matrix A;  // d x d
  Matrix B;  // d x n
  Matrix C;  // m x d

  LinearRNN() = default;
  // Throws DimensionError on incoherent shapes.
  LinearRNN(Matrix a, Matrix b, Matrix c);

  std::size_t state_dim() const { return A.rows(); }
  std::size_t input_dim() const { return B.cols(); }
  std::size_t output_dim() const { return C.rows(); }
  bool is_siso() const { return input_dim() == 1 && output_dim() == 1; }

  bool operator==(const LinearRNN&) const = default;
};

// Single-channel scalar system (a, b, c).
LinearRNN scalar_rnn(double a, double b, double c);

// One input sequence x_1..x_k stored as an n x k matrix; column t is x_{t+1}.
class Sequence {
 public:
  explicit Sequence(Matrix columns);
  // Scalar (n = 1) sequence.
  static Sequence scalar(std::initializer_list<double> values);
  static Sequence scalar(std::span<const double> values);

  std::size_t length() const { return columns_.cols(); }
  std::size_t dim() const { return columns_.rows(); }
  // x_{t+1} as an n x 1 column, t in [0, length).
  Matrix step(std::size_t t) const;
  const Matrix& columns() const { return columns_; }

 private:
  Matrix columns_;
};

struct Rollout {
  std::vector<Matrix> states;   // s_1..s_k, each d x 1
  std::vector<Matrix> outputs;  // y_1..y_k, each m x 1
};

// Runs the state recurrence; throws DimensionError on input width mismatch.
Rollout rollout(const LinearRNN& model, const Sequence& x);

// Final output y_k = sum_i C A^{k-i} B x_i, evaluated as a convolution with a
// running product C A^j (never a fresh power per lag).
Matrix forward(const LinearRNN& model, const Sequence& x);

// Final outputs for a batch. steps[t] is n x N and holds x_{t+1} for every
// sequence (one per column). Returns m x N.
Matrix forward_batch(const LinearRNN& model, std::span<const Matrix> steps);

// [C A^j B for j = 0..horizon].
std::vector<Matrix> impulse_response(const LinearRNN& model,
                                     std::size_t horizon);

}  // namespace extrap

#endif  // EXTRAP_MODEL_H_
