#include "extrap/model.h"

#include <utility>

#include <fmt/format.h>

#include "extrap/errors.h"

namespace extrap {

LinearRNN::LinearRNN(Matrix a, Matrix b, Matrix c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
  if (!A.is_square() || A.empty()) {
    throw DimensionError(fmt::format("state transition must be square, got {}x{}",
                                     A.rows(), A.cols()));
  }
  if (B.rows() != A.rows()) {
    throw DimensionError(fmt::format("input weights have {} rows, state dim {}",
                                     B.rows(), A.rows()));
  }
  if (C.cols() != A.rows()) {
    throw DimensionError(fmt::format(
        "output weights have {} cols, state dim {}", C.cols(), A.rows()));
  }
}

LinearRNN scalar_rnn(double a, double b, double c) {
  return LinearRNN(Matrix(1, 1, a), Matrix(1, 1, b), Matrix(1, 1, c));
}

Sequence::Sequence(Matrix columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw DimensionError("empty sequence");
}

Sequence Sequence::scalar(std::initializer_list<double> values) {
  return Sequence(Matrix::row(std::span<const double>(values.begin(),
                                                      values.size())));
}

Sequence Sequence::scalar(std::span<const double> values) {
  return Sequence(Matrix::row(values));
}

Matrix Sequence::step(std::size_t t) const {
  Matrix x(dim(), 1);
  for (std::size_t c = 0; c < dim(); ++c) x(c, 0) = columns_(c, t);
  return x;
}

namespace {

void require_input_width(const LinearRNN& model, std::size_t n) {
  if (n != model.input_dim()) {
    throw DimensionError(fmt::format("input width {} but model expects {}", n,
                                     model.input_dim()));
  }
}

}  // namespace

Rollout rollout(const LinearRNN& model, const Sequence& x) {
  require_input_width(model, x.dim());
  Rollout out;
  out.states.reserve(x.length());
  out.outputs.reserve(x.length());
  Matrix s(model.state_dim(), 1);
  for (std::size_t t = 0; t < x.length(); ++t) {
    s = model.A * s + model.B * x.step(t);
    out.outputs.push_back(model.C * s);
    out.states.push_back(s);
  }
  return out;
}

Matrix forward(const LinearRNN& model, const Sequence& x) {
  require_input_width(model, x.dim());
  const std::size_t k = x.length();
  Matrix y(model.output_dim(), 1);
  Matrix lag_weight = model.C;  // C A^j
  for (std::size_t j = 0; j < k; ++j) {
    if (j > 0) lag_weight = lag_weight * model.A;
    y += lag_weight * (model.B * x.step(k - 1 - j));
  }
  return y;
}

Matrix forward_batch(const LinearRNN& model, std::span<const Matrix> steps) {
  if (steps.empty()) throw DimensionError("empty batch");
  const std::size_t batch = steps.front().cols();
  Matrix s(model.state_dim(), batch);
  for (const Matrix& x : steps) {
    require_input_width(model, x.rows());
    if (x.cols() != batch) throw DimensionError("ragged batch");
    s = model.A * s + model.B * x;
  }
  return model.C * s;
}

std::vector<Matrix> impulse_response(const LinearRNN& model,
                                     std::size_t horizon) {
  std::vector<Matrix> out;
  out.reserve(horizon + 1);
  Matrix propagated = model.B;  // A^j B
  for (std::size_t j = 0; j <= horizon; ++j) {
    if (j > 0) propagated = model.A * propagated;
    out.push_back(model.C * propagated);
  }
  return out;
}

}  // namespace extrap
