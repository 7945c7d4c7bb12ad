#include "extrap/objective.h"

#include <utility>
#include <vector>

#include <fmt/format.h>

#include "extrap/errors.h"

namespace extrap {

MemorylessTeacher::MemorylessTeacher(Matrix w_star) : gain(std::move(w_star)) {
  if (gain.empty() || max_abs(gain) == 0.0) {
    throw DomainError("memoryless teacher gain must be nonzero");
  }
}

MemorylessTeacher MemorylessTeacher::scalar(double w_star) {
  return MemorylessTeacher(Matrix(1, 1, w_star));
}

double GradTriple::squared_norm() const {
  return extrap::squared_norm(dA) + extrap::squared_norm(dB) +
         extrap::squared_norm(dC);
}

double GradTriple::dot(const GradTriple& other) const {
  auto block = [](const Matrix& x, const Matrix& y) {
    require_same_shape(x, y, "GradTriple::dot");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i] * y.data()[i];
    return s;
  };
  return block(dA, other.dA) + block(dB, other.dB) + block(dC, other.dC);
}

namespace {

void require_population_args(const LinearRNN& model,
                             const MemorylessTeacher& teacher, std::size_t k) {
  if (k < 2) {
    throw DomainError(fmt::format("population loss needs k >= 2, got {}", k));
  }
  if (teacher.gain.rows() != model.output_dim() ||
      teacher.gain.cols() != model.input_dim()) {
    throw DimensionError(fmt::format(
        "teacher gain is {}x{} but model maps {} inputs to {} outputs",
        teacher.gain.rows(), teacher.gain.cols(), model.input_dim(),
        model.output_dim()));
  }
}

// A^0 .. A^{count-1}.
std::vector<Matrix> powers(const Matrix& a, std::size_t count) {
  std::vector<Matrix> out;
  out.reserve(count);
  out.push_back(Matrix::identity(a.rows()));
  for (std::size_t i = 1; i < count; ++i) out.push_back(out.back() * a);
  return out;
}

}  // namespace

double population_loss(const LinearRNN& model,
                       const MemorylessTeacher& teacher, std::size_t k) {
  require_population_args(model, teacher, k);
  double lag_sum = 0.0;
  Matrix propagated = model.B;  // A^j B
  for (std::size_t j = 1; j < k; ++j) {
    propagated = model.A * propagated;
    lag_sum += squared_norm(model.C * propagated);
  }
  const Matrix gap = model.C * model.B - teacher.gain;
  return 0.5 * lag_sum + 0.5 * squared_norm(gap);
}

GradTriple population_grad(const LinearRNN& model,
                           const MemorylessTeacher& teacher, std::size_t k) {
  require_population_args(model, teacher, k);
  const std::vector<Matrix> pow = powers(model.A, k);
  std::vector<Matrix> pow_t;
  pow_t.reserve(k);
  for (const auto& p : pow) pow_t.push_back(transpose(p));
  const Matrix c_t = transpose(model.C);
  const Matrix b_t = transpose(model.B);

  const Matrix gap = model.C * model.B - teacher.gain;
  GradTriple g{Matrix(model.A.rows(), model.A.cols()), c_t * gap,
               gap * b_t};
  // Mirrored running products u = C A^i, v = A^i B: for A = A^T, B = C^T
  // they are exact transposes, so dB = dC^T holds bitwise in SISO.
  Matrix u = model.C;
  Matrix v = model.B;
  for (std::size_t i = 1; i < k; ++i) {
    u = u * model.A;
    v = model.A * v;
    const Matrix lag = model.C * v;  // C A^i B
    g.dB += transpose(u) * lag;
    g.dC += lag * transpose(v);
    const Matrix core = c_t * lag * b_t;  // C^T C A^i B B^T
    for (std::size_t r = 0; r < i; ++r) {
      g.dA += pow_t[r] * core * pow_t[i - r - 1];
    }
  }
  return g;
}

namespace {

// Loss sum (not yet divided by N) and, optionally, gradient sums.
struct Accumulator {
  double loss_sum = 0.0;
  GradTriple grad;
};

Accumulator accumulate(const LinearRNN& model, const LabeledDataset& data,
                       bool want_grad) {
  data.validate();
  if (data.input_dim() != model.input_dim() ||
      data.output_dim() != model.output_dim()) {
    throw DimensionError(fmt::format(
        "dataset maps {} inputs to {} outputs, model {} to {}",
        data.input_dim(), data.output_dim(), model.input_dim(),
        model.output_dim()));
  }
  Accumulator acc;
  if (want_grad) {
    acc.grad = GradTriple{Matrix(model.A.rows(), model.A.cols()),
                          Matrix(model.B.rows(), model.B.cols()),
                          Matrix(model.C.rows(), model.C.cols())};
  }
  const Matrix a_t = transpose(model.A);
  const Matrix c_t = transpose(model.C);
  for (const auto& group : data.groups) {
    const std::size_t length = group.length();
    // states[t] = s_t for t = 0..length, s_0 = 0.
    std::vector<Matrix> states;
    states.reserve(length + 1);
    states.emplace_back(model.state_dim(), group.count());
    for (std::size_t t = 0; t < length; ++t) {
      states.push_back(model.A * states.back() + model.B * group.steps[t]);
    }
    const Matrix residual = model.C * states.back() - group.labels;
    acc.loss_sum += 0.5 * squared_norm(residual);
    if (!want_grad) continue;

    acc.grad.dC += residual * transpose(states.back());
    Matrix adjoint = c_t * residual;  // dL/ds_t
    for (std::size_t t = length; t-- > 0;) {
      acc.grad.dB += adjoint * transpose(group.steps[t]);
      if (t > 0) {
        acc.grad.dA += adjoint * transpose(states[t]);
        adjoint = a_t * adjoint;
      }
    }
  }
  return acc;
}

}  // namespace

double empirical_loss(const LinearRNN& model, const LabeledDataset& data) {
  const Accumulator acc = accumulate(model, data, false);
  return acc.loss_sum / static_cast<double>(data.size());
}

LossAndGrad empirical_loss_and_grad(const LinearRNN& model,
                                    const LabeledDataset& data) {
  Accumulator acc = accumulate(model, data, true);
  const double inv = 1.0 / static_cast<double>(data.size());
  acc.grad.dA *= inv;
  acc.grad.dB *= inv;
  acc.grad.dC *= inv;
  return LossAndGrad{acc.loss_sum / static_cast<double>(data.size()),
                     std::move(acc.grad)};
}

GradTriple bptt_grad(const LinearRNN& model, const LabeledDataset& data) {
  return empirical_loss_and_grad(model, data).grad;
}

}  // namespace extrap
