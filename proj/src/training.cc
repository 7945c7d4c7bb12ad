#include "extrap/training.h"

#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include <fmt/format.h>

#include "extrap/rng.h"

namespace extrap {

void InitSpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw PreconditionError(
        fmt::format("init variance must be positive, got {}", variance),
        variance);
  }
  if (alpha && !std::isfinite(*alpha)) {
    throw PreconditionError("init alpha must be finite");
  }
  if (sign != 1 && sign != -1) {
    throw PreconditionError(fmt::format("init sign must be +1 or -1, got {}", sign));
  }
  if (scheme == InitScheme::kIdentityScaled && !alpha) {
    throw PreconditionError("identity-scaled init requires alpha");
  }
  if (scheme == InitScheme::kExplicit && !weights) {
    throw PreconditionError("explicit init requires weights");
  }
}

LinearRNN init(std::size_t d, std::size_t n, std::size_t m,
               const InitSpec& spec) {
  if (d == 0 || n == 0 || m == 0) {
    throw PreconditionError("init dimensions must be positive");
  }
  spec.validate();
  const CounterRng rng(spec.seed);
  std::uint64_t counter = 0;
  auto gaussian = [&](std::size_t rows, std::size_t cols, double variance) {
    Matrix out(rows, cols);
    const double sd = std::sqrt(variance);
    for (double& e : out.data()) e = sd * rng.normal(counter++);
    return out;
  };
  const double sigma = std::sqrt(spec.variance);

  switch (spec.scheme) {
    case InitScheme::kSymmetric: {
      if (n != m) {
        throw PreconditionError(fmt::format(
            "symmetric init needs n == m, got n={} m={}", n, m));
      }
      Matrix a = spec.alpha ? *spec.alpha * Matrix::identity(d) : Matrix();
      if (!spec.alpha) {
        const Matrix g = gaussian(d, d, 1.0);
        a = (0.5 * sigma) * (g + transpose(g));
      }
      Matrix c = gaussian(m, d, spec.variance);
      Matrix b = static_cast<double>(spec.sign) * transpose(c);
      return LinearRNN(std::move(a), std::move(b), std::move(c));
    }
    case InitScheme::kXavier: {
      auto xavier = [](std::size_t fan_in, std::size_t fan_out) {
        return 2.0 / static_cast<double>(fan_in + fan_out);
      };
      Matrix a = gaussian(d, d, xavier(d, d));
      Matrix c = gaussian(m, d, xavier(d, m));
      Matrix b = gaussian(d, n, xavier(n, d));
      return LinearRNN(std::move(a), std::move(b), std::move(c));
    }
    case InitScheme::kIdentityScaled: {
      Matrix a = *spec.alpha * Matrix::identity(d);
      Matrix c = gaussian(m, d, spec.variance);
      Matrix b = gaussian(d, n, spec.variance);
      return LinearRNN(std::move(a), std::move(b), std::move(c));
    }
    case InitScheme::kExplicit: {
      const LinearRNN& w = *spec.weights;
      if (w.state_dim() != d || w.input_dim() != n || w.output_dim() != m) {
        throw PreconditionError(fmt::format(
            "explicit weights have (d,n,m)=({},{},{}), expected ({},{},{})",
            w.state_dim(), w.input_dim(), w.output_dim(), d, n, m));
      }
      return w;
    }
  }
  throw PreconditionError("unknown init scheme");
}

void OptimizerSpec::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw PreconditionError(fmt::format("learning rate must be positive, got {}", lr), lr);
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw PreconditionError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon >= 0.0)) {
    throw PreconditionError("Adam epsilon must be nonnegative");
  }
}

LinearRNN gd_step(const LinearRNN& model, const GradTriple& grads, double lr) {
  LinearRNN next = model;
  next.A.add_scaled(grads.dA, -lr);
  next.B.add_scaled(grads.dB, -lr);
  next.C.add_scaled(grads.dC, -lr);
  return next;
}

void adam_update(std::span<Matrix> params, std::span<const Matrix> grads,
                 AdamState& state, const OptimizerSpec& spec) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_update: parameter and gradient counts differ");
  }
  if (state.first.empty()) {
    for (const Matrix& p : params) {
      state.first.emplace_back(p.rows(), p.cols());
      state.second.emplace_back(p.rows(), p.cols());
    }
  }
  if (state.first.size() != params.size()) {
    throw DimensionError("adam_update: state does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double first_correction = 1.0 - std::pow(spec.beta1, t);
  const double second_correction = 1.0 - std::pow(spec.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    require_same_shape(params[b], grads[b], "adam_update");
    require_same_shape(params[b], state.first[b], "adam_update state");
    auto w = params[b].data();
    auto g = grads[b].data();
    auto m = state.first[b].data();
    auto v = state.second[b].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g[i];
      v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g[i] * g[i];
      const double m_hat = m[i] / first_correction;
      const double v_hat = v[i] / second_correction;
      w[i] -= spec.lr * m_hat / (std::sqrt(v_hat) + spec.adam_epsilon);
    }
    require_finite(params[b], "adam_update");
  }
}

LinearRNN adam_step(const LinearRNN& model, const GradTriple& grads,
                    AdamState& state, const OptimizerSpec& spec) {
  std::vector<Matrix> params{model.A, model.B, model.C};
  const std::vector<Matrix> g{grads.dA, grads.dB, grads.dC};
  adam_update(params, g, state, spec);
  return LinearRNN(std::move(params[0]), std::move(params[1]),
                   std::move(params[2]));
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kConverged:
      return "converged";
    case StopReason::kMaxSteps:
      return "max_steps";
    case StopReason::kLineSearchFailed:
      return "line_search_failed";
  }
  return "unknown";
}

TrainStep measure(std::uint64_t step, double loss, const LinearRNN& model) {
  TrainStep s;
  s.step = step;
  s.loss = loss;
  s.norm_A = frobenius_norm(model.A);
  s.norm_B = frobenius_norm(model.B);
  s.norm_C = frobenius_norm(model.C);
  s.asym_A = frobenius_norm(model.A - transpose(model.A));
  s.asym_BC = model.input_dim() == model.output_dim()
                  ? frobenius_norm(model.B - transpose(model.C))
                  : std::numeric_limits<double>::quiet_NaN();
  return s;
}

namespace {

// Uniform access to the three kinds of training objective.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual void prepare(std::uint64_t /*step*/) {}
  virtual double loss(const LinearRNN& model) const = 0;
  virtual LossAndGrad loss_and_grad(const LinearRNN& model) const = 0;
};

class PopulationEvaluator final : public Evaluator {
 public:
  explicit PopulationEvaluator(const PopulationObjective& objective)
      : objective_(objective) {}
  double loss(const LinearRNN& model) const override {
    return population_loss(model, objective_.teacher, objective_.k);
  }
  LossAndGrad loss_and_grad(const LinearRNN& model) const override {
    return LossAndGrad{loss(model),
                       population_grad(model, objective_.teacher, objective_.k)};
  }

 private:
  const PopulationObjective& objective_;
};

class DatasetEvaluator final : public Evaluator {
 public:
  explicit DatasetEvaluator(const LabeledDataset& data) : data_(&data) {}
  double loss(const LinearRNN& model) const override {
    return empirical_loss(model, *data_);
  }
  LossAndGrad loss_and_grad(const LinearRNN& model) const override {
    return empirical_loss_and_grad(model, *data_);
  }

 private:
  const LabeledDataset* data_;
};

class SampledEvaluator final : public Evaluator {
 public:
  explicit SampledEvaluator(const SampledObjective& objective)
      : objective_(objective) {}
  void prepare(std::uint64_t step) override { batch_ = objective_.batch(step); }
  double loss(const LinearRNN& model) const override {
    return empirical_loss(model, batch_);
  }
  LossAndGrad loss_and_grad(const LinearRNN& model) const override {
    return empirical_loss_and_grad(model, batch_);
  }

 private:
  const SampledObjective& objective_;
  LabeledDataset batch_;
};

std::unique_ptr<Evaluator> make_evaluator(const TrainingSource& source) {
  if (const auto* p = std::get_if<PopulationObjective>(&source)) {
    return std::make_unique<PopulationEvaluator>(*p);
  }
  if (const auto* d = std::get_if<LabeledDataset>(&source)) {
    return std::make_unique<DatasetEvaluator>(*d);
  }
  const auto& s = std::get<SampledObjective>(source);
  if (!s.batch) throw PreconditionError("sampled objective without a sampler");
  return std::make_unique<SampledEvaluator>(s);
}

bool is_divergent(double loss) {
  return !std::isfinite(loss) || loss > kDivergenceLoss;
}

}  // namespace

TrainRecord train(const LinearRNN& model0, const TrainingSource& source,
                  const OptimizerSpec& spec, std::uint64_t record_every) {
  spec.validate();
  if (record_every == 0) record_every = 1;
  const auto evaluator = make_evaluator(source);

  TrainRecord record;
  record.final_model = model0;
  LinearRNN model = model0;
  AdamState adam;

  for (std::uint64_t step = 0;; ++step) {
    evaluator->prepare(step);
    LossAndGrad current;
    try {
      current = evaluator->loss_and_grad(model);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(
          fmt::format("non-finite value at step {}: {}", step, e.what()),
          record);
    }
    if (is_divergent(current.loss)) {
      throw DivergenceError(
          fmt::format("loss {:g} at step {} exceeds divergence guard",
                      current.loss, step),
          record);
    }

    const bool converged = current.loss <= spec.stop_tol;
    const bool exhausted = step >= spec.max_steps;
    if (step % record_every == 0 || converged || exhausted) {
      record.steps.push_back(measure(step, current.loss, model));
    }
    record.final_model = model;
    record.final_loss = current.loss;
    record.steps_taken = step;
    if (converged) {
      record.stop_reason = StopReason::kConverged;
      break;
    }
    if (exhausted) {
      record.stop_reason = StopReason::kMaxSteps;
      break;
    }

    try {
      switch (spec.kind) {
        case OptimizerKind::kGd:
          model = gd_step(model, current.grad, spec.lr);
          break;
        case OptimizerKind::kAdam:
          model = adam_step(model, current.grad, adam, spec);
          break;
        case OptimizerKind::kGdBacktracking: {
          const double slope = current.grad.squared_norm();
          double lr = spec.lr;
          bool accepted = false;
          for (int h = 0; h <= kArmijoMaxHalvings && !accepted; ++h) {
            try {
              LinearRNN candidate = gd_step(model, current.grad, lr);
              const double trial = evaluator->loss(candidate);
              if (trial <= current.loss - kArmijoC * lr * slope) {
                model = std::move(candidate);
                accepted = true;
              }
            } catch (const NonFiniteError&) {
              // overshoot; shrink and retry
            }
            lr *= kArmijoShrink;
          }
          if (!accepted) {
            record.stop_reason = StopReason::kLineSearchFailed;
            return record;
          }
          break;
        }
      }
    } catch (const NonFiniteError& e) {
      throw DivergenceError(
          fmt::format("non-finite weight after step {}: {}", step, e.what()),
          record);
    }
  }
  return record;
}

LinearRNN make_cyclic_bad(std::size_t d, std::size_t k,
                          const MemorylessTeacher& teacher) {
  if (k < 2 || d < k) {
    throw PreconditionError(
        fmt::format("cyclic construction needs d >= k >= 2, got d={} k={}", d, k));
  }
  const Matrix& w = teacher.gain;
  // Rank-one factorization W* = c b^T pivoted on the largest entry.
  std::size_t pr = 0;
  std::size_t pc = 0;
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c)
      if (std::abs(w(r, c)) > std::abs(w(pr, pc))) {
        pr = r;
        pc = c;
      }
  Matrix b(d, w.cols());
  Matrix c(w.rows(), d);
  for (std::size_t j = 0; j < w.cols(); ++j) b(0, j) = w(pr, j) / w(pr, pc);
  for (std::size_t i = 0; i < w.rows(); ++i) c(i, 0) = w(i, pc);
  const double residual = frobenius_norm(c * b - w);
  if (residual > 1e-12 * frobenius_norm(w)) {
    throw PreconditionError("cyclic construction needs a rank-one W*",
                            residual);
  }
  Matrix a(d, d);
  a(0, d - 1) = 1.0;
  for (std::size_t i = 1; i < d; ++i) a(i, i - 1) = 1.0;
  return LinearRNN(std::move(a), std::move(b), std::move(c));
}

LinearRNN make_diag_bad(std::size_t k, std::size_t d, double w_star,
                        double delta) {
  if (k < 2 || d < k) {
    throw PreconditionError(
        fmt::format("diagonal construction needs d >= k >= 2, got d={} k={}", d, k));
  }
  if (!(w_star > 0.0)) throw PreconditionError("diagonal construction needs w* > 0", w_star);
  if (!(delta > 0.0)) throw PreconditionError("diagonal construction needs delta > 0", delta);
  Matrix c(1, d);
  c(0, 0) = std::sqrt(w_star);
  c(0, d - 1) = std::sqrt(delta);
  Matrix a(d, d);
  a(d - 1, d - 1) = 2.0;
  Matrix b = transpose(c);
  return LinearRNN(std::move(a), std::move(b), std::move(c));
}

}  // namespace extrap
