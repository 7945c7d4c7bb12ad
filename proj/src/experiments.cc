#include "extrap/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "extrap/errors.h"
#include "extrap/nonlinear.h"
#include "extrap/rng.h"

namespace extrap {

namespace {

// Sub-stream labels under the experiment seed.
constexpr std::uint64_t kTeacherStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kDataStream = 3;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kAlphaStream = 5;

std::uint64_t run_tag(ModelKind kind, bool adversarial) {
  return 2 * static_cast<std::uint64_t>(kind) + (adversarial ? 1 : 0);
}

std::vector<std::size_t> range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> out(last - first + 1);
  std::iota(out.begin(), out.end(), first);
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& render) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += render(items[i]);
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& items) {
  return join(items, [](std::size_t v) { return std::to_string(v); });
}

SampledObjective sampled_source(const ExperimentSpec& spec,
                                const Teacher& teacher, bool adversarial,
                                std::uint64_t data_seed) {
  const std::size_t per_length = adversarial_per_length(spec);
  return SampledObjective{[=, &spec](std::uint64_t step) {
    const std::uint64_t seed = derive_seed(data_seed, step);
    if (adversarial) {
      return make_adversarial(teacher, spec.k, spec.l_adv, per_length, seed);
    }
    return make_honest(teacher, spec.k, spec.batch, seed);
  }};
}

std::optional<double> resolve_alpha(const ExperimentSpec& spec) {
  if (spec.init.alpha) return spec.init.alpha;
  if (!spec.random_alpha) return std::nullopt;
  return CounterRng(derive_seed(spec.seed, kAlphaStream)).uniform(0);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kGru: return "gru";
    case ModelKind::kLstm: return "lstm";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "gru") return ModelKind::kGru;
  if (name == "lstm") return ModelKind::kLstm;
  throw PreconditionError("model: unknown kind '" + name + "'");
}

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kSymmetric: return "symmetric";
    case InitScheme::kXavier: return "xavier";
    case InitScheme::kIdentityScaled: return "identity";
    case InitScheme::kExplicit: return "explicit";
  }
  return "?";
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "symmetric") return InitScheme::kSymmetric;
  if (name == "xavier") return InitScheme::kXavier;
  if (name == "identity") return InitScheme::kIdentityScaled;
  throw PreconditionError("init: unknown scheme '" + name + "'");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kGd: return "gd";
    case OptimizerKind::kGdBacktracking: return "gd-backtracking";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "gd") return OptimizerKind::kGd;
  if (name == "gd-backtracking") return OptimizerKind::kGdBacktracking;
  if (name == "adam") return OptimizerKind::kAdam;
  throw PreconditionError("optimizer: unknown kind '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (models.empty()) throw PreconditionError("models: empty list");
  if (d == 0) throw PreconditionError("d: must be >= 1");
  if (k < 2) throw PreconditionError("k: must be >= 2");
  if (w_star == 0.0 || !std::isfinite(w_star)) {
    throw PreconditionError("wstar: must be finite and nonzero");
  }
  if (batch == 0) throw PreconditionError("batch: must be >= 1");
  if (n_mc < 2) throw PreconditionError("n-mc: must be >= 2");
  for (std::size_t l : lengths) {
    if (l == 0) throw PreconditionError("lengths: entries must be >= 1");
  }
  for (std::size_t ds : d_stars) {
    if (ds == 0) throw PreconditionError("dstar: entries must be >= 1");
  }
  if (adversarial && l_adv <= k) {
    throw PreconditionError("l-adv: must exceed k");
  }
  if (record_every == 0) throw PreconditionError("record-every: must be >= 1");
  InitSpec resolved = init;
  if (!resolved.alpha && random_alpha) resolved.alpha = 0.5;
  try {
    resolved.validate();
  } catch (const PreconditionError& e) {
    throw PreconditionError(std::string("init: ") + e.what());
  }
  try {
    optimizer.validate();
  } catch (const PreconditionError& e) {
    throw PreconditionError(std::string("optimizer: ") + e.what());
  }
}

std::string ExperimentSpec::canonical() const {
  std::string alpha = "none";
  if (init.alpha) {
    alpha = format_real(*init.alpha);
  } else if (random_alpha) {
    alpha = "random";
  }
  std::string out;
  auto line = [&out](const char* key, const std::string& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  line("id", id);
  line("models", join(models, [](ModelKind m) { return to_string(m); }));
  line("d", std::to_string(d));
  line("k", std::to_string(k));
  line("wstar", format_real(w_star));
  line("dstar", std::to_string(d_star));
  line("dstars", join_sizes(d_stars));
  line("init", to_string(init.scheme));
  line("alpha", alpha);
  line("variance", format_real(init.variance));
  line("sign", std::to_string(init.sign));
  line("optimizer", to_string(optimizer.kind));
  line("lr", format_real(optimizer.lr));
  line("beta1", format_real(optimizer.beta1));
  line("beta2", format_real(optimizer.beta2));
  line("adam_epsilon", format_real(optimizer.adam_epsilon));
  line("steps", std::to_string(optimizer.max_steps));
  line("stop_tol", format_real(optimizer.stop_tol));
  line("batch", std::to_string(batch));
  line("lengths", join_sizes(lengths));
  line("n_mc", std::to_string(n_mc));
  line("adversarial", adversarial ? "true" : "false");
  line("l_adv", std::to_string(l_adv));
  line("seed", std::to_string(seed));
  line("record_every", std::to_string(record_every));
  return out;
}

std::string ExperimentSpec::hash() const { return fnv1a_hex(canonical()); }

Provenance ExperimentSpec::provenance() const {
  Provenance p;
  p.spec_hash = hash();
  p.seed = seed;
  p.extra = {{"experiment", id},
             {"init", to_string(init.scheme)},
             {"optimizer", to_string(optimizer.kind)},
             {"lr", format_real(optimizer.lr)},
             {"steps", std::to_string(optimizer.max_steps)},
             {"batch", std::to_string(batch)}};
  return p;
}

ExperimentSpec default_spec(const std::string& id) {
  ExperimentSpec s;
  s.id = id;
  if (id == "fig1" || id == "fig2") {
    s.models = {ModelKind::kLinear, ModelKind::kGru, ModelKind::kLstm};
    s.d = 30;
    s.k = 5;
    s.d_star = id == "fig2" ? 3 : 0;
    s.init.scheme = InitScheme::kXavier;
    s.optimizer.kind = OptimizerKind::kAdam;
    s.optimizer.lr = 1e-3;
    s.optimizer.max_steps = 30000;
    s.lengths = range(1, 15);
    s.adversarial = true;
    s.l_adv = 10;
  } else if (id == "fig3" || id == "certify") {
    s.d = 10;
    s.k = 3;
    s.init.scheme = InitScheme::kSymmetric;
    s.init.variance = 0.01;
    s.random_alpha = true;
    s.optimizer.kind = OptimizerKind::kGdBacktracking;
    s.optimizer.lr = 0.05;
    s.optimizer.max_steps = 100000;
    s.optimizer.stop_tol = 1e-12;
    s.record_every = 1000;
    s.lengths = range(1, 15);
  } else if (id == "fig4") {
    s.d = 10;
    s.k = 5;
    s.init.scheme = InitScheme::kIdentityScaled;
    s.init.variance = 1e-5;
    s.random_alpha = true;
    s.optimizer.kind = OptimizerKind::kGd;
    s.optimizer.lr = 0.05;
    s.optimizer.max_steps = 5000;
    s.record_every = 10;
  } else if (id == "sweep-dstar") {
    s.d = 200;
    s.k = 5;
    s.d_stars = {1, 2, 4, 6, 8};
    s.init.scheme = InitScheme::kXavier;
    s.optimizer.kind = OptimizerKind::kAdam;
    s.optimizer.lr = 1e-3;
    s.optimizer.max_steps = 3000;
    s.lengths = range(6, 10);
  } else if (id == "train") {
    s.d = 10;
    s.k = 3;
    s.init.scheme = InitScheme::kSymmetric;
    s.init.variance = 0.01;
    s.optimizer.kind = OptimizerKind::kGdBacktracking;
    s.optimizer.lr = 0.05;
    s.optimizer.max_steps = 10000;
    s.optimizer.stop_tol = 1e-10;
    s.lengths = range(1, 15);
  } else if (id != "gradcheck" && id != "bad-solutions") {
    throw PreconditionError("unknown experiment '" + id + "'");
  }
  return s;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("EXTRAP_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw PreconditionError(
          fmt::format("EXTRAP_WORKERS must be a positive integer, got '{}'", env));
    }
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t adversarial_per_length(const ExperimentSpec& spec) {
  if (spec.l_adv <= spec.k) return spec.batch;
  const std::size_t lengths = spec.l_adv - spec.k + 1;
  return (spec.batch + lengths - 1) / lengths;
}

Teacher experiment_teacher(const ExperimentSpec& spec, std::size_t d_star) {
  if (d_star == 0) return MemorylessTeacher::scalar(spec.w_star);
  return make_lds_teacher(
      d_star, spec.k, derive_seed(derive_seed(spec.seed, kTeacherStream), d_star));
}

TrainedStudent train_student(const ExperimentSpec& spec, ModelKind kind,
                             const Teacher& teacher, bool adversarial) {
  const std::uint64_t tag = run_tag(kind, adversarial);
  const std::uint64_t init_seed =
      derive_seed(derive_seed(spec.seed, kInitStream), tag);
  const std::uint64_t data_seed =
      derive_seed(derive_seed(spec.seed, kDataStream), tag);
  const SampledObjective source =
      sampled_source(spec, teacher, adversarial, data_seed);
  const std::uint64_t record_every = std::max<std::uint64_t>(
      spec.optimizer.max_steps, 1);

  TrainedStudent out;
  out.kind = kind;
  out.adversarial = adversarial;
  if (kind == ModelKind::kLinear) {
    InitSpec is = spec.init;
    is.seed = init_seed;
    const LinearRNN model0 =
        init(spec.d, input_dim(teacher), output_dim(teacher), is);
    TrainRecord rec = train(model0, source, spec.optimizer, record_every);
    out.student = std::move(rec.final_model);
    out.final_loss = rec.final_loss;
    out.steps_taken = rec.steps_taken;
    out.stop_reason = rec.stop_reason;
    return out;
  }
  if (output_dim(teacher) != 1) {
    throw DimensionError("gated students have a scalar readout");
  }
  const CellKind cell_kind =
      kind == ModelKind::kGru ? CellKind::kGru : CellKind::kLstm;
  const GatedCell cell0 =
      make_xavier_cell(cell_kind, spec.d, input_dim(teacher), init_seed);
  CellTrainRecord rec = train_cell(cell0, source, spec.optimizer, record_every);
  out.student = std::move(rec.final_cell);
  out.final_loss = rec.final_loss;
  out.steps_taken = rec.steps_taken;
  out.stop_reason = rec.stop_reason;
  return out;
}

std::map<std::size_t, MseEstimate> evaluate_student(
    const ExperimentSpec& spec, const TrainedStudent& trained,
    const Teacher& teacher) {
  MseOptions options;
  if (trained.kind != ModelKind::kLinear) {
    options.mode = MseMode::kMonteCarlo;
    options.n_mc = spec.n_mc;
    options.seed = derive_seed(spec.seed, kEvalStream);
  }
  return extrapolation_mse(trained.student, teacher, spec.lengths, options);
}

CsvTable run_extrapolation(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.lengths.empty()) throw PreconditionError("lengths: empty list");
  const Teacher teacher = experiment_teacher(spec, spec.d_star);
  struct Job {
    ModelKind kind;
    bool adversarial;
  };
  std::vector<Job> jobs;
  for (ModelKind kind : spec.models) {
    jobs.push_back({kind, false});
    if (spec.adversarial) jobs.push_back({kind, true});
  }
  using Result = std::map<std::size_t, MseEstimate>;
  const auto results = parallel_map<Result>(
      jobs.size(), worker_count(), [&](std::size_t i) {
        const TrainedStudent trained =
            train_student(spec, jobs[i].kind, teacher, jobs[i].adversarial);
        return evaluate_student(spec, trained, teacher);
      });
  CsvTable table;
  table.header = {"model", "regime", "length", "mse", "se"};
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (const auto& [l, est] : results[i]) {
      table.add_row({to_string(jobs[i].kind),
                     jobs[i].adversarial ? "adversarial" : "honest",
                     std::to_string(l), format_real(est.mse),
                     format_real(est.standard_error)});
    }
  }
  return table;
}

LinearRNN initial_model(const ExperimentSpec& spec) {
  InitSpec is = spec.init;
  is.alpha = resolve_alpha(spec);
  is.seed = derive_seed(spec.seed, kInitStream);
  return init(spec.d, 1, 1, is);
}

TrainRecord train_linear(const ExperimentSpec& spec) {
  spec.validate();
  const LinearRNN model0 = initial_model(spec);
  if (spec.d_star == 0 && !spec.adversarial) {
    return train(model0,
                 PopulationObjective{MemorylessTeacher::scalar(spec.w_star), spec.k},
                 spec.optimizer, spec.record_every);
  }
  const Teacher teacher = experiment_teacher(spec, spec.d_star);
  const std::uint64_t data_seed = derive_seed(
      derive_seed(spec.seed, kDataStream), run_tag(ModelKind::kLinear, spec.adversarial));
  return train(model0, sampled_source(spec, teacher, spec.adversarial, data_seed),
               spec.optimizer, spec.record_every);
}

CsvTable run_dynamics(const ExperimentSpec& spec) {
  const TrainRecord rec = train_linear(spec);
  CsvTable table;
  table.header = {"step", "loss", "norm_A", "norm_B", "norm_C", "asym_A", "asym_BC"};
  for (const TrainStep& s : rec.steps) {
    table.add_row({std::to_string(s.step), format_real(s.loss),
                   format_real(s.norm_A), format_real(s.norm_B),
                   format_real(s.norm_C), format_real(s.asym_A),
                   format_real(s.asym_BC)});
  }
  return table;
}

CsvTable run_slackness(const ExperimentSpec& spec) {
  const TrainRecord rec = train_linear(spec);
  const SlacknessProfile profile = slackness_profile(rec.final_model);
  CsvTable table;
  table.header = {"index", "lambda", "u", "product"};
  for (const SlacknessEntry& e : profile.entries) {
    table.add_row({std::to_string(e.eigen_index), format_real(e.lambda),
                   format_real(e.u), format_real(e.product)});
  }
  return table;
}

CsvTable run_dstar_sweep(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.d_stars.empty()) throw PreconditionError("dstar: empty list");
  if (spec.lengths.empty()) throw PreconditionError("lengths: empty list");
  const ModelKind kind = spec.models.front();
  const auto means = parallel_map<double>(
      spec.d_stars.size(), worker_count(), [&](std::size_t i) {
        const Teacher teacher = experiment_teacher(spec, spec.d_stars[i]);
        ExperimentSpec run = spec;
        run.seed = derive_seed(spec.seed, spec.d_stars[i]);
        const TrainedStudent trained = train_student(run, kind, teacher, false);
        double sum = 0.0;
        for (const auto& [l, est] : evaluate_student(run, trained, teacher)) {
          sum += est.mse;
        }
        return sum / static_cast<double>(spec.lengths.size());
      });
  CsvTable table;
  table.header = {"dstar", "mean_extrap_mse"};
  for (std::size_t i = 0; i < means.size(); ++i) {
    table.add_row({std::to_string(spec.d_stars[i]), format_real(means[i])});
  }
  return table;
}

RandomProblem random_problem(std::size_t d, std::size_t n, std::size_t m,
                             std::uint64_t seed, double a_scale) {
  const CounterRng rng(seed);
  std::uint64_t c = 0;
  auto fill = [&](std::size_t rows, std::size_t cols, double sd) {
    Matrix out(rows, cols);
    for (double& v : out.data()) v = sd * rng.normal(c++);
    return out;
  };
  Matrix a = fill(d, d, a_scale / std::sqrt(static_cast<double>(d)));
  Matrix b = fill(d, n, 1.0);
  Matrix cm = fill(m, d, 1.0);
  Matrix w = fill(m, n, 1.0);
  return RandomProblem{LinearRNN(std::move(a), std::move(b), std::move(cm)),
                       MemorylessTeacher{std::move(w)}};
}

double relative_gap(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_gradient_gap(
    std::vector<Matrix> params, const std::vector<Matrix>& analytic,
    const std::function<double(const std::vector<Matrix>&)>& f, double h) {
  if (params.size() != analytic.size()) {
    throw DimensionError("parameter and gradient block counts differ");
  }
  double worst = 0.0;
  for (std::size_t blk = 0; blk < params.size(); ++blk) {
    require_same_shape(params[blk], analytic[blk], "max_gradient_gap");
    for (std::size_t e = 0; e < params[blk].size(); ++e) {
      double& x = params[blk].data()[e];
      const double saved = x;
      x = saved + h;
      const double up = f(params);
      x = saved - h;
      const double down = f(params);
      x = saved;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, relative_gap(analytic[blk].data()[e], fd));
    }
  }
  return worst;
}

std::string format_check(const SuiteCheck& check) {
  return fmt::format("{} {}: measured {:.3e} (threshold {:.3e})",
                     check.passed ? "PASS" : "FAIL", check.name, check.measured,
                     check.threshold);
}

namespace {

double linear_population_gap(const RandomProblem& p, std::size_t k) {
  const GradTriple g = population_grad(p.model, p.teacher, k);
  return max_gradient_gap(
      {p.model.A, p.model.B, p.model.C}, {g.dA, g.dB, g.dC},
      [&](const std::vector<Matrix>& w) {
        return population_loss(LinearRNN(w[0], w[1], w[2]), p.teacher, k);
      });
}

LabeledDataset random_labeled(std::size_t n, std::size_t m, std::size_t count,
                              const std::vector<std::size_t>& lengths,
                              std::uint64_t seed) {
  LabeledDataset data;
  data.seed = seed;
  data.provenance = "random labels";
  const CounterRng rng(derive_seed(seed, 0));
  std::uint64_t c = 0;
  for (std::size_t l : lengths) {
    SequenceGroup g;
    g.steps = sample_sequences(count, l, n, derive_seed(seed, l));
    g.labels = Matrix(m, count);
    for (double& v : g.labels.data()) v = rng.normal(c++);
    data.groups.push_back(std::move(g));
  }
  return data;
}

}  // namespace

std::vector<SuiteCheck> run_gradcheck_suite(std::uint64_t seed) {
  constexpr double kThreshold = 1e-6;
  std::vector<SuiteCheck> out;
  const CounterRng dims(derive_seed(seed, 100));
  std::uint64_t c = 0;
  auto draw = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(dims.uniform(c++) *
                                         static_cast<double>(hi - lo + 1));
  };

  double siso = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const RandomProblem p = random_problem(draw(1, 8), 1, 1, derive_seed(seed, i));
    siso = std::max(siso, linear_population_gap(p, draw(2, 8)));
  }
  out.push_back({"population gradient, SISO", siso <= kThreshold, siso, kThreshold});

  double mimo = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::size_t n = draw(1, 3);
    const RandomProblem p =
        random_problem(draw(1, 8), n, n, derive_seed(seed, 1000 + i));
    mimo = std::max(mimo, linear_population_gap(p, draw(2, 8)));
  }
  out.push_back({"population gradient, MIMO", mimo <= kThreshold, mimo, kThreshold});

  double bptt = 0.0;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const std::size_t n = draw(1, 2);
    const std::size_t m = draw(1, 2);
    const RandomProblem p =
        random_problem(draw(1, 6), n, m, derive_seed(seed, 2000 + i));
    const LabeledDataset data =
        random_labeled(n, m, 6, {2, 4, 5}, derive_seed(seed, 3000 + i));
    const GradTriple g = bptt_grad(p.model, data);
    bptt = std::max(bptt, max_gradient_gap(
        {p.model.A, p.model.B, p.model.C}, {g.dA, g.dB, g.dC},
        [&](const std::vector<Matrix>& w) {
          return empirical_loss(LinearRNN(w[0], w[1], w[2]), data);
        }));
  }
  out.push_back({"BPTT gradient", bptt <= kThreshold, bptt, kThreshold});

  for (CellKind kind : {CellKind::kGru, CellKind::kLstm}) {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 3; ++i) {
      GatedCell cell = make_xavier_cell(kind, 4, 2, derive_seed(seed, 4000 + i));
      // Nonzero biases exercise every gate path.
      const CounterRng bias_rng(derive_seed(seed, 5000 + i));
      std::uint64_t bc = 0;
      for (std::size_t gate = 0; gate < cell.gate_count(); ++gate) {
        for (double& v : cell.bias(gate).data()) v = 0.3 * bias_rng.normal(bc++);
      }
      const LabeledDataset data =
          random_labeled(2, 1, 5, {3, 4}, derive_seed(seed, 6000 + i));
      const CellGradient g = cell_bptt(cell, data);
      worst = std::max(worst, max_gradient_gap(
          cell.parameters(), g.grads, [&](const std::vector<Matrix>& w) {
            GatedCell probe = cell;
            probe.parameters() = w;
            return cell_loss(probe, data);
          }));
    }
    out.push_back({to_string(kind) + " cell gradient", worst <= kThreshold, worst,
                   kThreshold});
  }
  return out;
}

std::vector<SuiteCheck> run_certify_suite(const ExperimentSpec& spec) {
  const double tol = kDefaultVerdictTol;
  std::vector<SuiteCheck> out;
  const TrainRecord rec = train_linear(spec);
  const MemorylessTeacher teacher = MemorylessTeacher::scalar(spec.w_star);
  out.push_back({"trained model reaches stop loss",
                 rec.stop_reason == StopReason::kConverged, rec.final_loss,
                 spec.optimizer.stop_tol});
  if (spec.d <= kCharPolyMaxDim) {
    const Certificate cert = ch_certificate(rec.final_model, tol);
    const double worst =
        *std::max_element(cert.lag_norms.begin(), cert.lag_norms.end());
    out.push_back({"trained model certificate lags 1..d", cert.clean, worst, tol});
  }
  const ExtrapolationCheck check = check_extrapolation(
      rec.final_model, teacher, kDefaultHorizonPerState * spec.d, tol);
  out.push_back({"trained model extrapolates to 20d",
                 check.extrapolates,
                 std::max(check.cb_gap, check.max_power_gap), tol});

  const std::size_t cd = std::max<std::size_t>(spec.k, 3);
  const LinearRNN cyclic = make_cyclic_bad(cd, spec.k, teacher);
  const Certificate bad = ch_certificate(cyclic, tol);
  const double bad_worst =
      *std::max_element(bad.lag_norms.begin(), bad.lag_norms.end());
  out.push_back({"cyclic construction is rejected", !bad.clean, bad_worst, tol});
  return out;
}

std::vector<SuiteCheck> run_bad_solutions_suite() {
  std::vector<SuiteCheck> out;
  for (std::size_t d = 3; d <= 8; ++d) {
    const MemorylessTeacher teacher = MemorylessTeacher::scalar(1.0);
    const LinearRNN m = make_cyclic_bad(d, d, teacher);
    const double loss = population_loss(m, teacher, d);
    out.push_back({fmt::format("cyclic d={} population loss", d), loss <= 1e-15,
                   loss, 1e-15});
    const auto ir = impulse_response(m, d);
    const double entry_gap = std::abs(ir[d](0, 0) - 1.0);
    out.push_back({fmt::format("cyclic d={} lag-d entry equals w*", d),
                   entry_gap == 0.0, entry_gap, 0.0});
    const auto check = check_extrapolation(m, teacher, kDefaultHorizonPerState * d,
                                           kDefaultVerdictTol);
    out.push_back({fmt::format("cyclic d={} fails extrapolation", d),
                   !check.extrapolates, check.max_power_gap, kDefaultVerdictTol});
  }
  const double delta = 1e-3;
  const LinearRNN diag = make_diag_bad(3, 4, 1.0, delta);
  const MemorylessTeacher unit = MemorylessTeacher::scalar(1.0);
  const double loss_gap = std::abs(population_loss(diag, unit, 3) - 10.5 * delta * delta);
  out.push_back({"diagonal construction population loss", loss_gap <= 1e-12, loss_gap,
                 1e-12});
  const std::size_t lengths[] = {10};
  const double mse = extrapolation_mse(diag, Teacher(unit), lengths).at(10).mse;
  const double expected = delta * delta * (std::pow(4.0, 10) - 1.0) / 3.0;
  const double mse_gap = std::abs(mse - expected) / expected;
  out.push_back({"diagonal construction length-10 error", mse_gap <= 1e-9, mse_gap,
                 1e-9});
  const auto check = check_extrapolation(diag, unit, 80, kDefaultVerdictTol);
  out.push_back({"diagonal construction fails extrapolation", !check.extrapolates,
                 check.max_power_gap, kDefaultVerdictTol});
  return out;
}

}  // namespace extrap
