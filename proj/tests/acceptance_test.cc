// Acceptance suite: one PASS/FAIL line per criterion with the measured
// quantities. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "extrap/datagen.h"
#include "extrap/diagnostics.h"
#include "extrap/experiments.h"
#include "extrap/nonlinear.h"
#include "extrap/objective.h"
#include "extrap/rng.h"
#include "extrap/training.h"

namespace {

using namespace extrap;

struct Verdict {
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string ok(bool b) { return b ? "ok" : "VIOLATED"; }

// Uniform integer in [lo, hi] from draw c of rng.
std::size_t pick(const CounterRng& rng, std::uint64_t c, std::size_t lo,
                 std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform(c) *
                                       static_cast<double>(hi - lo + 1));
}

double population_gap(const RandomProblem& p, std::size_t k) {
  const GradTriple g = population_grad(p.model, p.teacher, k);
  return max_gradient_gap(
      {p.model.A, p.model.B, p.model.C}, {g.dA, g.dB, g.dC},
      [&](const std::vector<Matrix>& w) {
        return population_loss(LinearRNN(w[0], w[1], w[2]), p.teacher, k);
      });
}

Verdict criterion1() {
  const CounterRng dims(derive_seed(101, 0));
  std::uint64_t c = 0;
  double siso = 0.0, mimo = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::size_t d = pick(dims, c++, 1, 8), k = pick(dims, c++, 2, 8);
    siso = std::max(siso, population_gap(random_problem(d, 1, 1, derive_seed(1, i)), k));
  }
  for (std::uint64_t i = 0; i < 50; ++i) {
    const std::size_t d = pick(dims, c++, 1, 8), k = pick(dims, c++, 2, 8);
    const std::size_t n = pick(dims, c++, 1, 3);
    mimo = std::max(mimo, population_gap(random_problem(d, n, n, derive_seed(2, i)), k));
  }
  const double worst = std::max(siso, mimo);
  return {worst <= 1e-6,
          fmt::format("max relative error SISO {:.2e}, MIMO {:.2e} (threshold 1e-6)",
                      siso, mimo)};
}

Verdict criterion2() {
  const CounterRng dims(derive_seed(102, 0));
  std::uint64_t c = 0;
  const std::size_t n_samples = 200000;
  double worst_z = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t d = pick(dims, c++, 1, 6), k = pick(dims, c++, 2, 6);
    const std::size_t n = pick(dims, c++, 1, 2);
    const RandomProblem p = random_problem(d, n, n, derive_seed(3, i), 0.7);
    const LabeledDataset data =
        make_honest(Teacher(p.teacher), k, n_samples, derive_seed(4, i));
    const double emp = empirical_loss(p.model, data);
    // Per-sample halved squared errors for the standard error.
    const SequenceGroup& g = data.groups[0];
    const Matrix resid = forward_batch(p.model, g.steps) - g.labels;
    double sq = 0.0;
    for (std::size_t s = 0; s < g.count(); ++s) {
      double l = 0.0;
      for (std::size_t r = 0; r < resid.rows(); ++r) l += resid(r, s) * resid(r, s);
      l *= 0.5;
      sq += (l - emp) * (l - emp);
    }
    const double se = std::sqrt(sq / double(n_samples - 1) / double(n_samples));
    const double pop = population_loss(p.model, p.teacher, k);
    worst_z = std::max(worst_z, std::abs(emp - pop) / se);
  }
  return {worst_z <= 5.0,
          fmt::format("worst |empirical - population| = {:.2f} standard errors "
                      "over 20 models (threshold 5)",
                      worst_z)};
}

Verdict criterion3() {
  const double delta = 1e-3;
  const LinearRNN m = make_diag_bad(3, 4, 1.0, delta);
  const double loss = population_loss(m, MemorylessTeacher::scalar(1.0), 3);
  const double loss_err = std::abs(loss - 10.5e-6);
  const std::vector<std::size_t> ten = {10};
  const double mse =
      extrapolation_mse(m, Teacher(MemorylessTeacher::scalar(1.0)), ten).at(10).mse;
  const double expected = delta * delta * (std::pow(4.0, 10) - 1) / 3;
  const double rel = std::abs(mse - expected) / expected;
  return {loss_err <= 1e-12 && rel <= 1e-9,
          fmt::format("loss {:.17g} (abs err {:.1e} <= 1e-12 {}), MSE(10) {:.17g} "
                      "(rel err {:.1e} <= 1e-9 {})",
                      loss, loss_err, ok(loss_err <= 1e-12), mse, rel,
                      ok(rel <= 1e-9))};
}

Verdict criterion4() {
  bool all = true;
  double worst_loss = 0.0;
  std::string failures;
  for (double w : {1.0, -0.7, 2.5}) {
    const MemorylessTeacher t = MemorylessTeacher::scalar(w);
    for (std::size_t d = 3; d <= 8; ++d) {
      const LinearRNN m = make_cyclic_bad(d, d, t);
      const double loss = population_loss(m, t, d);
      const double lag_d = impulse_response(m, d)[d](0, 0);
      const bool verdict_no =
          !check_extrapolation(m, t, kDefaultHorizonPerState * d, kDefaultVerdictTol)
               .extrapolates;
      worst_loss = std::max(worst_loss, loss);
      const bool good = loss <= 1e-15 && lag_d == w && verdict_no;
      if (!good) failures += fmt::format(" d={},w*={}", d, w);
      all = all && good;
    }
  }
  return {all, fmt::format("d = 3..8, w* in {{1, -0.7, 2.5}}: max loss {:.1e} "
                           "(<= 1e-15), lag d == w* exactly, verdict no{}",
                           worst_loss, failures.empty() ? "" : "; failed:" + failures)};
}

Verdict criterion5() {
  const MemorylessTeacher t = MemorylessTeacher::scalar(1.0);
  double max_drift = 0.0, max_gap = 0.0, worst_slack_ratio = 0.0, worst_loss = 0.0;
  std::size_t converged = 0, verdict_yes = 0, slack_ok = 0;
  std::uint64_t max_steps_used = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    InitSpec is;
    is.scheme = InitScheme::kSymmetric;
    is.variance = 0.01;
    is.seed = seed;
    OptimizerSpec opt;
    opt.kind = OptimizerKind::kGdBacktracking;
    opt.lr = 0.05;
    opt.max_steps = 100000;
    opt.stop_tol = 1e-10;
    const TrainRecord rec = train(init(10, 1, 1, is), PopulationObjective{t, 3}, opt, 1);
    for (const TrainStep& s : rec.steps) {
      max_drift = std::max({max_drift, s.asym_A, s.asym_BC});
    }
    converged += rec.stop_reason == StopReason::kConverged;
    max_steps_used = std::max(max_steps_used, rec.steps_taken);
    worst_loss = std::max(worst_loss, rec.final_loss);
    const ExtrapolationCheck c = check_extrapolation(rec.final_model, t, 200, 1e-5);
    verdict_yes += c.extrapolates;
    max_gap = std::max({max_gap, c.cb_gap, c.max_power_gap});
    const SlacknessProfile p = slackness_profile(rec.final_model);
    const double bound = 1e-4 * (1 + std::abs(p.eigenvalues.front())) *
                         (1 + frobenius_norm(p.projection));
    slack_ok += p.max_product <= bound;
    worst_slack_ratio = std::max(worst_slack_ratio, p.max_product / bound);
  }
  const bool a = max_drift <= 1e-10;
  const bool b = verdict_yes == 5;
  const bool c = slack_ok == 5;
  return {a && b && c && converged == 5,
          fmt::format("{}/5 seeds reached loss <= 1e-10 (worst final loss {:.2e} "
                      "after {} steps); (a) max drift {:.1e} <= 1e-10 {}; (b) {}/5 "
                      "extrapolate, worst gap {:.2e} vs tol 1e-5 {}; (c) {}/5 within "
                      "slackness bound, worst product/bound {:.1f} {}",
                      converged, worst_loss, max_steps_used, max_drift, ok(a),
                      verdict_yes, max_gap, ok(b), slack_ok, worst_slack_ratio,
                      ok(c))};
}

Verdict criterion6() {
  const MemorylessTeacher t = MemorylessTeacher::scalar(1.0);
  InitSpec is;
  is.scheme = InitScheme::kSymmetric;
  is.alpha = 0.5;
  is.variance = 0.1;
  is.seed = 0;
  OptimizerSpec opt;
  opt.kind = OptimizerKind::kGdBacktracking;
  opt.lr = 0.05;
  opt.max_steps = 200000;
  opt.stop_tol = 1e-12;
  const TrainRecord rec = train(init(4, 1, 1, is), PopulationObjective{t, 6}, opt, 1000);
  const bool reached = rec.stop_reason == StopReason::kConverged;
  const ExtrapolationCheck c = check_extrapolation(rec.final_model, t, 200, 1e-6);
  const CharPoly cp = char_poly(rec.final_model.A);
  const double cp_bound =
      1e-8 * std::pow(1 + frobenius_norm(rec.final_model.A), 4.0);
  const bool lags = c.max_power_gap <= 1e-6;
  const bool residual = cp.residual <= cp_bound;
  return {reached && lags && residual,
          fmt::format("loss {:.2e} after {} steps ({}); max_j<=200 ||C A^j B|| "
                      "{:.3e} at j={} <= 1e-6 {}; char-poly residual {:.1e} <= "
                      "{:.1e} {}",
                      rec.final_loss, rec.steps_taken, to_string(rec.stop_reason),
                      c.max_power_gap, c.worst_lag, ok(lags), cp.residual, cp_bound,
                      ok(residual))};
}

double max_over(const std::map<std::size_t, MseEstimate>& mse, std::size_t lo,
                std::size_t hi) {
  double worst = 0.0;
  for (std::size_t l = lo; l <= hi; ++l) worst = std::max(worst, mse.at(l).mse);
  return worst;
}

Verdict criterion7() {
  const ExperimentSpec spec = default_spec("fig1");
  const Teacher teacher = experiment_teacher(spec, 0);
  const auto honest = evaluate_student(
      spec, train_student(spec, ModelKind::kLinear, teacher, false), teacher);
  const auto adv = evaluate_student(
      spec, train_student(spec, ModelKind::kLinear, teacher, true), teacher);
  const double honest_worst = max_over(honest, 6, 15);
  const double adv_next = adv.at(spec.k + 1).mse;
  const bool h = honest_worst <= 1e-2;
  const bool a = adv_next >= 0.5;
  return {h && a,
          fmt::format("honest linear max MSE over lengths 6-15 {:.3e} <= 1e-2 {} "
                      "(MSE(6) {:.2e}, MSE(15) {:.2e}); adversarial MSE(6) {:.3f} "
                      ">= 0.5 {}",
                      honest_worst, ok(h), honest.at(6).mse, honest.at(15).mse,
                      adv_next, ok(a))};
}

Verdict criterion8() {
  const ExperimentSpec spec = default_spec("fig2");
  const Teacher teacher = experiment_teacher(spec, spec.d_star);
  const auto mse = evaluate_student(
      spec, train_student(spec, ModelKind::kLinear, teacher, false), teacher);
  const double train_mse = mse.at(spec.k).mse;
  const double worst = max_over(mse, 6, 15);
  return {worst <= 10 * train_mse,
          fmt::format("LDS d*=3: max MSE over lengths 6-15 {:.3e} vs 10 x "
                      "length-5 MSE {:.3e}",
                      worst, 10 * train_mse)};
}

Verdict criterion9() {
  ExperimentSpec spec = default_spec("fig4");
  spec.random_alpha = false;
  spec.init.alpha = 0.5;
  const LinearRNN start = initial_model(spec);
  const TrainRecord rec = train_linear(spec);
  const LinearRNN& m = rec.final_model;
  const double bc = frobenius_norm(m.B - transpose(m.C));
  const double aa = frobenius_norm(m.A - transpose(m.A));
  const double nb = frobenius_norm(m.B), na = frobenius_norm(m.A);
  const double growth = nb / frobenius_norm(start.B);
  const bool x = bc <= 0.05 * nb, y = aa <= 0.05 * na, z = growth >= 10;
  return {x && y && z,
          fmt::format("after {} GD steps: ||B-C^T|| {:.2e} <= 0.05 ||B|| = {:.2e} "
                      "{}; ||A-A^T|| {:.2e} <= 0.05 ||A|| = {:.2e} {}; ||B|| grew "
                      "{:.1f}x >= 10 {}",
                      rec.steps_taken, bc, 0.05 * nb, ok(x), aa, 0.05 * na, ok(y),
                      growth, ok(z))};
}

Verdict criterion10() {
  ExperimentSpec spec = default_spec("sweep-dstar");
  spec.d = 60;
  spec.d_stars = {1, 2, 4, 8};
  const CsvTable table = run_dstar_sweep(spec);
  std::map<std::size_t, double> mean;
  for (const auto& row : table.rows) mean[std::stoul(row[0])] = std::stod(row[1]);
  const double small = std::max({mean.at(1), mean.at(2), mean.at(4)});
  return {small <= 0.1 * mean.at(8),
          fmt::format("d=60 mean MSE over lengths 6-10: d*=1 {:.3e}, d*=2 {:.3e}, "
                      "d*=4 {:.3e} vs 0.1 x d*=8 {:.3e}",
                      mean.at(1), mean.at(2), mean.at(4), 0.1 * mean.at(8))};
}

LabeledDataset random_cell_data(std::size_t n, std::uint64_t seed) {
  LabeledDataset data;
  SequenceGroup g;
  g.steps = sample_sequences(4, 5, n, seed);
  const CounterRng rng(derive_seed(seed, 1));
  g.labels = Matrix(1, 4);
  for (std::size_t i = 0; i < 4; ++i) g.labels(0, i) = rng.normal(i);
  data.groups.push_back(std::move(g));
  return data;
}

Verdict criterion11() {
  const CounterRng dims(derive_seed(111, 0));
  std::uint64_t c = 0;
  double worst_fd = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const CellKind kind = i % 2 == 0 ? CellKind::kGru : CellKind::kLstm;
    const std::size_t d = pick(dims, c++, 2, 5), n = pick(dims, c++, 1, 2);
    GatedCell cell(kind, d, n);
    const CounterRng w(derive_seed(7, i));
    std::uint64_t wc = 0;
    for (Matrix& p : cell.parameters())
      for (double& v : p.data()) v = 0.6 * w.normal(wc++);
    const LabeledDataset data = random_cell_data(n, derive_seed(8, i));
    const CellGradient g = cell_bptt(cell, data);
    worst_fd = std::max(worst_fd, max_gradient_gap(
        cell.parameters(), g.grads, [&](const std::vector<Matrix>& p) {
          GatedCell probe = cell;
          probe.parameters() = p;
          return cell_loss(probe, data);
        }));
  }
  const bool fd = worst_fd <= 1e-5;

  const ExperimentSpec spec = default_spec("fig1");
  const Teacher teacher = experiment_teacher(spec, 0);
  const std::vector<ModelKind> kinds = {ModelKind::kGru, ModelKind::kLstm};
  const auto results = parallel_map<std::map<std::size_t, MseEstimate>>(
      kinds.size(), worker_count(), [&](std::size_t i) {
        return evaluate_student(spec, train_student(spec, kinds[i], teacher, false),
                                teacher);
      });
  const double gru = max_over(results[0], 6, 15);
  const double lstm = max_over(results[1], 6, 15);
  const bool trained = gru <= 1e-2 && lstm <= 1e-2;
  return {fd && trained,
          fmt::format("cell gradients vs finite differences max rel err {:.2e} <= "
                      "1e-5 {}; honest max MSE over lengths 6-15: GRU {:.3e}, "
                      "LSTM {:.3e} <= 1e-2 {}",
                      worst_fd, ok(fd), gru, lstm, ok(trained))};
}

struct Criterion {
  int number;
  const char* title;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "population gradient vs finite differences", criterion1},
      {2, "closed-form population loss vs Monte Carlo", criterion2},
      {3, "diagonal low-loss construction numbers", criterion3},
      {4, "cyclic zero-loss construction", criterion4},
      {5, "symmetric-init population GD extrapolates", criterion5},
      {6, "training past the state dimension extrapolates", criterion6},
      {7, "memoryless teacher, honest vs adversarial", criterion7},
      {8, "LDS teacher, honest linear student", criterion8},
      {9, "identity-scaled init stays nearly symmetric", criterion9},
      {10, "teacher-dimension sweep", criterion10},
      {11, "gated cells: gradients and honest extrapolation", criterion11},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.passed;
    std::cout << fmt::format("{} criterion {} ({}): {} [{:.1f} s]\n",
                             v.passed ? "PASS" : "FAIL", c.number, c.title,
                             v.detail, seconds_since(start))
              << std::flush;
  }
  std::cout << fmt::format("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
