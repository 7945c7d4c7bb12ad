#include "extrap/training.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "extrap/diagnostics.h"
#include "extrap/errors.h"
#include "extrap/rng.h"
#include "test_util.h"

namespace extrap {
namespace {

double asym(const Matrix& a) { return frobenius_norm(a - transpose(a)); }

InitSpec symmetric_spec(double variance, std::uint64_t seed) {
  InitSpec s;
  s.scheme = InitScheme::kSymmetric;
  s.variance = variance;
  s.seed = seed;
  return s;
}

TEST(Init, SymmetricIsExactlySymmetric) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (int sign : {+1, -1}) {
      InitSpec s = symmetric_spec(0.3, seed);
      s.sign = sign;
      const LinearRNN m = init(7, 2, 2, s);
      EXPECT_EQ(asym(m.A), 0.0);
      EXPECT_EQ(frobenius_norm(m.B - double(sign) * transpose(m.C)), 0.0);
    }
  }
  InitSpec s = symmetric_spec(0.3, 1);
  s.alpha = 0.25;
  const LinearRNN m = init(5, 1, 1, s);
  EXPECT_EQ(m.A, 0.25 * Matrix::identity(5));
  EXPECT_THROW(init(5, 1, 2, symmetric_spec(0.3, 1)), PreconditionError);
}

TEST(Init, SymmetricDrawOrder) {
  // A from draws 0..d^2-1, then C; B = C^T.
  const std::size_t d = 3;
  const double variance = 0.04;
  const LinearRNN m = init(d, 1, 1, symmetric_spec(variance, 9));
  const CounterRng rng(9);
  for (std::size_t i = 0; i < d; ++i) {
    const double g_ii = rng.normal(i * d + i);
    EXPECT_DOUBLE_EQ(m.A(i, i), std::sqrt(variance) * g_ii);
    EXPECT_DOUBLE_EQ(m.C(0, i), std::sqrt(variance) * rng.normal(d * d + i));
  }
}

TEST(Init, IdentityScaled) {
  InitSpec s;
  s.scheme = InitScheme::kIdentityScaled;
  s.alpha = 0.5;
  s.variance = 1e-5;
  s.seed = 3;
  const LinearRNN m = init(10, 1, 1, s);
  EXPECT_EQ(frobenius_norm(m.A - 0.5 * Matrix::identity(10)), 0.0);
  EXPECT_GT(frobenius_norm(m.B - transpose(m.C)), 0.0);
  EXPECT_GT(frobenius_norm(m.B + transpose(m.C)), 0.0);
  // Entries on the sigma = 3.2e-3 scale.
  EXPECT_LT(max_abs(m.B), 5 * std::sqrt(1e-5));
  s.alpha.reset();
  EXPECT_THROW(init(10, 1, 1, s), PreconditionError);
}

TEST(Init, XavierVarianceOfRecurrentWeights) {
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; count < 10000; ++seed) {
    InitSpec s;
    s.scheme = InitScheme::kXavier;
    s.seed = seed;
    const LinearRNN m = init(30, 1, 1, s);
    for (double v : m.A.data()) {
      sum += v;
      sq += v * v;
      ++count;
    }
  }
  const double mean = sum / double(count);
  const double var = sq / double(count) - mean * mean;
  EXPECT_NEAR(var, 2.0 / 60.0, 0.2 * 2.0 / 60.0);
}

TEST(Init, ParameterValidation) {
  InitSpec s;
  s.variance = 0.0;
  EXPECT_THROW(init(3, 1, 1, s), PreconditionError);
  s.variance = 1.0;
  s.alpha = INFINITY;
  EXPECT_THROW(init(3, 1, 1, s), PreconditionError);
  s.alpha.reset();
  s.sign = 2;
  EXPECT_THROW(init(3, 1, 1, s), PreconditionError);
  s.sign = 1;
  s.scheme = InitScheme::kExplicit;
  EXPECT_THROW(init(3, 1, 1, s), PreconditionError);
  s.weights = scalar_rnn(0.1, 0.2, 0.3);
  EXPECT_THROW(init(3, 1, 1, s), PreconditionError);
  EXPECT_EQ(init(1, 1, 1, s).A(0, 0), 0.1);
}

TEST(GdStep, ZeroGradientLeavesModelUnchanged) {
  std::mt19937_64 gen(1);
  const LinearRNN m = testing::random_rnn(4, 2, 3, gen);
  const GradTriple zero{Matrix(4, 4), Matrix(4, 2), Matrix(3, 4)};
  const LinearRNN next = gd_step(m, zero, 0.1);
  EXPECT_EQ(next.A, m.A);
  EXPECT_EQ(next.B, m.B);
  EXPECT_EQ(next.C, m.C);
}

TEST(GdStep, ScalarHandUpdate) {
  // a = b = c = w* = 1, k = 2: every partial derivative equals 1.
  const LinearRNN m = scalar_rnn(1, 1, 1);
  const auto g = population_grad(m, MemorylessTeacher::scalar(1.0), 2);
  const LinearRNN next = gd_step(m, g, 0.1);
  EXPECT_DOUBLE_EQ(next.A(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(next.B(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(next.C(0, 0), 0.9);
}

TEST(GdStepProperty, SymmetricStepStaysSymmetric) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + trial % 9, n = 1 + trial % 3, k = 2 + trial % 5;
    const Matrix c = testing::gaussian(n, d, gen, 0.5);
    const LinearRNN m(0.3 * testing::random_symmetric(d, gen), transpose(c), c);
    const MemorylessTeacher t(testing::random_symmetric(n, gen));  // W* = W*^T
    const LinearRNN next = gd_step(m, population_grad(m, t, k), 0.05);
    const double scale = 1 + frobenius_norm(next.A) + frobenius_norm(next.B);
    EXPECT_LE(asym(next.A), 1e-12 * scale);
    EXPECT_LE(frobenius_norm(next.B - transpose(next.C)), 1e-12 * scale);
  }
}

OptimizerSpec adam_spec(double lr) {
  OptimizerSpec s;
  s.kind = OptimizerKind::kAdam;
  s.lr = lr;
  return s;
}

TEST(Adam, ZeroGradientFirstStepIsNoOp) {
  std::vector<Matrix> params = {Matrix::from_rows({{1, -2}, {3, 4}})};
  const std::vector<Matrix> grads = {Matrix(2, 2)};
  AdamState state;
  adam_update(params, grads, state, adam_spec(1e-3));
  EXPECT_EQ(params[0], Matrix::from_rows({{1, -2}, {3, 4}}));
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMagnitude) {
  const OptimizerSpec spec = adam_spec(1e-3);
  std::vector<Matrix> params = {Matrix(3, 2)};
  const std::vector<Matrix> grads = {Matrix(3, 2, 1.0)};
  AdamState state;
  adam_update(params, grads, state, spec);
  for (double v : params[0].data()) {
    EXPECT_NEAR(v, -1e-3 / (1 + spec.adam_epsilon), 1e-18);
  }
}

TEST(Adam, ConstantGradientStepTendsToSignedLearningRate) {
  const OptimizerSpec spec = adam_spec(1e-2);
  std::vector<Matrix> params = {Matrix(1, 2)};
  const std::vector<Matrix> grads = {Matrix::from_rows({{3.0, -0.2}})};
  AdamState state;
  Matrix before = params[0];
  for (int t = 0; t < 2000; ++t) {
    before = params[0];
    adam_update(params, grads, state, spec);
  }
  const Matrix step = params[0] - before;
  EXPECT_NEAR(step(0, 0), -1e-2, 1e-8);
  EXPECT_NEAR(step(0, 1), +1e-2, 1e-6);
}

TEST(Adam, StateShapeMismatch) {
  std::vector<Matrix> params = {Matrix(2, 2)};
  AdamState state;
  adam_update(params, std::vector<Matrix>{Matrix(2, 2, 1.0)}, state,
              adam_spec(1e-3));
  std::vector<Matrix> other = {Matrix(3, 3)};
  EXPECT_THROW(adam_update(other, std::vector<Matrix>{Matrix(3, 3)}, state,
                           adam_spec(1e-3)),
               DimensionError);
}

OptimizerSpec gd_spec(OptimizerKind kind, double lr, std::uint64_t steps,
                      double stop = 0.0) {
  OptimizerSpec s;
  s.kind = kind;
  s.lr = lr;
  s.max_steps = steps;
  s.stop_tol = stop;
  return s;
}

TEST(Train, GlobalMinimumStopsAtStepZero) {
  const LinearRNN start = scalar_rnn(0.0, 2.0, 0.5);
  const TrainRecord rec =
      train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), 4},
            gd_spec(OptimizerKind::kGd, 0.1, 100, 1e-14));
  EXPECT_EQ(rec.steps_taken, 0u);
  EXPECT_EQ(rec.stop_reason, StopReason::kConverged);
  EXPECT_EQ(rec.final_loss, 0.0);
  ASSERT_EQ(rec.steps.size(), 1u);
  EXPECT_EQ(rec.steps[0].step, 0u);
}

TEST(Train, RecordsStrideAndFinalStep) {
  const LinearRNN start = init(4, 1, 1, symmetric_spec(0.01, 2));
  const TrainRecord rec =
      train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), 3},
            gd_spec(OptimizerKind::kGd, 0.05, 95), 10);
  EXPECT_EQ(rec.stop_reason, StopReason::kMaxSteps);
  EXPECT_EQ(rec.steps_taken, 95u);
  ASSERT_EQ(rec.steps.size(), 11u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(rec.steps[i].step, 10 * i);
  EXPECT_EQ(rec.steps.back().step, 95u);
  EXPECT_EQ(rec.steps.back().loss, rec.final_loss);
  EXPECT_DOUBLE_EQ(rec.final_loss,
                   population_loss(rec.final_model, MemorylessTeacher::scalar(1.0), 3));
}

TEST(TrainProperty, BacktrackingLossIsMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LinearRNN start = init(6, 1, 1, symmetric_spec(0.1, seed));
    // A deliberately large trial step forces halvings.
    const TrainRecord rec =
        train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), 4},
              gd_spec(OptimizerKind::kGdBacktracking, 5.0, 2000));
    for (std::size_t i = 1; i < rec.steps.size(); ++i) {
      EXPECT_LE(rec.steps[i].loss, rec.steps[i - 1].loss) << "seed " << seed;
    }
  }
}

TEST(TrainProperty, PlainGdPreservesSymmetry) {
  const std::vector<std::pair<std::size_t, std::size_t>> configs = {
      {3, 2}, {6, 4}, {12, 6}, {8, 5}};
  std::uint64_t seed = 0;
  for (const auto& [d, k] : configs) {
    const LinearRNN start = init(d, 1, 1, symmetric_spec(0.01, ++seed));
    const TrainRecord rec =
        train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), k},
              gd_spec(OptimizerKind::kGd, 0.05, 10000));
    ASSERT_EQ(rec.steps.size(), 10001u);
    for (const TrainStep& s : rec.steps) {
      const double scale = 1e-10 * (1 + s.norm_A + s.norm_B);
      EXPECT_LE(s.asym_A, scale) << "d=" << d << " step " << s.step;
      EXPECT_LE(s.asym_BC, scale) << "d=" << d << " step " << s.step;
    }
  }
}

TEST(TrainProperty, MimoGdPreservesSymmetry) {
  InitSpec s = symmetric_spec(0.01, 5);
  const LinearRNN start = init(6, 2, 2, s);
  const MemorylessTeacher t(Matrix::from_rows({{1.0, 0.3}, {0.3, 0.5}}));
  const TrainRecord rec = train(start, PopulationObjective{t, 4},
                                gd_spec(OptimizerKind::kGd, 0.05, 3000), 100);
  for (const TrainStep& st : rec.steps) {
    EXPECT_LE(st.asym_A, 1e-10 * (1 + st.norm_A + st.norm_B));
    EXPECT_LE(st.asym_BC, 1e-10 * (1 + st.norm_A + st.norm_B));
  }
}

TEST(Train, DeterministicRecord) {
  const LabeledDataset data =
      make_adversarial(MemorylessTeacher::scalar(1.0), 3, 5, 8, 4);
  InitSpec s;
  s.scheme = InitScheme::kXavier;
  s.seed = 6;
  const LinearRNN start = init(5, 1, 1, s);
  const SampledObjective sampled{[](std::uint64_t step) {
    return make_honest(MemorylessTeacher::scalar(1.0), 3, 16, derive_seed(1, step));
  }};
  for (const TrainingSource& source : {TrainingSource(data), TrainingSource(sampled)}) {
    const auto run = [&] {
      return train(start, source, adam_spec(1e-2), 7);
    };
    const TrainRecord a = run(), b = run();
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      EXPECT_EQ(a.steps[i].loss, b.steps[i].loss);
      EXPECT_EQ(a.steps[i].norm_A, b.steps[i].norm_A);
    }
    EXPECT_EQ(a.final_model.A, b.final_model.A);
    EXPECT_EQ(a.final_model.B, b.final_model.B);
    EXPECT_EQ(a.final_model.C, b.final_model.C);
  }
}

TEST(Train, DivergenceCarriesFiniteRecord) {
  const LinearRNN start = scalar_rnn(0.9, 1.0, 1.0);
  try {
    train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), 6},
          gd_spec(OptimizerKind::kGd, 10.0, 1000));
    FAIL() << "no divergence reported";
  } catch (const DivergenceError& e) {
    ASSERT_FALSE(e.partial().steps.empty());
    for (const TrainStep& s : e.partial().steps) {
      EXPECT_TRUE(std::isfinite(s.loss));
      EXPECT_LE(s.loss, kDivergenceLoss);
    }
  }
}

TEST(Train, RejectsInvalidOptimizer) {
  const PopulationObjective obj{MemorylessTeacher::scalar(1.0), 3};
  EXPECT_THROW(train(scalar_rnn(0, 1, 1), obj, gd_spec(OptimizerKind::kGd, 0.0, 1)),
               PreconditionError);
  OptimizerSpec bad = adam_spec(1e-3);
  bad.beta1 = 1.0;
  EXPECT_THROW(train(scalar_rnn(0, 1, 1), obj, bad), PreconditionError);
}

TEST(TrainEndToEnd, IdentityFamilySymmetricRunConverges) {
  // A_0 = 0.5 I, B_0 = C_0^T: linear convergence to the loss target; each
  // lag is then bounded by sqrt(2 loss).
  InitSpec s = symmetric_spec(0.01, 0);
  s.alpha = 0.5;
  const MemorylessTeacher t = MemorylessTeacher::scalar(1.0);
  const TrainRecord rec =
      train(init(10, 1, 1, s), PopulationObjective{t, 3},
            gd_spec(OptimizerKind::kGdBacktracking, 0.05, 100000, 1e-10), 100);
  EXPECT_EQ(rec.stop_reason, StopReason::kConverged);
  EXPECT_LE(rec.final_loss, 1e-10);
  const auto check = check_extrapolation(rec.final_model, t, 200,
                                         std::sqrt(2 * rec.final_loss) * 1.001);
  EXPECT_TRUE(check.extrapolates)
      << "worst lag " << check.worst_lag << ": " << check.max_power_gap;
}

TEST(TrainEndToEnd, IdentityScaledRunStaysNearlySymmetric) {
  InitSpec s;
  s.scheme = InitScheme::kIdentityScaled;
  s.alpha = 0.5;
  s.variance = 1e-5;
  s.seed = 1;
  const LinearRNN start = init(10, 1, 1, s);
  const TrainRecord rec =
      train(start, PopulationObjective{MemorylessTeacher::scalar(1.0), 5},
            gd_spec(OptimizerKind::kGd, 0.05, 5000), 50);
  const TrainStep& last = rec.steps.back();
  EXPECT_GE(last.norm_B, 10 * frobenius_norm(start.B));
  EXPECT_LE(last.asym_BC, 0.05 * std::max(last.norm_B, last.norm_A));
  EXPECT_LE(last.asym_A, 0.05 * std::max(last.norm_B, last.norm_A));
}

TEST(CyclicBad, HandCases) {
  const LinearRNN m = make_cyclic_bad(4, 3, MemorylessTeacher::scalar(2.0));
  EXPECT_EQ(population_loss(m, MemorylessTeacher::scalar(2.0), 3), 0.0);
  EXPECT_EQ((m.C * mat_power(m.A, 4) * m.B)(0, 0), 2.0);
  for (unsigned j = 1; j <= 3; ++j) {
    EXPECT_EQ((m.C * mat_power(m.A, j) * m.B)(0, 0), 0.0);
  }
  const auto ir = impulse_response(
      make_cyclic_bad(2, 2, MemorylessTeacher::scalar(1.0)), 7);
  for (std::size_t j = 0; j <= 7; ++j) {
    EXPECT_EQ(ir[j](0, 0), j % 2 == 0 ? 1.0 : 0.0);
  }
  EXPECT_THROW(make_cyclic_bad(3, 4, MemorylessTeacher::scalar(1.0)),
               PreconditionError);
}

TEST(CyclicBad, MimoRankOneAndPadding) {
  const MemorylessTeacher padded(Matrix::from_rows({{1.5, 0}, {0, 0}}));
  const LinearRNN p = make_cyclic_bad(5, 4, padded);
  EXPECT_EQ(p.B(0, 0), 1.0);
  EXPECT_EQ(p.B(0, 1), 0.0);
  EXPECT_LE(population_loss(p, padded, 4), 1e-30);

  const MemorylessTeacher rank_one(
      Matrix::from_rows({{1.0, 2.0}, {-0.5, -1.0}}));
  const LinearRNN r = make_cyclic_bad(5, 5, rank_one);
  EXPECT_LE(population_loss(r, rank_one, 5), 1e-24);
  EXPECT_LE(frobenius_norm(r.C * mat_power(r.A, 5) * r.B - rank_one.gain), 1e-12);
  EXPECT_THROW(make_cyclic_bad(5, 5, MemorylessTeacher(Matrix::identity(2))),
               PreconditionError);
}

TEST(DiagBad, ClosedFormLoss) {
  const double delta = 1e-3;
  const LinearRNN m = make_diag_bad(3, 4, 1.0, delta);
  EXPECT_EQ(frobenius_norm(m.B - transpose(m.C)), 0.0);
  EXPECT_EQ(asym(m.A), 0.0);
  EXPECT_NEAR(population_loss(m, MemorylessTeacher::scalar(1.0), 3),
              0.5 * 21 * delta * delta, 1e-18);
  const double eps = 1e-6;
  const double small = std::sqrt(eps / 21) * 0.999;
  EXPECT_LT(2 * population_loss(make_diag_bad(3, 4, 1.0, small),
                                MemorylessTeacher::scalar(1.0), 3),
            eps);
  EXPECT_THROW(make_diag_bad(3, 2, 1.0, delta), PreconditionError);
  EXPECT_THROW(make_diag_bad(3, 4, -1.0, delta), PreconditionError);
  EXPECT_THROW(make_diag_bad(3, 4, 1.0, 0.0), PreconditionError);
}

TEST(BadSolutionsProperty, ClosedFormsAndFailedVerdicts) {
  for (std::size_t k = 2; k <= 7; ++k) {
    for (std::size_t d = k; d <= k + 3; ++d) {
      const double w = 0.5 + double(d);
      const MemorylessTeacher t = MemorylessTeacher::scalar(w);
      const LinearRNN cyc = make_cyclic_bad(d, k, t);
      EXPECT_LE(population_loss(cyc, t, k), 1e-12);
      EXPECT_FALSE(check_extrapolation(cyc, t, d, kDefaultVerdictTol).extrapolates);

      const double delta = 1e-4;
      const LinearRNN diag = make_diag_bad(k, d, w, delta);
      const double closed = delta * delta * (std::pow(4.0, double(k)) - 1) / 6;
      EXPECT_NEAR(population_loss(diag, t, k), closed, 1e-12);
      EXPECT_FALSE(check_extrapolation(diag, t, 1, 1.9 * delta).extrapolates);
    }
  }
}

}  // namespace
}  // namespace extrap
