#include "extrap/diagnostics.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "extrap/errors.h"
#include "extrap/rng.h"

namespace extrap {

namespace {

constexpr std::size_t kMonteCarloChunk = 8192;

Matrix predict(const Student& student, std::span<const Matrix> steps) {
  if (const auto* linear = std::get_if<LinearRNN>(&student)) {
    return forward_batch(*linear, steps);
  }
  return cell_predict(std::get<GatedCell>(student), steps);
}

MseEstimate monte_carlo_mse(const Student& student, const Teacher& teacher,
                            std::size_t length, const MseOptions& options) {
  if (options.n_mc < 2) throw PreconditionError("Monte Carlo needs n_mc >= 2");
  const std::uint64_t seed = derive_seed(options.seed, length);
  double sum = 0.0;
  double sum_sq = 0.0;
  // Chunk c draws its sequences from derive_seed(seed, c).
  for (std::size_t start = 0, chunk = 0; start < options.n_mc;
       start += kMonteCarloChunk, ++chunk) {
    const std::size_t count = std::min(kMonteCarloChunk, options.n_mc - start);
    const auto steps = sample_sequences(count, length, input_dim(teacher),
                                        derive_seed(seed, chunk));
    const Matrix err = predict(student, steps) - label(teacher, steps);
    for (std::size_t i = 0; i < count; ++i) {
      double e = 0.0;
      for (std::size_t r = 0; r < err.rows(); ++r) e += err(r, i) * err(r, i);
      sum += e;
      sum_sq += e * e;
    }
  }
  const double n = static_cast<double>(options.n_mc);
  const double mean = sum / n;
  const double variance = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return MseEstimate{mean, std::sqrt(variance / n)};
}

}  // namespace

std::map<std::size_t, MseEstimate> extrapolation_mse(
    const Student& student, const Teacher& teacher,
    std::span<const std::size_t> lengths, const MseOptions& options) {
  std::map<std::size_t, MseEstimate> out;
  if (lengths.empty()) return out;
  for (std::size_t l : lengths) {
    if (l == 0) throw PreconditionError("extrapolation lengths must be >= 1");
  }
  if (options.mode == MseMode::kMonteCarlo) {
    for (std::size_t l : lengths) {
      out[l] = monte_carlo_mse(student, teacher, l, options);
    }
    return out;
  }
  const auto* linear = std::get_if<LinearRNN>(&student);
  if (linear == nullptr) {
    throw ModeError("closed-form extrapolation MSE needs a linear student");
  }
  if (linear->input_dim() != input_dim(teacher) ||
      linear->output_dim() != output_dim(teacher)) {
    throw DimensionError("student and teacher dimensions differ");
  }
  const std::size_t horizon = *std::max_element(lengths.begin(), lengths.end());
  const auto student_ir = impulse_response(*linear, horizon - 1);
  const auto teacher_ir = teacher_impulse_response(teacher, horizon - 1);
  // cumulative[l] = sum_{j<l} ||h_j - t_j||^2
  std::vector<double> cumulative(horizon + 1, 0.0);
  for (std::size_t j = 0; j < horizon; ++j) {
    cumulative[j + 1] =
        cumulative[j] + squared_norm(student_ir[j] - teacher_ir[j]);
  }
  for (std::size_t l : lengths) out[l] = MseEstimate{cumulative[l], 0.0};
  return out;
}

ExtrapolationCheck check_extrapolation(const LinearRNN& model,
                                       const MemorylessTeacher& teacher,
                                       std::size_t horizon, double tol) {
  if (horizon < 1) throw PreconditionError("extrapolation horizon must be >= 1");
  const auto ir = impulse_response(model, horizon);
  ExtrapolationCheck check;
  check.cb_gap = frobenius_norm(ir[0] - teacher.gain);
  check.lag_norms.reserve(horizon);
  for (std::size_t j = 1; j <= horizon; ++j) {
    const double g = frobenius_norm(ir[j]);
    check.lag_norms.push_back(g);
    if (j == 1 || g > check.max_power_gap) {
      check.max_power_gap = g;
      check.worst_lag = j;
    }
  }
  check.extrapolates = check.cb_gap <= tol && check.max_power_gap <= tol;
  return check;
}

Certificate ch_certificate(const LinearRNN& model, double tol) {
  Certificate cert;
  cert.poly = char_poly(model.A);
  const std::size_t d = model.state_dim();
  const auto ir = impulse_response(model, d);
  cert.clean = true;
  for (std::size_t j = 1; j <= d; ++j) {
    const double g = frobenius_norm(ir[j]);
    cert.lag_norms.push_back(g);
    if (g > tol) cert.clean = false;
  }
  for (double rho : cert.poly.coefficients) cert.coefficient_mass += std::abs(rho);
  return cert;
}

SlacknessProfile slackness_profile(const LinearRNN& model) {
  const double asym = frobenius_norm(model.A - transpose(model.A));
  if (asym > kSlacknessAsymmetryTol * (1.0 + frobenius_norm(model.A))) {
    throw PreconditionError(
        fmt::format("slackness profile needs symmetric A, asymmetry {:g}", asym),
        asym);
  }
  const SymEig eig = sym_eig(model.A);
  SlacknessProfile profile;
  profile.eigenvalues = eig.values;
  profile.projection = transpose(eig.vectors) * model.B;
  for (std::size_t s = 0; s < model.state_dim(); ++s) {
    for (std::size_t i = 0; i < model.input_dim(); ++i) {
      SlacknessEntry e;
      e.eigen_index = s;
      e.column = i;
      e.lambda = eig.values[s];
      e.u = profile.projection(s, i);
      e.product = std::abs(e.u * e.lambda);
      profile.max_product = std::max(profile.max_product, e.product);
      profile.entries.push_back(e);
    }
  }
  return profile;
}

SymmetryDrift symmetry_drift(const LinearRNN& model) {
  SymmetryDrift drift;
  drift.asym_A = frobenius_norm(model.A - transpose(model.A));
  if (model.input_dim() == model.output_dim()) {
    drift.asym_BC = frobenius_norm(model.B - transpose(model.C));
  }
  return drift;
}

DiagnosticsReport diagnose(const LinearRNN& model,
                           const MemorylessTeacher& teacher,
                           std::span<const std::size_t> lengths,
                           std::size_t horizon, double tol) {
  DiagnosticsReport report;
  report.horizon =
      horizon == 0 ? kDefaultHorizonPerState * model.state_dim() : horizon;
  report.tol = tol;
  for (const auto& [l, est] :
       extrapolation_mse(model, Teacher(teacher), lengths)) {
    report.mse_by_length[l] = est.mse;
  }
  const ExtrapolationCheck check =
      check_extrapolation(model, teacher, report.horizon, tol);
  report.cb_gap = check.cb_gap;
  report.max_power_gap = check.max_power_gap;
  report.extrapolates = check.extrapolates;
  if (model.state_dim() <= kCharPolyMaxDim) {
    report.ch_residual = char_poly(model.A).residual;
  }
  try {
    report.slackness = slackness_profile(model);
  } catch (const PreconditionError&) {
    // asymmetric A: no profile
  }
  report.symmetry = symmetry_drift(model);
  return report;
}

}  // namespace extrap
