#ifndef EXTRAP_DIAGNOSTICS_H_
#define EXTRAP_DIAGNOSTICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "extrap/datagen.h"
#include "extrap/linalg.h"
#include "extrap/model.h"
#include "extrap/nonlinear.h"
#include "extrap/objective.h"

namespace extrap {

using Student = std::variant<LinearRNN, GatedCell>;

enum class MseMode { kClosedForm, kMonteCarlo };

struct MseOptions {
  MseMode mode = MseMode::kClosedForm;
  std::size_t n_mc = 100000;
  std::uint64_t seed = 0;
};

struct MseEstimate {
  double mse = 0.0;
  double standard_error = 0.0;  // zero in closed form
};

// Unhalved expected squared error E||student(x) - teacher(x)||^2 on
// standard-normal sequences of each requested length. Closed form (linear
// students only): sum_{j<l} ||C A^j B - T_j||_F^2 with T_j the teacher's
// impulse response. Monte Carlo: mean over n_mc sequences drawn with
// derive_seed(seed, l). Throws ModeError for a gated student in closed form.
std::map<std::size_t, MseEstimate> extrapolation_mse(
    const Student& student, const Teacher& teacher,
    std::span<const std::size_t> lengths, const MseOptions& options = {});

inline constexpr double kDefaultVerdictTol = 1e-5;
inline constexpr std::size_t kDefaultHorizonPerState = 20;

struct ExtrapolationCheck {
  bool extrapolates = false;
  double cb_gap = 0.0;          // ||CB - W*||_F
  double max_power_gap = 0.0;   // max_{j=1..J} ||C A^j B||_F
  std::size_t worst_lag = 0;    // argmax of the above
  std::vector<double> lag_norms;  // ||C A^j B||_F for j = 1..J
};

// Extrapolates iff ||CB - W*||_F <= tol and every ||C A^j B||_F <= tol for
// j = 1..horizon.
ExtrapolationCheck check_extrapolation(const LinearRNN& model,
                                       const MemorylessTeacher& teacher,
                                       std::size_t horizon, double tol);

// Finite-lag extrapolation evidence lifted to all lags: if ||C A^j B|| <= tol
// for j = 1..d, the characteristic polynomial recursion
// C A^{d+1} B = -sum_i rho_i C A^{i+1} B determines every higher lag, each a
// rho-weighted combination of lags already bounded.
struct Certificate {
  std::vector<double> lag_norms;  // j = 1..d
  CharPoly poly;
  double coefficient_mass = 0.0;  // sum_i |rho_i|
  bool clean = false;             // every lag_norm <= tol
};

Certificate ch_certificate(const LinearRNN& model, double tol);

struct SlacknessEntry {
  std::size_t eigen_index = 0;  // s
  std::size_t column = 0;       // i (always 0 for SISO)
  double lambda = 0.0;
  double u = 0.0;               // (V^T B)_{s,i}
  double product = 0.0;         // |u * lambda|
};

struct SlacknessProfile {
  std::vector<double> eigenvalues;  // descending by |lambda|
  Matrix projection;                // U = V^T B
  std::vector<SlacknessEntry> entries;  // d (SISO) or d*n (MIMO)
  double max_product = 0.0;
};

inline constexpr double kSlacknessAsymmetryTol = 1e-6;

// Pairs eigenvalues of A with the eigen-coordinates of B. Throws
// PreconditionError (carrying the asymmetry norm) unless
// ||A - A^T||_F <= 1e-6 (1 + ||A||_F).
SlacknessProfile slackness_profile(const LinearRNN& model);

struct SymmetryDrift {
  double asym_A = 0.0;
  std::optional<double> asym_BC;  // absent when n != m
};

SymmetryDrift symmetry_drift(const LinearRNN& model);

struct DiagnosticsReport {
  std::map<std::size_t, double> mse_by_length;
  double cb_gap = 0.0;
  double max_power_gap = 0.0;
  std::optional<double> ch_residual;  // present when d <= 32
  std::optional<SlacknessProfile> slackness;  // present when A is symmetric
  SymmetryDrift symmetry;
  bool extrapolates = false;
  std::size_t horizon = 0;
  double tol = 0.0;
};

// horizon 0 selects the default 20 d.
DiagnosticsReport diagnose(const LinearRNN& model,
                           const MemorylessTeacher& teacher,
                           std::span<const std::size_t> lengths,
                           std::size_t horizon = 0,
                           double tol = kDefaultVerdictTol);

}  // namespace extrap

#endif  // EXTRAP_DIAGNOSTICS_H_
