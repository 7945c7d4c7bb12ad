#ifndef EXTRAP_EXPERIMENTS_H_
#define EXTRAP_EXPERIMENTS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "extrap/csv.h"
#include "extrap/datagen.h"
#include "extrap/diagnostics.h"
#include "extrap/training.h"

namespace extrap {

enum class ModelKind { kLinear, kGru, kLstm };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& name);
std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct ExperimentSpec {
  std::string id;  // fig1 | fig2 | fig3 | fig4 | sweep-dstar | train | ...
  std::vector<ModelKind> models{ModelKind::kLinear};
  std::size_t d = 30;
  std::size_t k = 5;
  double w_star = 1.0;
  std::size_t d_star = 0;  // 0: memoryless teacher
  std::vector<std::size_t> d_stars;  // sweep-dstar grid
  InitSpec init;
  // Drawn uniformly in [0, 1) from the seed when the scheme needs alpha and
  // none is set.
  bool random_alpha = false;
  OptimizerSpec optimizer;
  std::size_t batch = 128;  // sequences per sampled step
  std::vector<std::size_t> lengths;
  std::size_t n_mc = 100000;
  bool adversarial = false;
  std::size_t l_adv = 10;
  std::uint64_t seed = 0;
  std::uint64_t record_every = 100;
  std::string out_dir = ".";

  // Throws PreconditionError naming the offending field.
  void validate() const;
  // One key=value per line in fixed order; identical specs give identical
  // text.
  std::string canonical() const;
  std::string hash() const;  // fnv1a_hex(canonical())
  Provenance provenance() const;
};

// Defaults for each subcommand; throws PreconditionError on unknown ids.
ExperimentSpec default_spec(const std::string& id);

// Worker count from EXTRAP_WORKERS (default: hardware concurrency, >= 1).
std::size_t worker_count();

// Runs task(i) for i in [0, count) on up to `workers` threads. Results keep
// index order; the first exception (lowest index) is rethrown.
template <typename T>
std::vector<T> parallel_map(std::size_t count, std::size_t workers,
                            const std::function<T(std::size_t)>& task);

// Sequences per length for adversarial batches: ceil(batch / (l_adv-k+1)).
std::size_t adversarial_per_length(const ExperimentSpec& spec);

struct TrainedStudent {
  ModelKind kind = ModelKind::kLinear;
  bool adversarial = false;
  Student student;
  double final_loss = 0.0;
  std::uint64_t steps_taken = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
};

// Sampled-data training of one student on `teacher`, honest or adversarial,
// with streaming batches seeded from (spec.seed, kind, regime).
TrainedStudent train_student(const ExperimentSpec& spec, ModelKind kind,
                             const Teacher& teacher, bool adversarial);

// Closed form for linear students, Monte Carlo (spec.n_mc) for gated ones.
std::map<std::size_t, MseEstimate> evaluate_student(
    const ExperimentSpec& spec, const TrainedStudent& trained,
    const Teacher& teacher);

// Teacher used by fig1/fig2/train: memoryless w* when d_star == 0, else an
// LDS teacher of dimension d_star drawn from the seed.
Teacher experiment_teacher(const ExperimentSpec& spec, std::size_t d_star);

// extrapolation.csv: model, regime, length, mse, se.
CsvTable run_extrapolation(const ExperimentSpec& spec);
// slackness.csv: index, lambda, u, product.
CsvTable run_slackness(const ExperimentSpec& spec);
// dynamics.csv: step, loss, norm_A, norm_B, norm_C, asym_A, asym_BC.
CsvTable run_dynamics(const ExperimentSpec& spec);
// dstar.csv: dstar, mean_extrap_mse.
CsvTable run_dstar_sweep(const ExperimentSpec& spec);

// The LinearRNN at the start of fig3/fig4/train runs.
LinearRNN initial_model(const ExperimentSpec& spec);

// Population training for memoryless teachers, sampled otherwise.
TrainRecord train_linear(const ExperimentSpec& spec);

struct SuiteCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
};

std::string format_check(const SuiteCheck& check);

// Analytic vs. finite-difference gradients (population, BPTT, gated cells).
std::vector<SuiteCheck> run_gradcheck_suite(std::uint64_t seed);
// Certificates and verdicts for a symmetric trained model and for the
// constructed non-extrapolating models.
std::vector<SuiteCheck> run_certify_suite(const ExperimentSpec& spec);
// Closed forms of the constructed zero/low-loss non-extrapolating models.
std::vector<SuiteCheck> run_bad_solutions_suite();

// A ~ N(0, a_scale^2 / d) entrywise, B and C ~ N(0, 1), W* ~ N(0, 1) for the
// paired teacher; draws on CounterRng(seed) in that order.
struct RandomProblem {
  LinearRNN model;
  MemorylessTeacher teacher;
};
RandomProblem random_problem(std::size_t d, std::size_t n, std::size_t m,
                             std::uint64_t seed, double a_scale = 0.8);

// |a - b| / max(|a|, |b|, floor): relative above the floor, scaled absolute
// below it.
double relative_gap(double a, double b, double floor = 1e-4);

// Max relative_gap between analytic and central-difference (step h)
// derivatives of f over every entry of the parameter blocks.
double max_gradient_gap(
    std::vector<Matrix> params, const std::vector<Matrix>& analytic,
    const std::function<double(const std::vector<Matrix>&)>& f,
    double h = 1e-5);

}  // namespace extrap

#include "extrap/experiments_inl.h"

#endif  // EXTRAP_EXPERIMENTS_H_
