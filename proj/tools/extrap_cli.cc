#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "extrap/csv.h"
#include "extrap/diagnostics.h"
#include "extrap/errors.h"
#include "extrap/experiments.h"
#include "extrap/training.h"

namespace {

constexpr int kUsageError = 2;
constexpr int kDiverged = 3;
constexpr int kSuiteFailed = 1;

struct Flags {
  std::optional<std::size_t> d;
  std::optional<std::size_t> k;
  std::optional<double> wstar;
  std::vector<std::size_t> dstar;
  std::optional<std::string> init;
  std::optional<double> alpha;
  std::optional<double> variance;
  std::optional<std::string> optimizer;
  std::optional<double> lr;
  std::optional<std::uint64_t> steps;
  std::optional<double> stop_tol;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> lengths;
  std::optional<std::size_t> n_mc;
  std::optional<bool> adversarial;
  std::optional<std::size_t> l_adv;
  std::vector<std::string> models;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> record_every;
  std::optional<std::string> out;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--d", f.d, "State dimension of the student");
  app.add_option("--k", f.k, "Training sequence length");
  app.add_option("--wstar", f.wstar, "Memoryless teacher gain");
  app.add_option("--dstar", f.dstar, "LDS teacher dimension(s); 0 = memoryless")
      ->delimiter(',');
  app.add_option("--init", f.init, "symmetric | xavier | identity");
  app.add_option("--alpha", f.alpha, "A_0 = alpha I (symmetric, identity)");
  app.add_option("--variance", f.variance, "Gaussian init variance");
  app.add_option("--optimizer", f.optimizer, "gd | gd-backtracking | adam");
  app.add_option("--lr", f.lr, "Learning rate (initial trial step when backtracking)");
  app.add_option("--steps", f.steps, "Maximum optimizer steps");
  app.add_option("--stop-tol", f.stop_tol, "Stop once loss <= this");
  app.add_option("--seed", f.seed, "Experiment seed");
  app.add_option("--lengths", f.lengths, "Evaluation lengths, comma separated")
      ->delimiter(',');
  app.add_option("--n-mc", f.n_mc, "Monte Carlo sequences per length");
  app.add_flag("--adversarial,!--no-adversarial", f.adversarial,
               "Include adversarially labeled training");
  app.add_option("--l-adv", f.l_adv, "Longest adversarial training length");
  app.add_option("--models", f.models, "linear,gru,lstm")->delimiter(',');
  app.add_option("--batch", f.batch, "Sequences per sampled step");
  app.add_option("--record-every", f.record_every, "Trajectory recording stride");
  app.add_option("--out", f.out, "Output directory");
}

extrap::ExperimentSpec build_spec(const std::string& id, const Flags& f) {
  extrap::ExperimentSpec s = extrap::default_spec(id);
  if (f.d) s.d = *f.d;
  if (f.k) s.k = *f.k;
  if (f.wstar) s.w_star = *f.wstar;
  if (!f.dstar.empty()) {
    if (id == "sweep-dstar") {
      s.d_stars = f.dstar;
    } else if (f.dstar.size() == 1) {
      s.d_star = f.dstar[0];
    } else {
      throw extrap::PreconditionError("dstar: takes one value for " + id);
    }
  }
  if (f.init) s.init.scheme = extrap::parse_init_scheme(*f.init);
  if (f.alpha) s.init.alpha = *f.alpha;
  if (f.variance) s.init.variance = *f.variance;
  if (f.optimizer) s.optimizer.kind = extrap::parse_optimizer_kind(*f.optimizer);
  if (f.lr) s.optimizer.lr = *f.lr;
  if (f.steps) s.optimizer.max_steps = *f.steps;
  if (f.stop_tol) s.optimizer.stop_tol = *f.stop_tol;
  if (f.seed) s.seed = *f.seed;
  if (!f.lengths.empty()) s.lengths = f.lengths;
  if (f.n_mc) s.n_mc = *f.n_mc;
  if (f.adversarial) s.adversarial = *f.adversarial;
  if (f.l_adv) s.l_adv = *f.l_adv;
  if (!f.models.empty()) {
    s.models.clear();
    for (const auto& m : f.models) s.models.push_back(extrap::parse_model_kind(m));
  }
  if (f.batch) s.batch = *f.batch;
  if (f.record_every) s.record_every = *f.record_every;
  if (f.out) s.out_dir = *f.out;
  s.validate();
  return s;
}

void write_table(const extrap::ExperimentSpec& spec, const std::string& name,
                 const extrap::CsvTable& table,
                 extrap::Provenance provenance) {
  std::filesystem::create_directories(spec.out_dir);
  const auto path = std::filesystem::path(spec.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw extrap::Error("cannot write " + path.string());
  extrap::write_csv(out, provenance, table);
  std::cout << "wrote " << path.string() << '\n';
}

void write_table(const extrap::ExperimentSpec& spec, const std::string& name,
                 const extrap::CsvTable& table) {
  write_table(spec, name, table, spec.provenance());
}

int report(const std::vector<extrap::SuiteCheck>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << extrap::format_check(c) << '\n';
    ok = ok && c.passed;
  }
  return ok ? 0 : kSuiteFailed;
}

extrap::CsvTable dynamics_table(const extrap::TrainRecord& rec) {
  extrap::CsvTable table;
  table.header = {"step", "loss", "norm_A", "norm_B", "norm_C", "asym_A", "asym_BC"};
  for (const auto& s : rec.steps) {
    table.add_row({std::to_string(s.step), extrap::format_real(s.loss),
                   extrap::format_real(s.norm_A), extrap::format_real(s.norm_B),
                   extrap::format_real(s.norm_C), extrap::format_real(s.asym_A),
                   extrap::format_real(s.asym_BC)});
  }
  return table;
}

int run_train(const extrap::ExperimentSpec& spec) {
  extrap::TrainRecord rec;
  try {
    rec = extrap::train_linear(spec);
  } catch (const extrap::DivergenceError& e) {
    auto provenance = spec.provenance();
    provenance.extra.emplace_back("status", "diverged");
    write_table(spec, "dynamics.csv", dynamics_table(e.partial()), provenance);
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  }
  write_table(spec, "dynamics.csv", dynamics_table(rec));
  const extrap::Teacher teacher = extrap::experiment_teacher(spec, spec.d_star);
  extrap::CsvTable table;
  table.header = {"model", "regime", "length", "mse", "se"};
  for (const auto& [l, est] :
       extrap::extrapolation_mse(rec.final_model, teacher, spec.lengths)) {
    table.add_row({"linear", spec.adversarial ? "adversarial" : "honest",
                   std::to_string(l), extrap::format_real(est.mse),
                   extrap::format_real(est.standard_error)});
  }
  write_table(spec, "extrapolation.csv", table);

  std::cout << fmt::format("steps {} ({}), final loss {:.6e}\n", rec.steps_taken,
                           extrap::to_string(rec.stop_reason), rec.final_loss);
  if (const auto* mem = std::get_if<extrap::MemorylessTeacher>(&teacher)) {
    const auto report = extrap::diagnose(rec.final_model, *mem, spec.lengths);
    std::cout << fmt::format(
        "extrapolates: {} (|CB - w*| {:.3e}, max lag norm {:.3e}, horizon {})\n",
        report.extrapolates ? "yes" : "no", report.cb_gap, report.max_power_gap,
        report.horizon);
    if (report.slackness) {
      std::cout << fmt::format("max |u lambda|: {:.3e}\n",
                               report.slackness->max_product);
    }
    std::cout << fmt::format("asymmetry: A {:.3e}", report.symmetry.asym_A);
    if (report.symmetry.asym_BC) {
      std::cout << fmt::format(", B - C^T {:.3e}", *report.symmetry.asym_BC);
    }
    std::cout << '\n';
  }
  return 0;
}

int run(const std::string& id, const extrap::ExperimentSpec& spec) {
  if (id == "fig1" || id == "fig2") {
    write_table(spec, "extrapolation.csv", extrap::run_extrapolation(spec));
  } else if (id == "fig3") {
    write_table(spec, "slackness.csv", extrap::run_slackness(spec));
  } else if (id == "fig4") {
    write_table(spec, "dynamics.csv", extrap::run_dynamics(spec));
  } else if (id == "sweep-dstar") {
    for (std::size_t i = 0; i < spec.models.size(); ++i) {
      extrap::ExperimentSpec one = spec;
      one.models = {spec.models[i]};
      const std::string name =
          i == 0 ? "dstar.csv"
                 : "dstar_" + extrap::to_string(spec.models[i]) + ".csv";
      write_table(one, name, extrap::run_dstar_sweep(one));
    }
  } else if (id == "train") {
    return run_train(spec);
  } else if (id == "certify") {
    return report(extrap::run_certify_suite(spec));
  } else if (id == "gradcheck") {
    return report(extrap::run_gradcheck_suite(spec.seed));
  } else if (id == "bad-solutions") {
    return report(extrap::run_bad_solutions_suite());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal extrapolation experiments for linear and gated RNNs"};
  app.set_config("--config", "", "TOML file with flag values (flags override)");
  app.require_subcommand(1);
  Flags flags;
  add_flags(app, flags);
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"fig1", "memoryless teacher, honest vs. adversarial, MSE by length"},
      {"fig2", "LDS teacher, honest vs. adversarial, MSE by length"},
      {"fig3", "symmetric linear run, slackness profile"},
      {"fig4", "identity-scaled init, population GD trajectory"},
      {"sweep-dstar", "mean extrapolation error against teacher dimension"},
      {"train", "train one linear model and report diagnostics"},
      {"certify", "certificate and verdict suite"},
      {"gradcheck", "analytic vs. finite-difference gradient suite"},
      {"bad-solutions", "constructed non-extrapolating solutions suite"}};
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const std::string id = app.get_subcommands().front()->get_name();
  try {
    const extrap::ExperimentSpec spec = build_spec(id, flags);
    return run(id, spec);
  } catch (const extrap::PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const extrap::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const extrap::CellDivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const extrap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
