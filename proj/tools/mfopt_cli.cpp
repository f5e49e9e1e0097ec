// mfopt command-line harness: instance generation, single solves, exact
// oracles and batch benchmarks.
//
// Exit codes: 0 success, 2 no feasible solution, 3 input error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfopt/mfopt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitInputError = 3;

using nlohmann::json;

json to_json(const mfopt::SolveReport& r) {
  json curve = json::array();
  for (double v : r.best_curve) {
    curve.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  }
  json traj = json::array();
  for (const auto& m : r.mu_trajectory) {
    traj.push_back({{"iteration", m.iteration}, {"mu", m.mu}, {"slack", m.slack}});
  }
  std::vector<int> x(r.best_x.begin(), r.best_x.end());
  return {{"feasible", r.feasible},
          {"best_objective", r.best_objective},
          {"best_x", x},
          {"best_mu", r.best_mu},
          {"final_mu", r.final_mu},
          {"final_slack", r.final_slack},
          {"converged", r.converged},
          {"outer_iterations", r.outer_iterations},
          {"wall_time", r.wall_time},
          {"final_residual", r.final_residual},
          {"lambda", r.final_multipliers.lambda},
          {"mu", r.final_multipliers.mu},
          {"diagnostic", r.diagnostic},
          {"mu_trajectory", traj},
          {"best_curve", curve}};
}

void emit(const json& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw mfopt::Error("cannot open '" + out + "' for writing");
  f << doc.dump(2) << '\n';
}

mfopt::ProblemInstance load(const std::string& path, bool billionet_soutif) {
  return billionet_soutif ? mfopt::read_billionet_soutif(path)
                          : mfopt::read_instance(path);
}

struct SolverFlags {
  std::optional<double> tol;
  std::optional<std::size_t> max_iters;
  std::optional<double> time_limit;
  std::optional<double> alpha;
  std::optional<std::string> mode;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> inner_sweeps;

  void add_to(CLI::App* app) {
    app->add_option("--tol", tol, "slack tolerance");
    app->add_option("--max-iters", max_iters, "outer iteration budget");
    app->add_option("--time-limit", time_limit, "seconds per solve");
    app->add_option("--alpha", alpha, "finite-size correction of the KP mu0");
    app->add_option("--mode", mode, "candidate extraction")
        ->check(CLI::IsMember({"round", "sample", "both"}));
    app->add_option("--samples", samples, "samples per iteration");
    app->add_option("--inner-sweeps", inner_sweeps, "QKP sweeps per iteration");
  }

  void apply(mfopt::SolveConfig& cfg) const {
    if (tol) cfg.tol = *tol;
    if (max_iters) cfg.max_outer_iters = *max_iters;
    if (time_limit) cfg.time_limit = time_limit;
    if (alpha) cfg.alpha = alpha;
    if (mode) cfg.mode = mfopt::parse_mode(*mode);
    if (samples) cfg.samples_per_iter = *samples;
    if (inner_sweeps) cfg.inner_sweeps = *inner_sweeps;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field solver for constrained binary optimization"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  std::string gen_kind = "kp";
  std::size_t gen_n = 100;
  std::uint64_t gen_seed = 0;
  double gen_density = 1.0;
  double gen_capacity = 0.25;
  std::string gen_out;
  gen->add_option("--kind", gen_kind, "kp or qkp")
      ->check(CLI::IsMember({"kp", "qkp"}));
  gen->add_option("--n", gen_n, "number of items")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--density", gen_density, "QKP off-diagonal density");
  gen->add_option("--capacity-fraction", gen_capacity, "KP capacity / sum w");
  gen->add_option("--out", gen_out, "output path")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "solve one instance");
  std::string solve_path;
  bool solve_bs = false;
  std::optional<std::string> solve_kind;
  std::uint64_t solve_seed = 0;
  std::string solve_out;
  SolverFlags solve_flags;
  solve->add_option("instance", solve_path, "instance file")->required();
  solve->add_flag("--bs", solve_bs, "input uses the Billionet-Soutif layout");
  solve->add_option("--kind", solve_kind, "force a solver path")
      ->check(CLI::IsMember({"kp", "qkp", "generic"}));
  solve->add_option("--seed", solve_seed, "solver seed");
  solve->add_option("--out", solve_out, "JSON report path (default stdout)");
  solve_flags.add_to(solve);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact solve (brute force or DP)");
  std::string oracle_path;
  bool oracle_bs = false;
  std::string oracle_out;
  oracle->add_option("instance", oracle_path, "instance file")->required();
  oracle->add_flag("--bs", oracle_bs, "input uses the Billionet-Soutif layout");
  oracle->add_option("--out", oracle_out, "JSON output path (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "run a batch experiment");
  std::string bench_config;
  std::optional<std::string> bench_kind;
  std::vector<std::size_t> bench_sizes;
  std::optional<std::size_t> bench_instances;
  std::optional<std::size_t> bench_runs;
  std::optional<std::uint64_t> bench_seed;
  std::optional<double> bench_density;
  std::optional<std::size_t> bench_workers;
  std::optional<std::string> bench_out;
  bool bench_no_timing = false;
  SolverFlags bench_flags;
  bench->add_option("--config", bench_config, "key = value experiment file");
  bench->add_option("--kind", bench_kind, "kp or qkp")
      ->check(CLI::IsMember({"kp", "qkp", "generic"}));
  bench->add_option("--n", bench_sizes, "problem sizes")->delimiter(',');
  bench->add_option("--instances", bench_instances, "instances per size");
  bench->add_option("--runs", bench_runs, "runs per instance");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--density", bench_density, "QKP density");
  bench->add_option("--workers", bench_workers, "parallel solver runs");
  bench->add_option("--out", bench_out, "aggregate CSV path");
  bench->add_flag("--no-timing", bench_no_timing,
                  "leave time columns empty (byte-identical reruns)");
  bench_flags.add_to(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*gen) {
      const auto inst =
          gen_kind == "kp"
              ? mfopt::gen_kp_strong({.n = gen_n,
                                      .capacity_fraction = gen_capacity,
                                      .seed = gen_seed})
              : mfopt::gen_qkp({.n = gen_n, .density = gen_density,
                                .seed = gen_seed});
      mfopt::write_instance(inst, gen_out);
      return kExitOk;
    }

    if (*solve) {
      const auto inst = load(solve_path, solve_bs);
      mfopt::SolveConfig cfg;
      cfg.seed = solve_seed;
      solve_flags.apply(cfg);
      mfopt::SolveReport report;
      if (solve_kind && *solve_kind == "generic") {
        report = mfopt::solve_generic(inst, cfg);
      } else {
        if (solve_kind && mfopt::parse_kind(*solve_kind) != inst.kind()) {
          throw mfopt::MalformedInstance("instance kind is '" +
                                         std::string(to_string(inst.kind())) +
                                         "'");
        }
        report = mfopt::solve(inst, cfg);
      }
      emit(to_json(report), solve_out);
      return report.feasible ? kExitOk : kExitInfeasible;
    }

    if (*oracle) {
      const auto inst = load(oracle_path, oracle_bs);
      const auto res = inst.kind() == mfopt::ProblemKind::kKp &&
                               inst.n_vars() > mfopt::kBruteForceLimit
                           ? mfopt::kp_dp(inst)
                           : mfopt::brute_force(inst);
      std::vector<int> x(res.optimal_x.begin(), res.optimal_x.end());
      emit({{"feasible", res.feasible},
            {"optimal_value", res.optimal_value},
            {"optimal_x", x},
            {"method", std::string(to_string(res.method))},
            {"elapsed", res.elapsed}},
           oracle_out);
      return res.feasible ? kExitOk : kExitInfeasible;
    }

    if (*bench) {
      mfopt::ExperimentSpec spec;
      if (!bench_config.empty()) {
        spec = mfopt::parse_experiment_config(bench_config);
      }
      if (bench_kind) spec.kind = mfopt::parse_kind(*bench_kind);
      if (!bench_sizes.empty()) spec.sizes = bench_sizes;
      if (bench_instances) spec.instances_per_size = *bench_instances;
      if (bench_runs) spec.runs_per_instance = *bench_runs;
      if (bench_seed) spec.master_seed = *bench_seed;
      if (bench_density) spec.density = *bench_density;
      if (bench_workers) spec.workers = *bench_workers;
      if (bench_out) spec.output = *bench_out;
      if (bench_no_timing) spec.record_timing = false;
      bench_flags.apply(spec.solver);
      if (spec.output.empty()) spec.output = "bench.csv";

      const auto result = mfopt::run_experiment(spec);
      mfopt::write_experiment(result, spec.output);
      std::size_t feasible = 0;
      for (const auto& r : result.raw) feasible += r.feasible ? 1 : 0;
      std::cerr << "wrote " << spec.output << " and "
                << mfopt::raw_path_for(spec.output) << " (" << result.raw.size()
                << " runs, " << feasible << " feasible)\n";
      return feasible == 0 ? kExitInfeasible : kExitOk;
    }
  } catch (const mfopt::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const mfopt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}
