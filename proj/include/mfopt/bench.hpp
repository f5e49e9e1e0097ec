#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/instances.hpp"
#include "mfopt/oracle.hpp"
#include "mfopt/problem.hpp"
#include "mfopt/solver.hpp"

namespace mfopt {

// ---------------------------------------------------------------------------
// Summary statistics.

struct Stats {
  double mean = 0.0;
  double std = 0.0;                 // sample std (n - 1); 0 for one value
  std::optional<double> rsd_pct;    // 100 std / |mean|; absent when mean = 0
  bool degenerate = false;          // single value
};

inline Stats stats(std::span<const double> values) {
  if (values.empty()) throw DomainError("stats of an empty list");
  Stats s;
  const auto n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() == 1) {
    s.degenerate = true;
  } else {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  if (s.mean != 0.0) s.rsd_pct = 100.0 * s.std / std::abs(s.mean);
  return s;
}

// ---------------------------------------------------------------------------
// Experiment description.

struct Budget {
  std::optional<std::size_t> max_iters;
  std::optional<double> time_limit;

  std::string label() const {
    std::string out = "MF";
    if (max_iters) out += "@iters=" + std::to_string(*max_iters);
    if (time_limit) out += "@time=" + detail::format_double(*time_limit);
    return out;
  }
};

enum class FileFormat { kNative, kBillionetSoutif };

struct ExperimentSpec {
  ProblemKind kind = ProblemKind::kKp;
  std::vector<std::size_t> sizes;
  std::size_t instances_per_size = 10;
  std::size_t runs_per_instance = 10;
  // Each budget is run on every (instance, run) with the same per-run seed.
  // Empty: one budget taken from `solver`.
  std::vector<Budget> budgets;
  SolveConfig solver;
  double density = 1.0;                // QKP generator
  double capacity_fraction = 0.25;     // KP generator
  // Instances loaded from disk instead of generated; `sizes` is ignored.
  std::vector<std::string> instance_files;
  FileFormat file_format = FileFormat::kNative;
  // Optional best-known objective (minimization sign) per loaded file.
  std::vector<double> known_optima;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  bool record_timing = true;
  std::string output;  // aggregate CSV; raw rows go to <output>.raw.csv

  void validate() const {
    if (instances_per_size < 1 || runs_per_instance < 1) {
      throw DomainError("instance and run counts must be >= 1");
    }
    if (instance_files.empty() && sizes.empty()) {
      throw DomainError("experiment needs sizes or instance files");
    }
    if (kind == ProblemKind::kGeneric && instance_files.empty()) {
      throw DomainError("generic experiments need instance files");
    }
    if (!known_optima.empty() && known_optima.size() != instance_files.size()) {
      throw DomainError("known_optima must match instance_files");
    }
    if (workers < 1) throw DomainError("workers must be >= 1");
    solver.validate();
  }
};

struct RawRow {
  std::size_t size = 0;
  std::size_t instance = 0;
  std::size_t run = 0;
  std::string method;
  std::uint64_t seed = 0;
  double objective = 0.0;
  bool feasible = false;
  std::optional<double> oracle;
  std::optional<double> ratio;
  std::optional<double> time;
  std::size_t iterations = 0;
  double final_mu = 0.0;
};

struct StatRow {
  std::size_t size = 0;
  std::string method;
  std::size_t runs = 0;
  std::size_t feasible_runs = 0;
  std::optional<double> mean_ratio;
  std::optional<double> std_ratio;
  double mean_best = 0.0;
  double std_best = 0.0;
  // Over all runs of the row, and averaged over per-instance run sets.
  std::optional<double> rsd_pct;
  std::optional<double> mean_instance_rsd_pct;
  std::optional<double> mean_time;
  std::optional<double> std_time;
};

struct ExperimentResult {
  std::vector<RawRow> raw;
  std::vector<StatRow> aggregate;
};

// ---------------------------------------------------------------------------
// Seeds. h <- mix(master); for v in (size, instance, run): h <- mix(h ^ (v +
// golden)). Instance seeds use run = 0, solver runs use run + 1, so any run
// can be replayed from (master, size, instance, run) alone.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t size,
                                 std::uint64_t instance, std::uint64_t run) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t v : {size, instance, run}) {
    h = mix64(h ^ (v + 0x9E3779B97F4A7C15ull));
  }
  return h;
}

inline std::uint64_t instance_seed(std::uint64_t master, std::size_t size,
                                   std::size_t instance) {
  return derive_seed(master, size, instance, 0);
}

inline std::uint64_t run_seed(std::uint64_t master, std::size_t size,
                              std::size_t instance, std::size_t run) {
  return derive_seed(master, size, instance, run + 1);
}

// ---------------------------------------------------------------------------

// Gain-oriented quality |solver| / |optimum|, capped at 1.
inline std::optional<double> quality_ratio(double objective, bool feasible,
                                           std::optional<double> optimum) {
  if (!optimum || *optimum == 0.0) return std::nullopt;
  if (!feasible) return 0.0;
  return std::min(1.0, std::abs(objective) / std::abs(*optimum));
}

// Exact optimum when an in-repo oracle applies at this size.
inline std::optional<double> oracle_value(const ProblemInstance& inst) {
  try {
    if (inst.kind() == ProblemKind::kKp) {
      const auto r = kp_dp(inst);
      if (r.feasible) return r.optimal_value;
      return std::nullopt;
    }
    if (inst.n_vars() <= kBruteForceLimit) {
      const auto r = brute_force(inst);
      if (r.feasible) return r.optimal_value;
    }
  } catch (const Refused&) {
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<StatRow> aggregate_rows(const std::vector<RawRow>& raw) {
  // Keyed by (size, method) in first-appearance order of the sorted raw rows.
  std::vector<std::pair<std::size_t, std::string>> keys;
  std::map<std::pair<std::size_t, std::string>, std::vector<const RawRow*>> groups;
  for (const auto& r : raw) {
    auto key = std::make_pair(r.size, r.method);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(&r);
  }

  std::vector<StatRow> out;
  for (const auto& key : keys) {
    const auto& rows = groups[key];
    StatRow s;
    s.size = key.first;
    s.method = key.second;
    s.runs = rows.size();
    std::vector<double> best, ratios, times;
    std::map<std::size_t, std::vector<double>> per_instance;
    for (const RawRow* r : rows) {
      if (r->feasible) ++s.feasible_runs;
      best.push_back(std::abs(r->objective));
      per_instance[r->instance].push_back(std::abs(r->objective));
      if (r->ratio) ratios.push_back(*r->ratio);
      if (r->time) times.push_back(*r->time);
    }
    const Stats b = stats(best);
    s.mean_best = b.mean;
    s.std_best = b.std;
    s.rsd_pct = b.rsd_pct;
    if (ratios.size() == rows.size()) {
      const Stats rs = stats(ratios);
      s.mean_ratio = rs.mean;
      s.std_ratio = rs.std;
    }
    if (times.size() == rows.size()) {
      const Stats ts = stats(times);
      s.mean_time = ts.mean;
      s.std_time = ts.std;
    }
    double rsd_sum = 0.0;
    bool rsd_ok = true;
    for (const auto& [inst, values] : per_instance) {
      const Stats is = stats(values);
      if (!is.rsd_pct) {
        rsd_ok = false;
        break;
      }
      rsd_sum += *is.rsd_pct;
    }
    if (rsd_ok) {
      s.mean_instance_rsd_pct =
          rsd_sum / static_cast<double>(per_instance.size());
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::optional<double> parse_opt(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error("bad CSV number '" + field + "'");
  }
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline constexpr std::string_view kRawHeader =
    "size,instance,run,method,seed,objective,feasible,oracle,ratio,time,"
    "iterations,final_mu";
inline constexpr std::string_view kAggregateHeader =
    "size,method,runs,feasible_runs,mean_ratio,std_ratio,mean_best,std_best,"
    "rsd_pct,mean_instance_rsd_pct,mean_time,std_time";

inline void write_raw_csv(const std::vector<RawRow>& rows, std::ostream& out) {
  out << "# mfopt-bench-raw v1; objective is minimized (negative gains); "
         "ratio = |objective| / |oracle| capped at 1; seed = run seed\n";
  out << kRawHeader << '\n';
  for (const auto& r : rows) {
    out << r.size << ',' << r.instance << ',' << r.run << ',' << r.method << ','
        << r.seed << ',' << detail::format_double(r.objective) << ','
        << (r.feasible ? 1 : 0) << ',' << detail::opt(r.oracle) << ','
        << detail::opt(r.ratio) << ',' << detail::opt(r.time) << ','
        << r.iterations << ',' << detail::format_double(r.final_mu) << '\n';
  }
}

inline void write_aggregate_csv(const std::vector<StatRow>& rows,
                                std::ostream& out) {
  out << "# mfopt-bench-aggregate v1; ratios on |objective| (gain "
         "orientation); rsd_pct = 100 std(|best|) / mean(|best|)\n";
  out << kAggregateHeader << '\n';
  for (const auto& s : rows) {
    out << s.size << ',' << s.method << ',' << s.runs << ',' << s.feasible_runs
        << ',' << detail::opt(s.mean_ratio) << ',' << detail::opt(s.std_ratio)
        << ',' << detail::format_double(s.mean_best) << ','
        << detail::format_double(s.std_best) << ',' << detail::opt(s.rsd_pct)
        << ',' << detail::opt(s.mean_instance_rsd_pct) << ','
        << detail::opt(s.mean_time) << ',' << detail::opt(s.std_time) << '\n';
  }
}

inline std::vector<RawRow> read_raw_csv(std::istream& in) {
  std::vector<RawRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.starts_with('#')) continue;
    if (!header_seen) {
      if (line != kRawHeader) throw Error("unexpected raw CSV header");
      header_seen = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 12) throw Error("raw CSV row has wrong field count");
    RawRow r;
    r.size = std::stoull(f[0]);
    r.instance = std::stoull(f[1]);
    r.run = std::stoull(f[2]);
    r.method = f[3];
    r.seed = std::stoull(f[4]);
    r.objective = *detail::parse_opt(f[5]);
    r.feasible = f[6] == "1";
    r.oracle = detail::parse_opt(f[7]);
    r.ratio = detail::parse_opt(f[8]);
    r.time = detail::parse_opt(f[9]);
    r.iterations = std::stoull(f[10]);
    r.final_mu = *detail::parse_opt(f[11]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/**
 * Runs the experiment. Instances are produced one at a time (generated from
 * derived seeds or loaded); the runs of an instance are spread over
 * `workers` threads and collected in (size, instance, budget, run) order, so
 * the result does not depend on scheduling.
 */
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<Budget> budgets = spec.budgets;
  if (budgets.empty()) budgets.push_back(Budget{});

  struct Source {
    std::size_t size_hint;
    std::size_t index;
    std::optional<std::string> file;
  };
  std::vector<Source> sources;
  if (!spec.instance_files.empty()) {
    for (std::size_t i = 0; i < spec.instance_files.size(); ++i) {
      sources.push_back({0, i, spec.instance_files[i]});
    }
  } else {
    for (std::size_t n : spec.sizes) {
      for (std::size_t i = 0; i < spec.instances_per_size; ++i) {
        sources.push_back({n, i, std::nullopt});
      }
    }
  }

  ExperimentResult result;
  for (const auto& src : sources) {
    ProblemInstance inst;
    std::optional<double> optimum;
    if (src.file) {
      inst = spec.file_format == FileFormat::kBillionetSoutif
                 ? read_billionet_soutif(*src.file)
                 : read_instance(*src.file);
      if (!spec.known_optima.empty()) optimum = spec.known_optima[src.index];
    } else {
      const std::uint64_t seed =
          instance_seed(spec.master_seed, src.size_hint, src.index);
      if (spec.kind == ProblemKind::kKp) {
        inst = gen_kp_strong({.n = src.size_hint,
                              .capacity_fraction = spec.capacity_fraction,
                              .seed = seed});
      } else {
        inst = gen_qkp({.n = src.size_hint, .density = spec.density,
                        .seed = seed});
      }
    }
    if (!optimum) optimum = oracle_value(inst);
    const std::size_t size = inst.n_vars();

    const std::size_t jobs = budgets.size() * spec.runs_per_instance;
    std::vector<RawRow> rows(jobs);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(jobs);
    auto worker = [&] {
      for (std::size_t j = next++; j < jobs; j = next++) {
        const Budget& budget = budgets[j / spec.runs_per_instance];
        const std::size_t run = j % spec.runs_per_instance;
        SolveConfig cfg = spec.solver;
        cfg.seed = run_seed(spec.master_seed, size, src.index, run);
        if (budget.max_iters) cfg.max_outer_iters = *budget.max_iters;
        if (budget.time_limit) cfg.time_limit = budget.time_limit;
        try {
          const SolveReport rep = solve(inst, cfg);
          RawRow& r = rows[j];
          r.size = size;
          r.instance = src.index;
          r.run = run;
          r.method = budget.label();
          r.seed = cfg.seed;
          r.objective = rep.best_objective;
          // Re-verified independently of the solver's own flag.
          r.feasible = rep.feasible && is_feasible(inst, rep.best_x);
          r.oracle = optimum;
          r.ratio = quality_ratio(r.objective, r.feasible, optimum);
          if (spec.record_timing) r.time = rep.wall_time;
          r.iterations = rep.outer_iterations;
          r.final_mu = rep.final_mu;
        } catch (const std::exception& e) {
          errors[j] = e.what();
        }
      }
    };
    const std::size_t n_threads = std::min(spec.workers, jobs);
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error("solver run failed: " + e);
    }
    result.raw.insert(result.raw.end(), rows.begin(), rows.end());
  }
  result.aggregate = detail::aggregate_rows(result.raw);
  return result;
}

inline std::string raw_path_for(const std::string& output) {
  return output + ".raw.csv";
}

// Writes both CSVs, then re-reads the raw file and checks that the aggregate
// rows are reproduced exactly.
inline void write_experiment(const ExperimentResult& result,
                             const std::string& output) {
  std::ostringstream raw_text;
  write_raw_csv(result.raw, raw_text);
  std::ostringstream agg_text;
  write_aggregate_csv(result.aggregate, agg_text);

  std::istringstream reread(raw_text.str());
  std::ostringstream recomputed;
  write_aggregate_csv(detail::aggregate_rows(read_raw_csv(reread)), recomputed);
  if (recomputed.str() != agg_text.str()) {
    throw Error("aggregate rows are not reproducible from the raw CSV");
  }

  std::ofstream raw(raw_path_for(output));
  std::ofstream agg(output);
  if (!raw || !agg) throw Error("cannot open output '" + output + "'");
  raw << raw_text.str();
  agg << agg_text.str();
}

// ---------------------------------------------------------------------------
// Plain-text experiment config: one "key = value" per line, '#' comments.
// Lists are comma separated. Keys:
//   kind, sizes, instances, runs, seed, workers, out, density,
//   capacity_fraction, tol, max_iters, time_limit, mode, samples, alpha,
//   inner_sweeps, iteration_budgets, time_budgets, record_timing,
//   instance_files, file_format (native | billionet-soutif), known_optima

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> list_values(const std::string& v) {
  std::vector<std::string> out;
  for (auto& item : split(v, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline void apply_config_value(ExperimentSpec& spec, const std::string& key,
                               const std::string& value) {
  auto to_size = [&](const std::string& v) {
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw DomainError("'" + key + "': not a count: '" + v + "'");
    }
    return out;
  };
  auto to_double = [&](const std::string& v) {
    const auto d = detail::parse_opt(v);
    if (!d) throw DomainError("'" + key + "' needs a value");
    return *d;
  };

  if (key == "kind") {
    spec.kind = parse_kind(value);
  } else if (key == "sizes") {
    spec.sizes.clear();
    for (const auto& v : detail::list_values(value)) spec.sizes.push_back(to_size(v));
  } else if (key == "instances") {
    spec.instances_per_size = to_size(value);
  } else if (key == "runs") {
    spec.runs_per_instance = to_size(value);
  } else if (key == "seed") {
    spec.master_seed = std::stoull(value);
  } else if (key == "workers") {
    spec.workers = to_size(value);
  } else if (key == "out") {
    spec.output = value;
  } else if (key == "density") {
    spec.density = to_double(value);
  } else if (key == "capacity_fraction") {
    spec.capacity_fraction = to_double(value);
  } else if (key == "tol") {
    spec.solver.tol = to_double(value);
  } else if (key == "max_iters") {
    spec.solver.max_outer_iters = to_size(value);
  } else if (key == "time_limit") {
    spec.solver.time_limit = to_double(value);
  } else if (key == "mode") {
    spec.solver.mode = parse_mode(value);
  } else if (key == "samples") {
    spec.solver.samples_per_iter = to_size(value);
  } else if (key == "alpha") {
    spec.solver.alpha = to_double(value);
  } else if (key == "inner_sweeps") {
    spec.solver.inner_sweeps = to_size(value);
  } else if (key == "iteration_budgets") {
    for (const auto& v : detail::list_values(value)) {
      spec.budgets.push_back(Budget{.max_iters = to_size(v)});
    }
  } else if (key == "time_budgets") {
    for (const auto& v : detail::list_values(value)) {
      spec.budgets.push_back(Budget{.time_limit = to_double(v)});
    }
  } else if (key == "record_timing") {
    if (value != "true" && value != "false") {
      throw DomainError("record_timing must be true or false");
    }
    spec.record_timing = value == "true";
  } else if (key == "instance_files") {
    spec.instance_files = detail::list_values(value);
  } else if (key == "file_format") {
    if (value == "native") {
      spec.file_format = FileFormat::kNative;
    } else if (value == "billionet-soutif") {
      spec.file_format = FileFormat::kBillionetSoutif;
    } else {
      throw DomainError("unknown file_format '" + value + "'");
    }
  } else if (key == "known_optima") {
    spec.known_optima.clear();
    for (const auto& v : detail::list_values(value)) {
      spec.known_optima.push_back(to_double(v));
    }
  } else {
    throw DomainError("unknown config key '" + key + "'");
  }
}

inline ExperimentSpec parse_experiment_config(std::istream& in,
                                              ExperimentSpec spec = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    try {
      apply_config_value(spec, detail::trim(text.substr(0, eq)),
                         detail::trim(text.substr(eq + 1)));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return spec;
}

inline ExperimentSpec parse_experiment_config(const std::string& path,
                                              ExperimentSpec spec = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  return parse_experiment_config(in, std::move(spec));
}

}  // namespace mfopt
