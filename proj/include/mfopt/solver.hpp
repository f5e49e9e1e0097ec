#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/meanfield.hpp"
#include "mfopt/problem.hpp"

namespace mfopt {

enum class CandidateMode { kRound, kSample, kBoth };

inline std::string_view to_string(CandidateMode mode) {
  switch (mode) {
    case CandidateMode::kRound:
      return "round";
    case CandidateMode::kSample:
      return "sample";
    case CandidateMode::kBoth:
      return "both";
  }
  return "both";
}

inline CandidateMode parse_mode(std::string_view text) {
  if (text == "round") return CandidateMode::kRound;
  if (text == "sample") return CandidateMode::kSample;
  if (text == "both") return CandidateMode::kBoth;
  throw DomainError("unknown candidate mode '" + std::string(text) + "'");
}

struct SolveConfig {
  // |w.m - d| at which the multiplier counts as converged.
  double tol = 1e-4;
  std::size_t max_outer_iters = 1000;
  // Restart draws are uniform on mu_best * [1 - r, 1 + r].
  double restart_neighborhood = 0.10;
  // QKP: mean-field sweeps per outer iteration, from a fresh random m.
  std::size_t inner_sweeps = 1;
  double inner_damping = 0.0;
  std::optional<double> time_limit;  // seconds
  CandidateMode mode = CandidateMode::kBoth;
  std::size_t samples_per_iter = 8;
  std::uint64_t seed = 0;
  // Finite-size correction of the KP initial multiplier; off when unset.
  std::optional<double> alpha;
  // Fixed subgradient step for the generic solver; scaled default otherwise.
  std::optional<double> step_size;
  // Stop once the multiplier has converged and a feasible point is known.
  // Unset: true for KP, false for QKP (time/iteration budgeted), true for
  // generic.
  std::optional<bool> stop_on_slack;
  MfConfig mf;

  void validate() const {
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");
    if (max_outer_iters < 1) throw DomainError("max_outer_iters must be >= 1");
    if (!(restart_neighborhood > 0.0 && restart_neighborhood < 1.0)) {
      throw DomainError("restart_neighborhood must lie in (0, 1)");
    }
    if (inner_sweeps < 1) throw DomainError("inner_sweeps must be >= 1");
    if (!(inner_damping >= 0.0 && inner_damping < 1.0)) {
      throw DomainError("inner_damping must lie in [0, 1)");
    }
    if (time_limit && !(*time_limit > 0.0)) {
      throw DomainError("time_limit must be > 0");
    }
    if (alpha && !(*alpha >= 1.0)) throw DomainError("alpha must be >= 1");
    if (step_size && !(*step_size > 0.0)) {
      throw DomainError("step size must be > 0");
    }
    mf.validate();
  }
};

struct MuRecord {
  std::size_t iteration = 0;
  double mu = 0.0;
  // KP/QKP: w.m - d at mu. Generic: maximum constraint violation.
  double slack = 0.0;
};

struct SolveReport {
  BinaryVector best_x;
  double best_objective = 0.0;
  bool feasible = false;
  // Multiplier at which best_x was produced.
  double best_mu = 0.0;
  double final_mu = 0.0;
  double final_slack = 0.0;
  bool converged = false;
  std::vector<MuRecord> mu_trajectory;
  std::size_t outer_iterations = 0;
  double wall_time = 0.0;
  // Best feasible objective after each outer iteration (+inf before the
  // first feasible point).
  std::vector<double> best_curve;
  double final_residual = 0.0;
  MultiplierSet final_multipliers;
  std::string diagnostic;
};

// ---------------------------------------------------------------------------
// Multiplier initialization.

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// mu0 = mean(q) / mean(w), optionally minus ln(d / (N w - d)) / (alpha N).
inline double init_mu_kp(const ProblemInstance& inst,
                         std::optional<double> alpha = std::nullopt) {
  if (inst.kind() != ProblemKind::kKp) {
    throw MalformedInstance("init_mu_kp needs a KP instance");
  }
  const double w_bar = mean(inst.weights());
  if (!(w_bar > 0.0)) throw DomainError("mean weight must be > 0");
  double mu = mean(inst.gains()) / w_bar;
  const double n = static_cast<double>(inst.n_vars());
  const double d = inst.capacity();
  // The correction needs 0 < d < N w_bar; otherwise it is skipped.
  if (alpha && d > 0.0 && n * w_bar > d) {
    mu -= std::log(d / (n * w_bar - d)) / (*alpha * n);
  }
  return std::max(mu, 0.0);
}

// mu0 = [2 sum_i q_ii + sum_i sum_{j != i} q_ij] / (N w_bar).
inline double init_mu_qkp(const ProblemInstance& inst) {
  if (inst.kind() != ProblemKind::kQkp) {
    throw MalformedInstance("init_mu_qkp needs a QKP instance");
  }
  const double w_bar = mean(inst.weights());
  if (!(w_bar > 0.0)) throw DomainError("mean weight must be > 0");
  const std::size_t n = inst.n_vars();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = inst.quadratic_row(i);
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off += row[j];
    }
    total += 2.0 * row[i] + off;
  }
  return total / (static_cast<double>(n) * w_bar);
}

// ---------------------------------------------------------------------------
// Slack-driven multiplier search.

enum class TuneStatus {
  kInactive,        // slack(0) <= 0, mu = 0
  kConverged,       // |slack| <= tol
  kBisectionLimit,  // bracket found, tolerance not reached
  kNoBracket,       // slack stays positive for every mu tried
};

struct TuneResult {
  double mu = 0.0;
  double slack = 0.0;
  TuneStatus status = TuneStatus::kConverged;
  std::size_t evaluations = 0;
};

/**
 * Minimizes slack(mu)^2 for a nonincreasing slack(mu) = w.m(mu) - d.
 *
 * An inactive constraint (slack(0) <= 0) returns mu = 0. Otherwise a sign
 * change is bracketed by doubling from mu_start and bisected until
 * |slack| <= tol.
 */
template <typename SlackFn>
TuneResult tune_multiplier(SlackFn&& slack, double mu_start, double tol) {
  constexpr int kMaxDoublings = 60;
  constexpr int kMaxBisections = 200;
  TuneResult out;
  auto f = [&](double mu) {
    ++out.evaluations;
    return slack(mu);
  };

  const double s0 = f(0.0);
  if (s0 <= 0.0) {
    out.mu = 0.0;
    out.slack = s0;
    out.status = TuneStatus::kInactive;
    return out;
  }
  if (std::abs(s0) <= tol) {
    out.mu = 0.0;
    out.slack = s0;
    return out;
  }

  double lo = 0.0;
  double s_lo = s0;
  double hi = mu_start > 0.0 ? mu_start : 1.0;
  double s_hi = f(hi);
  int doublings = 0;
  while (s_hi > 0.0) {
    if (s_hi <= tol || doublings == kMaxDoublings) break;
    lo = hi;
    s_lo = s_hi;
    hi *= 2.0;
    s_hi = f(hi);
    ++doublings;
  }
  if (std::abs(s_hi) <= tol) {
    out.mu = hi;
    out.slack = s_hi;
    return out;
  }
  if (s_hi > 0.0) {
    out.mu = hi;
    out.slack = s_hi;
    out.status = TuneStatus::kNoBracket;
    return out;
  }

  for (int k = 0; k < kMaxBisections; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double s = f(mid);
    if (std::abs(s) <= tol) {
      out.mu = mid;
      out.slack = s;
      return out;
    }
    if (s > 0.0) {
      lo = mid;
      s_lo = s;
    } else {
      hi = mid;
      s_hi = s;
    }
  }
  out.status = TuneStatus::kBisectionLimit;
  if (std::abs(s_lo) < std::abs(s_hi)) {
    out.mu = lo;
    out.slack = s_lo;
  } else {
    out.mu = hi;
    out.slack = s_hi;
  }
  return out;
}

// w.m(mu) - d with m from the KP closed form.
inline double knapsack_slack(const ProblemInstance& inst, double mu,
                             double clamp = kDefaultClamp) {
  const auto q = inst.gains();
  const auto w = inst.weights();
  double total = -inst.capacity();
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i] * self_consistent_marginal(-q[i] + mu * w[i], clamp);
  }
  return total;
}

inline TuneResult tune_mu_slack(const ProblemInstance& inst, double mu_start,
                                const SolveConfig& config) {
  if (inst.kind() != ProblemKind::kKp) {
    throw MalformedInstance("tune_mu_slack needs a KP instance");
  }
  return tune_multiplier(
      [&](double mu) { return knapsack_slack(inst, mu, config.mf.clamp); },
      mu_start, config.tol);
}

// ---------------------------------------------------------------------------
// Candidate handling shared by the outer loops.

namespace detail {

class BestTracker {
 public:
  explicit BestTracker(const ProblemInstance& inst) : inst_(inst) {}

  void offer(const BinaryVector& x, double mu) {
    if (!is_feasible(inst_, x)) return;
    const double obj = objective_value(inst_, std::span<const std::uint8_t>(x));
    if (!found_ || obj < best_obj_ ||
        (obj == best_obj_ && x < best_x_)) {
      found_ = true;
      best_obj_ = obj;
      best_x_ = x;
      best_mu_ = mu;
    }
  }

  bool found() const { return found_; }
  double best_objective() const {
    return found_ ? best_obj_ : std::numeric_limits<double>::infinity();
  }
  const BinaryVector& best_x() const { return best_x_; }
  double best_mu() const { return best_mu_; }

 private:
  const ProblemInstance& inst_;
  bool found_ = false;
  double best_obj_ = 0.0;
  BinaryVector best_x_;
  double best_mu_ = 0.0;
};

inline void extract_candidates(const MeanFieldState& state, double mu,
                               const SolveConfig& config, Rng& rng,
                               BestTracker& tracker) {
  if (config.mode != CandidateMode::kSample) tracker.offer(round(state), mu);
  if (config.mode != CandidateMode::kRound) {
    for (std::size_t s = 0; s < config.samples_per_iter; ++s) {
      tracker.offer(sample(state, rng), mu);
    }
  }
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bool out_of_time(const Stopwatch& clock, const SolveConfig& config) {
  return config.time_limit && clock.seconds() >= *config.time_limit;
}

inline double draw_restart(double center, const SolveConfig& config, Rng& rng) {
  const double r = config.restart_neighborhood;
  std::uniform_real_distribution<double> dist(center * (1.0 - r),
                                              center * (1.0 + r));
  return std::max(0.0, dist(rng));
}

// Complementary slackness at the mean-field point: tight constraint, or a
// zero multiplier with the constraint satisfied.
inline bool slack_converged(const TuneResult& t, double tol) {
  return std::abs(t.slack) <= tol || (t.mu == 0.0 && t.slack <= 0.0);
}

inline void finish(const ProblemInstance& inst, const BestTracker& tracker,
                   SolveReport& report) {
  if (tracker.found()) {
    report.feasible = true;
    report.best_x = tracker.best_x();
    report.best_objective = tracker.best_objective();
    report.best_mu = tracker.best_mu();
    return;
  }
  // Nothing feasible was sampled: fall back to x = 0.
  report.best_x.assign(inst.n_vars(), 0);
  report.best_objective =
      objective_value(inst, std::span<const std::uint8_t>(report.best_x));
  report.feasible = is_feasible(inst, report.best_x);
  if (!report.diagnostic.empty()) report.diagnostic += "; ";
  report.diagnostic += report.feasible
                           ? "no feasible candidate sampled, all-zero baseline"
                           : "no feasible solution found";
}

inline std::string_view describe(TuneStatus s) {
  switch (s) {
    case TuneStatus::kNoBracket:
      return "constraint unsatisfiable at mean-field level (no multiplier "
             "bracket)";
    case TuneStatus::kBisectionLimit:
      return "bisection limit reached before tolerance";
    default:
      return "";
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// KP.

inline SolveReport solve_kp(const ProblemInstance& inst,
                            const SolveConfig& config) {
  if (inst.kind() != ProblemKind::kKp) {
    throw MalformedInstance("solve_kp needs a KP instance");
  }
  config.validate();
  const detail::Stopwatch clock;
  const bool stop_on_slack = config.stop_on_slack.value_or(true);
  Rng rng(config.seed);
  SolveReport report;
  detail::BestTracker tracker(inst);

  const double mu0 = init_mu_kp(inst, config.alpha);
  double mu = mu0;
  for (std::size_t it = 1; it <= config.max_outer_iters; ++it) {
    if (it > 1 && detail::out_of_time(clock, config)) break;
    report.outer_iterations = it;

    detail::extract_candidates(knapsack_marginals(inst, mu, config.mf.clamp),
                               mu, config, rng, tracker);

    const TuneResult tuned = tune_mu_slack(inst, mu, config);
    detail::extract_candidates(
        knapsack_marginals(inst, tuned.mu, config.mf.clamp), tuned.mu, config,
        rng, tracker);

    report.mu_trajectory.push_back({it, tuned.mu, tuned.slack});
    report.best_curve.push_back(tracker.best_objective());
    report.final_mu = tuned.mu;
    report.final_slack = tuned.slack;
    report.converged = detail::slack_converged(tuned, config.tol);
    if (tuned.status == TuneStatus::kNoBracket) {
      report.diagnostic = std::string(detail::describe(tuned.status));
    }
    if (report.converged && stop_on_slack && tracker.found()) break;

    mu = detail::draw_restart(tracker.found() ? tracker.best_mu() : mu0,
                              config, rng);
  }

  report.final_multipliers = MultiplierSet::knapsack(report.final_mu);
  // The closed form is an exact fixed point.
  report.final_residual =
      fixed_point_residual(inst, report.final_multipliers,
                           knapsack_marginals(inst, report.final_mu,
                                              config.mf.clamp));
  detail::finish(inst, tracker, report);
  report.wall_time = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// QKP.

namespace detail {

// Mean-field response m(mu) after `inner_sweeps` sweeps from a fixed start.
// With a single sweep the objective gradient at the start is reused for
// every mu, so each evaluation is O(N).
class QkpResponse {
 public:
  QkpResponse(const ProblemInstance& inst, MeanFieldState start,
              const SolveConfig& config)
      : inst_(inst), start_(std::move(start)), config_(config) {
    if (config_.inner_sweeps == 1) {
      base_grad_ = objective_gradient(inst_, start_.values());
    }
  }

  MeanFieldState at(double mu) const {
    if (config_.inner_sweeps == 1) {
      const auto w = inst_.weights();
      const double clamp = start_.clamp();
      const double theta = config_.inner_damping;
      std::vector<double> m(start_.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double sigma =
            self_consistent_marginal(base_grad_[i] + mu * w[i], clamp);
        m[i] = std::clamp((1.0 - theta) * sigma + theta * start_[i], clamp,
                          1.0 - clamp);
      }
      return MeanFieldState(std::move(m), clamp);
    }
    const auto mult = MultiplierSet::knapsack(mu);
    MeanFieldState m = start_;
    for (std::size_t s = 0; s < config_.inner_sweeps; ++s) {
      m = mf_sweep(inst_, mult, m, config_.inner_damping);
    }
    return m;
  }

  double slack(double mu) const {
    const auto m = at(mu);
    const auto w = inst_.weights();
    double total = -inst_.capacity();
    for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * m[i];
    return total;
  }

 private:
  const ProblemInstance& inst_;
  MeanFieldState start_;
  const SolveConfig& config_;
  std::vector<double> base_grad_;
};

}  // namespace detail

inline SolveReport solve_qkp(const ProblemInstance& inst,
                             const SolveConfig& config) {
  if (inst.kind() != ProblemKind::kQkp) {
    throw MalformedInstance("solve_qkp needs a QKP instance");
  }
  config.validate();
  const detail::Stopwatch clock;
  const bool stop_on_slack = config.stop_on_slack.value_or(false);
  Rng rng(config.seed);
  SolveReport report;
  detail::BestTracker tracker(inst);

  const double mu0 = init_mu_qkp(inst);
  double mu = mu0;
  MeanFieldState last_state;
  for (std::size_t it = 1; it <= config.max_outer_iters; ++it) {
    if (it > 1 && detail::out_of_time(clock, config)) break;
    report.outer_iterations = it;

    const detail::QkpResponse response(
        inst,
        MeanFieldState::random(inst.n_vars(), rng, 0.4, 0.6, config.mf.clamp),
        config);
    detail::extract_candidates(response.at(mu), mu, config, rng, tracker);

    const TuneResult tuned = tune_multiplier(
        [&](double m) { return response.slack(m); }, mu, config.tol);
    last_state = response.at(tuned.mu);
    detail::extract_candidates(last_state, tuned.mu, config, rng, tracker);

    report.mu_trajectory.push_back({it, tuned.mu, tuned.slack});
    report.best_curve.push_back(tracker.best_objective());
    report.final_mu = tuned.mu;
    report.final_slack = tuned.slack;
    report.converged = detail::slack_converged(tuned, config.tol);
    if (tuned.status == TuneStatus::kNoBracket) {
      report.diagnostic = std::string(detail::describe(tuned.status));
    }
    if (report.converged && stop_on_slack && tracker.found()) break;

    mu = detail::draw_restart(tracker.found() ? tracker.best_mu() : mu0,
                              config, rng);
  }

  report.final_multipliers = MultiplierSet::knapsack(report.final_mu);
  report.final_residual =
      fixed_point_residual(inst, report.final_multipliers, last_state);
  detail::finish(inst, tracker, report);
  report.wall_time = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Generic polynomial instances.

namespace detail {

inline double mean_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

inline double sup_norm(const MultiplierSet& mult) {
  double r = 0.0;
  for (double v : mult.lambda) r = std::max(r, std::abs(v));
  for (double v : mult.mu) r = std::max(r, std::abs(v));
  return r;
}

}  // namespace detail

/**
 * Generic three-step scheme: initial multipliers from the ratio of mean
 * objective-gradient magnitude to mean constraint-gradient magnitude (at
 * m = 1/2), then per outer iteration a fixed-point solve, candidate
 * extraction, and a projected subgradient step
 *
 *     mu_k     <- max(0, mu_k + eta_k g_k(m)),
 *     lambda_l <- lambda_l + eta_l h_l(m).
 *
 * Stops when every constraint satisfies complementary slackness within tol
 * (|g_k| for active mu_k, max(0, g_k) otherwise, |h_l|).
 */
inline SolveReport solve_generic(const ProblemInstance& inst,
                                 const SolveConfig& config) {
  config.validate();
  const detail::Stopwatch clock;
  const bool stop_on_slack = config.stop_on_slack.value_or(true);
  const std::size_t n = inst.n_vars();
  Rng rng(config.seed);
  SolveReport report;
  detail::BestTracker tracker(inst);

  const std::vector<double> half(n, 0.5);
  const double f_mag = detail::mean_abs(grad(inst.objective(), half));

  MultiplierSet mult = MultiplierSet::zeros(inst);
  std::vector<double> eta_lambda(mult.lambda.size(), 0.0);
  std::vector<double> eta_mu(mult.mu.size(), 0.0);
  auto scale_for = [&](const MultilinearPolynomial& c, double& ratio,
                       double& eta) {
    const double c_mag = detail::mean_abs(grad(c, half));
    ratio = c_mag > 0.0 ? f_mag / c_mag : 0.0;
    if (config.step_size) {
      eta = *config.step_size;
    } else if (c_mag > 0.0) {
      eta = (ratio > 0.0 ? ratio : 1.0) / (static_cast<double>(n) * c_mag);
    }
  };

  for (std::size_t k = 0; k < mult.mu.size(); ++k) {
    scale_for(inst.inequalities()[k], mult.mu[k], eta_mu[k]);
  }
  if (!mult.lambda.empty()) {
    // The sign of an equality multiplier opposes the violation of the
    // unconstrained mean-field solution.
    const auto free_fp =
        solve_fixed_point(inst, MultiplierSet::zeros(inst),
                          MeanFieldState(half, config.mf.clamp), config.mf);
    for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
      double ratio = 0.0;
      scale_for(inst.equalities()[l], ratio, eta_lambda[l]);
      const double h = eval(inst.equalities()[l], free_fp.state.values());
      mult.lambda[l] = h > 0.0 ? ratio : (h < 0.0 ? -ratio : 0.0);
    }
  }
  const double divergence_limit = 1e6 * std::max(detail::sup_norm(mult), 1.0);
  auto headline = [](const MultiplierSet& m) {
    if (!m.mu.empty()) return m.mu[0];
    if (!m.lambda.empty()) return m.lambda[0];
    return 0.0;
  };

  for (std::size_t it = 1; it <= config.max_outer_iters; ++it) {
    if (it > 1 && detail::out_of_time(clock, config)) break;
    report.outer_iterations = it;

    const auto fp = solve_fixed_point(
        inst, mult,
        MeanFieldState::random(n, rng, 0.4, 0.6, config.mf.clamp), config.mf);
    report.final_residual = fp.residual;
    detail::extract_candidates(fp.state, headline(mult), config, rng, tracker);

    double violation = 0.0;
    std::vector<double> g_vals(mult.mu.size());
    std::vector<double> h_vals(mult.lambda.size());
    for (std::size_t k = 0; k < mult.mu.size(); ++k) {
      g_vals[k] = eval(inst.inequalities()[k], fp.state.values());
      violation = std::max(violation, mult.mu[k] > 0.0
                                          ? std::abs(g_vals[k])
                                          : std::max(0.0, g_vals[k]));
    }
    for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
      h_vals[l] = eval(inst.equalities()[l], fp.state.values());
      violation = std::max(violation, std::abs(h_vals[l]));
    }

    report.mu_trajectory.push_back({it, headline(mult), violation});
    report.best_curve.push_back(tracker.best_objective());
    report.final_mu = headline(mult);
    report.final_slack = violation;
    report.final_multipliers = mult;
    report.converged = violation <= config.tol;
    if (report.converged && stop_on_slack && tracker.found()) break;

    for (std::size_t k = 0; k < mult.mu.size(); ++k) {
      mult.mu[k] = std::max(0.0, mult.mu[k] + eta_mu[k] * g_vals[k]);
    }
    for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
      mult.lambda[l] += eta_lambda[l] * h_vals[l];
    }
    if (detail::sup_norm(mult) > divergence_limit) {
      report.diagnostic = "multipliers diverged";
      break;
    }
  }

  detail::finish(inst, tracker, report);
  report.wall_time = clock.seconds();
  return report;
}

// Dispatch on the instance kind.
inline SolveReport solve(const ProblemInstance& inst, const SolveConfig& config) {
  switch (inst.kind()) {
    case ProblemKind::kKp:
      return solve_kp(inst, config);
    case ProblemKind::kQkp:
      return solve_qkp(inst, config);
    case ProblemKind::kGeneric:
      break;
  }
  return solve_generic(inst, config);
}

}  // namespace mfopt
