#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/polynomial.hpp"
#include "mfopt/problem.hpp"

namespace mfopt {

using Rng = std::mt19937_64;

inline constexpr double kDefaultClamp = 1e-9;
// |dL/dm_i| is saturated here before exponentiation.
inline constexpr double kExponentLimit = 500.0;

/**
 * Marginals m_i = P(x_i = 1) of the factorized distribution
 * Q(x) = prod_i [1 + (2 m_i - 1) x_i - m_i].
 *
 * Components are kept inside [clamp, 1 - clamp] so the entropy stays finite.
 */
class MeanFieldState {
 public:
  MeanFieldState() = default;

  explicit MeanFieldState(std::vector<double> m, double clamp = kDefaultClamp)
      : m_(std::move(m)), clamp_(clamp) {
    if (!(clamp > 0.0 && clamp < 0.5)) {
      throw DomainError("clamp must lie in (0, 0.5)");
    }
    for (double& v : m_) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DomainError("marginal " + std::to_string(v) +
                          " outside [0, 1]");
      }
      v = std::clamp(v, clamp_, 1.0 - clamp_);
    }
  }

  static MeanFieldState uniform(std::size_t n, double value,
                                double clamp = kDefaultClamp) {
    return MeanFieldState(std::vector<double>(n, value), clamp);
  }

  // Independent uniform draws in [lo, hi]; the default band sits around the
  // maximum-entropy point.
  static MeanFieldState random(std::size_t n, Rng& rng, double lo = 0.4,
                               double hi = 0.6, double clamp = kDefaultClamp) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> m(n);
    for (double& v : m) v = dist(rng);
    return MeanFieldState(std::move(m), clamp);
  }

  std::span<const double> values() const { return m_; }
  std::size_t size() const { return m_.size(); }
  double operator[](std::size_t i) const { return m_[i]; }
  double clamp() const { return clamp_; }

 private:
  std::vector<double> m_;
  double clamp_ = kDefaultClamp;
};

// KKT multipliers: lambda for equalities (free sign), mu for inequalities
// (nonnegative).
struct MultiplierSet {
  std::vector<double> lambda;
  std::vector<double> mu;

  static MultiplierSet zeros(const ProblemInstance& inst) {
    return {std::vector<double>(inst.equalities().size(), 0.0),
            std::vector<double>(inst.inequalities().size(), 0.0)};
  }

  // Single-constraint knapsack multiplier.
  static MultiplierSet knapsack(double mu) { return {{}, {mu}}; }

  void validate(const ProblemInstance& inst) const {
    if (lambda.size() != inst.equalities().size() ||
        mu.size() != inst.inequalities().size()) {
      throw DimensionError("multiplier count does not match constraints");
    }
    for (double v : mu) {
      if (!(v >= 0.0)) throw DomainError("inequality multiplier must be >= 0");
    }
  }
};

struct MfConfig {
  // Temperature is fixed; kept for documentation of the scale.
  static constexpr double kT = 1.0;
  // Jacobi damping for coupled systems; linear systems always use 0.
  double damping = 0.5;
  std::size_t max_sweeps = 1000;
  double tolerance = 1e-10;
  double clamp = kDefaultClamp;

  void validate() const {
    if (!(damping >= 0.0 && damping < 1.0)) {
      throw DomainError("damping must lie in [0, 1)");
    }
    if (!(tolerance > 0.0)) throw DomainError("tolerance must be > 0");
    if (!(clamp > 0.0 && clamp < 0.5)) throw DomainError("bad clamp");
  }
};

// p(x_i) under marginal m_i.
inline double marginal(double m, std::uint8_t x) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw DomainError("marginal parameter outside [0, 1]");
  }
  return 1.0 + (2.0 * m - 1.0) * static_cast<double>(x) - m;
}

inline double entropy(std::span<const double> m) {
  double s = 0.0;
  for (double v : m) s -= (1.0 - v) * std::log(1.0 - v) + v * std::log(v);
  return s;
}

inline double entropy(const MeanFieldState& state) {
  return entropy(state.values());
}

// L(m) = f(m) + sum_l lambda_l h_l(m) + sum_k mu_k g_k(m).
inline double lagrangian(const ProblemInstance& inst, const MultiplierSet& mult,
                         std::span<const double> m) {
  detail::check_length(inst.n_vars(), m.size());
  mult.validate(inst);
  double total = objective_value(inst, m);
  for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
    total += mult.lambda[l] * eval(inst.equalities()[l], m);
  }
  for (std::size_t k = 0; k < mult.mu.size(); ++k) {
    total += mult.mu[k] * eval(inst.inequalities()[k], m);
  }
  return total;
}

inline double lagrangian(const ProblemInstance& inst, const MultiplierSet& mult,
                         const MeanFieldState& state) {
  return lagrangian(inst, mult, state.values());
}

// dL/dm with the dense KP/QKP fast paths.
inline std::vector<double> lagrangian_grad(const ProblemInstance& inst,
                                           const MultiplierSet& mult,
                                           std::span<const double> m) {
  detail::check_length(inst.n_vars(), m.size());
  mult.validate(inst);
  std::vector<double> g = objective_gradient(inst, m);
  if (inst.is_knapsack_like()) {
    const double mu = mult.mu[0];
    const auto w = inst.weights();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += mu * w[i];
    return g;
  }
  auto accumulate = [&](const MultilinearPolynomial& p, double scale) {
    if (scale == 0.0) return;
    const auto pg = grad(p, m);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * pg[i];
  };
  for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
    accumulate(inst.equalities()[l], mult.lambda[l]);
  }
  for (std::size_t k = 0; k < mult.mu.size(); ++k) {
    accumulate(inst.inequalities()[k], mult.mu[k]);
  }
  return g;
}

inline std::vector<double> lagrangian_grad(const ProblemInstance& inst,
                                           const MultiplierSet& mult,
                                           const MeanFieldState& state) {
  return lagrangian_grad(inst, mult, state.values());
}

// Same quantity computed only through the sparse polynomial representation.
inline std::vector<double> lagrangian_grad_polynomial(
    const ProblemInstance& inst, const MultiplierSet& mult,
    std::span<const double> m) {
  detail::check_length(inst.n_vars(), m.size());
  mult.validate(inst);
  std::vector<double> g = grad(inst.objective(), m);
  for (std::size_t l = 0; l < mult.lambda.size(); ++l) {
    const auto pg = grad(inst.equalities()[l], m);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += mult.lambda[l] * pg[i];
  }
  for (std::size_t k = 0; k < mult.mu.size(); ++k) {
    const auto pg = grad(inst.inequalities()[k], m);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += mult.mu[k] * pg[i];
  }
  return g;
}

// F(m) = L(m) - S(m) at kT = 1.
inline double free_energy(const ProblemInstance& inst,
                          const MultiplierSet& mult, std::span<const double> m) {
  return lagrangian(inst, mult, m) - entropy(m);
}

inline double free_energy(const ProblemInstance& inst,
                          const MultiplierSet& mult,
                          const MeanFieldState& state) {
  return free_energy(inst, mult, state.values());
}

// 1 / (1 + exp(dL)), saturated and clamped.
inline double self_consistent_marginal(double dl, double clamp) {
  const double e = std::exp(std::clamp(dl, -kExponentLimit, kExponentLimit));
  return std::clamp(1.0 / (1.0 + e), clamp, 1.0 - clamp);
}

// True when every function of the instance is affine in x, so the
// self-consistency equations decouple.
inline bool is_linear(const ProblemInstance& inst) {
  switch (inst.kind()) {
    case ProblemKind::kKp:
      return true;
    case ProblemKind::kQkp: {
      const std::size_t n = inst.n_vars();
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = inst.quadratic_row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
          if (row[j] != 0.0) return false;
        }
      }
      return true;
    }
    case ProblemKind::kGeneric:
      break;
  }
  if (inst.objective().degree() > 1) return false;
  for (const auto& p : inst.inequalities()) {
    if (p.degree() > 1) return false;
  }
  for (const auto& p : inst.equalities()) {
    if (p.degree() > 1) return false;
  }
  return true;
}

// One Jacobi update m <- (1 - damping) sigma(m) + damping m.
inline MeanFieldState mf_sweep(const ProblemInstance& inst,
                               const MultiplierSet& mult,
                               const MeanFieldState& state, double damping) {
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw DomainError("damping must lie in [0, 1)");
  }
  const auto g = lagrangian_grad(inst, mult, state);
  std::vector<double> next(state.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double sigma = self_consistent_marginal(g[i], state.clamp());
    next[i] = std::clamp((1.0 - damping) * sigma + damping * state[i],
                         state.clamp(), 1.0 - state.clamp());
  }
  return MeanFieldState(std::move(next), state.clamp());
}

// max_i |m_i - sigma_i(m)|.
inline double fixed_point_residual(const ProblemInstance& inst,
                                   const MultiplierSet& mult,
                                   const MeanFieldState& state) {
  const auto g = lagrangian_grad(inst, mult, state);
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    r = std::max(r, std::abs(state[i] -
                             self_consistent_marginal(g[i], state.clamp())));
  }
  return r;
}

struct FixedPointResult {
  MeanFieldState state;
  double residual = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

// Iterates mf_sweep until the residual drops below config.tolerance or the
// sweep budget runs out. Linear instances use an undamped update.
inline FixedPointResult solve_fixed_point(const ProblemInstance& inst,
                                          const MultiplierSet& mult,
                                          const MeanFieldState& m0,
                                          const MfConfig& config) {
  config.validate();
  detail::check_length(inst.n_vars(), m0.size());
  const double damping = is_linear(inst) ? 0.0 : config.damping;
  const double clamp = m0.clamp();

  std::vector<double> m(m0.values().begin(), m0.values().end());
  std::vector<double> sigma(m.size());
  FixedPointResult out;
  for (;;) {
    const auto g = lagrangian_grad(inst, mult, m);
    double r = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      sigma[i] = self_consistent_marginal(g[i], clamp);
      r = std::max(r, std::abs(m[i] - sigma[i]));
    }
    out.residual = r;
    if (r < config.tolerance) {
      out.converged = true;
      break;
    }
    if (out.sweeps >= config.max_sweeps) break;
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = std::clamp((1.0 - damping) * sigma[i] + damping * m[i], clamp,
                        1.0 - clamp);
    }
    ++out.sweeps;
  }
  out.state = MeanFieldState(std::move(m), clamp);
  return out;
}

// Draw x ~ Q: x_i = 1 with probability m_i, independently.
inline BinaryVector sample(const MeanFieldState& state, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BinaryVector x(state.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = unit(rng) < state[i] ? 1 : 0;
  }
  return x;
}

// x_i = 1 iff m_i > 1/2; ties go to 0.
inline BinaryVector round(const MeanFieldState& state) {
  BinaryVector x(state.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = state[i] > 0.5 ? 1 : 0;
  return x;
}

// Closed-form KP fixed point m_i = 1 / (1 + exp(-q_i + mu w_i)).
inline MeanFieldState knapsack_marginals(const ProblemInstance& inst, double mu,
                                         double clamp = kDefaultClamp) {
  if (inst.kind() != ProblemKind::kKp) {
    throw MalformedInstance("knapsack_marginals needs a KP instance");
  }
  const auto q = inst.gains();
  const auto w = inst.weights();
  std::vector<double> m(inst.n_vars());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = self_consistent_marginal(-q[i] + mu * w[i], clamp);
  }
  return MeanFieldState(std::move(m), clamp);
}

}  // namespace mfopt
