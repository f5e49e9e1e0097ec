#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/polynomial.hpp"

namespace mfopt {

enum class ProblemKind { kKp, kQkp, kGeneric };

inline std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kKp:
      return "kp";
    case ProblemKind::kQkp:
      return "qkp";
    case ProblemKind::kGeneric:
      return "generic";
  }
  return "generic";
}

inline ProblemKind parse_kind(std::string_view text) {
  if (text == "kp") return ProblemKind::kKp;
  if (text == "qkp") return ProblemKind::kQkp;
  if (text == "generic") return ProblemKind::kGeneric;
  throw MalformedInstance("unknown problem kind '" + std::string(text) + "'");
}

/**
 * A binary program
 *
 *     min f(x)  s.t.  g_k(x) <= 0,  h_l(x) = 0,   x in {0,1}^N
 *
 * with f, g_k, h_l multilinear polynomials. Instances are immutable once
 * built and may be shared freely between threads.
 *
 * KP:  f(x) = -q.x,  single constraint w.x - d <= 0.
 * QKP: f(x) = -(sum_i q_ii x_i + sum_{i<j} q_ij x_i x_j) with Q symmetric and
 *      nonnegative, same single constraint. Each unordered pair contributes
 *      its profit once (the usual QKP benchmark convention). The dense Q is
 *      kept for the hot paths; the objective polynomial is only materialized
 *      on first request.
 */
class ProblemInstance {
 public:
  ProblemInstance() = default;

  static ProblemInstance generic(std::size_t n_vars,
                                 const MultilinearPolynomial& objective,
                                 const std::vector<MultilinearPolynomial>& inequalities,
                                 const std::vector<MultilinearPolynomial>& equalities) {
    ProblemInstance inst;
    inst.n_vars_ = n_vars;
    inst.kind_ = ProblemKind::kGeneric;
    auto take = [n_vars](const MultilinearPolynomial& p) {
      if (p.n_vars() != n_vars) {
        throw MalformedInstance("polynomial has " + std::to_string(p.n_vars()) +
                                " variables, instance has " +
                                std::to_string(n_vars));
      }
      return canonicalize(p);
    };
    inst.objective_ = std::make_shared<LazyObjective>();
    inst.objective_->poly = take(objective);
    std::call_once(inst.objective_->once, [] {});
    for (const auto& g : inequalities) inst.inequalities_.push_back(take(g));
    for (const auto& h : equalities) inst.equalities_.push_back(take(h));
    return inst;
  }

  static ProblemInstance knapsack(std::vector<double> gains,
                                  std::vector<double> weights, double capacity) {
    if (gains.size() != weights.size()) {
      throw MalformedInstance("gains and weights differ in length");
    }
    for (std::size_t i = 0; i < gains.size(); ++i) {
      if (!(gains[i] >= 0.0) || !std::isfinite(gains[i])) {
        throw MalformedInstance("KP gain " + std::to_string(i) +
                                " must be finite and nonnegative");
      }
    }
    ProblemInstance inst = knapsack_base(ProblemKind::kKp, std::move(weights),
                                         capacity);
    inst.gains_ = std::move(gains);
    MultilinearPolynomial f(inst.n_vars_);
    for (std::size_t i = 0; i < inst.n_vars_; ++i) {
      f.add_term(-inst.gains_[i], {static_cast<Index>(i)});
    }
    inst.objective_ = std::make_shared<LazyObjective>();
    inst.objective_->poly = canonicalize(f);
    std::call_once(inst.objective_->once, [] {});
    return inst;
  }

  // `quadratic` is the full symmetric N x N matrix, row-major.
  static ProblemInstance quadratic_knapsack(std::vector<double> quadratic,
                                            std::vector<double> weights,
                                            double capacity) {
    const std::size_t n = weights.size();
    if (quadratic.size() != n * n) {
      throw MalformedInstance("QKP matrix must be " + std::to_string(n) + "x" +
                              std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double a = quadratic[i * n + j];
        if (a != quadratic[j * n + i]) {
          throw MalformedInstance("QKP matrix is not symmetric");
        }
        if (!(a >= 0.0) || !std::isfinite(a)) {
          throw MalformedInstance("QKP coefficients must be finite and >= 0");
        }
      }
    }
    ProblemInstance inst = knapsack_base(ProblemKind::kQkp, std::move(weights),
                                         capacity);
    inst.quadratic_ = std::move(quadratic);
    inst.objective_ = std::make_shared<LazyObjective>();
    return inst;
  }

  // Builds the symmetric matrix from its row-major upper triangle (diagonal
  // included): row i holds q_ii, q_i,i+1, ..., q_i,n-1.
  static ProblemInstance quadratic_knapsack_upper(std::span<const double> upper,
                                                  std::vector<double> weights,
                                                  double capacity) {
    const std::size_t n = weights.size();
    if (upper.size() != n * (n + 1) / 2) {
      throw MalformedInstance("upper triangle has wrong length");
    }
    std::vector<double> full(n * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        full[i * n + j] = upper[k];
        full[j * n + i] = upper[k];
        ++k;
      }
    }
    return quadratic_knapsack(std::move(full), std::move(weights), capacity);
  }

  std::size_t n_vars() const { return n_vars_; }
  ProblemKind kind() const { return kind_; }
  bool is_knapsack_like() const { return kind_ != ProblemKind::kGeneric; }

  const MultilinearPolynomial& objective() const {
    std::call_once(objective_->once, [this] {
      objective_->poly = build_qkp_objective();
    });
    return objective_->poly;
  }
  const std::vector<MultilinearPolynomial>& inequalities() const {
    return inequalities_;
  }
  const std::vector<MultilinearPolynomial>& equalities() const {
    return equalities_;
  }

  // KP / QKP accessors.
  std::span<const double> gains() const { return gains_; }
  std::span<const double> weights() const { return weights_; }
  double capacity() const { return capacity_; }
  std::span<const double> quadratic() const { return quadratic_; }
  std::span<const double> quadratic_row(std::size_t i) const {
    return std::span<const double>(quadratic_).subspan(i * n_vars_, n_vars_);
  }
  double q(std::size_t i, std::size_t j) const {
    return quadratic_[i * n_vars_ + j];
  }

  friend bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
    if (a.kind_ != b.kind_ || a.n_vars_ != b.n_vars_) return false;
    if (a.kind_ == ProblemKind::kGeneric) {
      return a.objective() == b.objective() &&
             a.inequalities_ == b.inequalities_ &&
             a.equalities_ == b.equalities_;
    }
    return a.gains_ == b.gains_ && a.weights_ == b.weights_ &&
           a.capacity_ == b.capacity_ && a.quadratic_ == b.quadratic_;
  }

 private:
  struct LazyObjective {
    std::once_flag once;
    MultilinearPolynomial poly;
  };

  static ProblemInstance knapsack_base(ProblemKind kind,
                                       std::vector<double> weights,
                                       double capacity) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
        throw MalformedInstance("weight " + std::to_string(i) +
                                " must be finite and nonnegative");
      }
    }
    if (!std::isfinite(capacity)) {
      throw MalformedInstance("capacity must be finite");
    }
    ProblemInstance inst;
    inst.kind_ = kind;
    inst.n_vars_ = weights.size();
    inst.weights_ = std::move(weights);
    inst.capacity_ = capacity;
    // Stored as w.x - d <= 0.
    MultilinearPolynomial g(inst.n_vars_);
    for (std::size_t i = 0; i < inst.n_vars_; ++i) {
      g.add_term(inst.weights_[i], {static_cast<Index>(i)});
    }
    g.add_term(-capacity, {});
    inst.inequalities_.push_back(canonicalize(g));
    return inst;
  }

  MultilinearPolynomial build_qkp_objective() const {
    MultilinearPolynomial f(n_vars_);
    for (std::size_t i = 0; i < n_vars_; ++i) {
      const auto row = quadratic_row(i);
      if (row[i] != 0.0) f.add_term(-row[i], {static_cast<Index>(i)});
      for (std::size_t j = i + 1; j < n_vars_; ++j) {
        if (row[j] != 0.0) {
          f.add_term(-row[j], {static_cast<Index>(i), static_cast<Index>(j)});
        }
      }
    }
    return canonicalize(f);
  }

  std::size_t n_vars_ = 0;
  ProblemKind kind_ = ProblemKind::kGeneric;
  std::shared_ptr<LazyObjective> objective_ = std::make_shared<LazyObjective>();
  std::vector<MultilinearPolynomial> inequalities_;
  std::vector<MultilinearPolynomial> equalities_;
  std::vector<double> gains_;
  std::vector<double> weights_;
  double capacity_ = 0.0;
  std::vector<double> quadratic_;
};

// ---------------------------------------------------------------------------
// Objective evaluation with KP/QKP fast paths.

namespace detail {

template <typename T>
double qkp_value(const ProblemInstance& inst, std::span<const T> point) {
  const std::size_t n = inst.n_vars();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = static_cast<double>(point[i]);
    if (xi == 0.0) continue;
    const auto row = inst.quadratic_row(i);
    double acc = row[i];
    for (std::size_t j = i + 1; j < n; ++j) acc += row[j] * point[j];
    total += xi * acc;
  }
  return -total;
}

}  // namespace detail

inline double objective_value(const ProblemInstance& inst,
                              std::span<const double> m) {
  detail::check_length(inst.n_vars(), m.size());
  switch (inst.kind()) {
    case ProblemKind::kKp: {
      double total = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) total -= inst.gains()[i] * m[i];
      return total;
    }
    case ProblemKind::kQkp:
      return detail::qkp_value(inst, m);
    case ProblemKind::kGeneric:
      break;
  }
  return eval(inst.objective(), m);
}

inline double objective_value(const ProblemInstance& inst,
                              std::span<const std::uint8_t> x) {
  detail::check_length(inst.n_vars(), x.size());
  switch (inst.kind()) {
    case ProblemKind::kKp: {
      double total = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i]) total -= inst.gains()[i];
      }
      return total;
    }
    case ProblemKind::kQkp: {
      // Sparse in the selected set.
      std::vector<std::size_t> on;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i]) on.push_back(i);
      }
      double total = 0.0;
      for (std::size_t a = 0; a < on.size(); ++a) {
        const auto row = inst.quadratic_row(on[a]);
        total += row[on[a]];
        for (std::size_t b = a + 1; b < on.size(); ++b) total += row[on[b]];
      }
      return -total;
    }
    case ProblemKind::kGeneric:
      break;
  }
  return eval(inst.objective(), x);
}

// Gradient of the objective's multilinear extension at m.
inline std::vector<double> objective_gradient(const ProblemInstance& inst,
                                              std::span<const double> m) {
  detail::check_length(inst.n_vars(), m.size());
  const std::size_t n = inst.n_vars();
  switch (inst.kind()) {
    case ProblemKind::kKp: {
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = -inst.gains()[i];
      return g;
    }
    case ProblemKind::kQkp: {
      // -q_ii - sum_{j != i} q_ij m_j
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = inst.quadratic_row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) acc += row[j] * m[j];
        for (std::size_t j = i + 1; j < n; ++j) acc += row[j] * m[j];
        g[i] = -row[i] - acc;
      }
      return g;
    }
    case ProblemKind::kGeneric:
      break;
  }
  return grad(inst.objective(), m);
}

// ---------------------------------------------------------------------------
// Feasibility.

struct FeasibilityReport {
  bool feasible = true;
  // g_k(x) per inequality (<= 0 is satisfied) and h_l(x) per equality.
  std::vector<double> inequality_values;
  std::vector<double> equality_values;
};

namespace detail {

struct ConstraintValue {
  double value = 0.0;
  bool exact = false;
  std::int64_t exact_value = 0;
};

// Integer arithmetic whenever the coefficients allow it.
inline ConstraintValue constraint_value(const MultilinearPolynomial& p,
                                        std::span<const std::uint8_t> x) {
  ConstraintValue out;
  if (p.has_integer_coefficients() && eval_exact(p, x, out.exact_value)) {
    out.exact = true;
    out.value = static_cast<double>(out.exact_value);
    return out;
  }
  out.value = eval(p, x);
  return out;
}

}  // namespace detail

inline FeasibilityReport check_feasible(const ProblemInstance& inst,
                                        std::span<const std::uint8_t> x) {
  detail::check_length(inst.n_vars(), x.size());
  FeasibilityReport report;
  for (const auto& g : inst.inequalities()) {
    const auto v = detail::constraint_value(g, x);
    const bool ok = v.exact ? v.exact_value <= 0 : v.value <= 0.0;
    report.inequality_values.push_back(v.value);
    report.feasible = report.feasible && ok;
  }
  for (const auto& h : inst.equalities()) {
    const auto v = detail::constraint_value(h, x);
    const bool ok = v.exact ? v.exact_value == 0 : v.value == 0.0;
    report.equality_values.push_back(v.value);
    report.feasible = report.feasible && ok;
  }
  return report;
}

inline bool is_feasible(const ProblemInstance& inst,
                        std::span<const std::uint8_t> x) {
  return check_feasible(inst, x).feasible;
}

}  // namespace mfopt
