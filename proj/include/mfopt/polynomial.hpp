#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfopt/error.hpp"

namespace mfopt {

using Index = std::uint32_t;

// 0/1 assignment of the decision variables.
using BinaryVector = std::vector<std::uint8_t>;

struct Term {
  double coeff = 0.0;
  std::vector<Index> vars;

  friend bool operator==(const Term&, const Term&) = default;
};

/**
 * Sparse polynomial over binary variables, stored as a list of
 * coefficient x variable-subset terms.
 *
 * A polynomial built through add_term() is "raw": the same subset may appear
 * several times and a term may repeat an index. canonicalize() merges and
 * collapses those so that every term is a distinct, strictly increasing index
 * set with a nonzero coefficient.
 */
class MultilinearPolynomial {
 public:
  MultilinearPolynomial() = default;
  explicit MultilinearPolynomial(std::size_t n_vars) : n_vars_(n_vars) {}

  MultilinearPolynomial(std::size_t n_vars, std::vector<Term> terms)
      : n_vars_(n_vars) {
    terms_.reserve(terms.size());
    for (auto& t : terms) add_term(t.coeff, std::move(t.vars));
  }

  void add_term(double coeff, std::vector<Index> vars) {
    for (Index v : vars) {
      if (v >= n_vars_) {
        throw MalformedInstance("variable index " + std::to_string(v) +
                                " out of range for " +
                                std::to_string(n_vars_) + " variables");
      }
    }
    terms_.push_back(Term{coeff, std::move(vars)});
    canonical_ = false;
  }

  std::size_t n_vars() const { return n_vars_; }
  std::span<const Term> terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  bool is_canonical() const { return canonical_; }

  std::size_t degree() const {
    std::size_t d = 0;
    for (const auto& t : terms_) d = std::max(d, t.vars.size());
    return d;
  }

  // True when every coefficient is an integer small enough to be held
  // exactly in a double; such polynomials are evaluated exactly on binary
  // points.
  bool has_integer_coefficients() const {
    constexpr double kExactLimit = 9007199254740992.0;  // 2^53
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
      return std::nearbyint(t.coeff) == t.coeff &&
             std::abs(t.coeff) < kExactLimit;
    });
  }

  friend bool operator==(const MultilinearPolynomial&,
                         const MultilinearPolynomial&) = default;

 private:
  friend MultilinearPolynomial canonicalize(const MultilinearPolynomial&);

  std::size_t n_vars_ = 0;
  std::vector<Term> terms_;
  // The empty polynomial is trivially canonical.
  bool canonical_ = true;
};

// Merge duplicate subsets, collapse x_i^2 -> x_i and drop zero terms. Terms
// come out ordered by (degree, indices).
inline MultilinearPolynomial canonicalize(const MultilinearPolynomial& poly) {
  auto key_less = [](const std::vector<Index>& a, const std::vector<Index>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  };
  std::map<std::vector<Index>, double, decltype(key_less)> merged(key_less);
  for (const auto& t : poly.terms()) {
    for (Index v : t.vars) {
      if (v >= poly.n_vars()) {
        throw MalformedInstance("variable index " + std::to_string(v) +
                                " out of range");
      }
    }
    std::vector<Index> vars = t.vars;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    merged[std::move(vars)] += t.coeff;
  }

  MultilinearPolynomial out(poly.n_vars());
  out.terms_.reserve(merged.size());
  for (auto& [vars, coeff] : merged) {
    if (coeff != 0.0) out.terms_.push_back(Term{coeff, vars});
  }
  out.canonical_ = true;
  return out;
}

namespace detail {

inline void check_length(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError("point has length " + std::to_string(got) +
                         ", expected " + std::to_string(expected));
  }
}

}  // namespace detail

// Sum over terms of coeff * prod point[i]. Valid for raw polynomials too;
// a repeated index contributes its factor repeatedly.
inline double eval(const MultilinearPolynomial& poly,
                   std::span<const double> point) {
  detail::check_length(poly.n_vars(), point.size());
  double total = 0.0;
  for (const auto& t : poly.terms()) {
    double prod = t.coeff;
    for (Index v : t.vars) prod *= point[v];
    total += prod;
  }
  return total;
}

// Evaluation at a 0/1 point: a term contributes its coefficient iff all of
// its variables are set.
inline double eval(const MultilinearPolynomial& poly,
                   std::span<const std::uint8_t> x) {
  detail::check_length(poly.n_vars(), x.size());
  double total = 0.0;
  for (const auto& t : poly.terms()) {
    if (std::all_of(t.vars.begin(), t.vars.end(),
                    [&](Index v) { return x[v] != 0; })) {
      total += t.coeff;
    }
  }
  return total;
}

// Exact integer evaluation at a 0/1 point. Requires
// has_integer_coefficients(); returns false on int64 overflow.
inline bool eval_exact(const MultilinearPolynomial& poly,
                       std::span<const std::uint8_t> x, std::int64_t& out) {
  detail::check_length(poly.n_vars(), x.size());
  std::int64_t total = 0;
  for (const auto& t : poly.terms()) {
    if (std::all_of(t.vars.begin(), t.vars.end(),
                    [&](Index v) { return x[v] != 0; })) {
      if (__builtin_add_overflow(total, static_cast<std::int64_t>(t.coeff),
                                 &total)) {
        return false;
      }
    }
  }
  out = total;
  return true;
}

// Partial derivatives of the multilinear extension. Raw input is
// canonicalized first.
inline std::vector<double> grad(const MultilinearPolynomial& poly,
                                std::span<const double> point) {
  detail::check_length(poly.n_vars(), point.size());
  if (!poly.is_canonical()) return grad(canonicalize(poly), point);

  std::vector<double> g(poly.n_vars(), 0.0);
  for (const auto& t : poly.terms()) {
    const std::size_t k = t.vars.size();
    if (k == 0) continue;
    if (k == 1) {
      g[t.vars[0]] += t.coeff;
      continue;
    }
    // Product of all other factors, without dividing (point may hold zeros).
    for (std::size_t a = 0; a < k; ++a) {
      double prod = t.coeff;
      for (std::size_t b = 0; b < k; ++b) {
        if (b != a) prod *= point[t.vars[b]];
      }
      g[t.vars[a]] += prod;
    }
  }
  return g;
}

}  // namespace mfopt
