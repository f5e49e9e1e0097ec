#pragma once

// Test-only helpers: random instance builders and finite-difference oracles.
// Nothing here calls into the gradient code under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mfopt/mfopt.hpp"

namespace mfopt::testing {

// Random raw polynomial: `n_terms` terms of degree <= max_degree with
// coefficients ~ N(0, 1); indices may repeat when `allow_repeats`.
inline MultilinearPolynomial random_polynomial(std::size_t n_vars,
                                               std::size_t n_terms,
                                               std::size_t max_degree,
                                               std::mt19937_64& rng,
                                               bool allow_repeats = false) {
  std::normal_distribution<double> coeff(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> degree(0, max_degree);
  std::uniform_int_distribution<Index> var(0, static_cast<Index>(n_vars - 1));
  MultilinearPolynomial p(n_vars);
  for (std::size_t t = 0; t < n_terms; ++t) {
    const std::size_t k = degree(rng);
    std::vector<Index> vars;
    while (vars.size() < k) {
      const Index v = var(rng);
      if (!allow_repeats &&
          std::find(vars.begin(), vars.end(), v) != vars.end()) {
        continue;
      }
      vars.push_back(v);
    }
    p.add_term(coeff(rng), std::move(vars));
  }
  return p;
}

// Integer-coefficient variant for exact comparisons.
inline MultilinearPolynomial random_integer_polynomial(std::size_t n_vars,
                                                       std::size_t n_terms,
                                                       std::size_t max_degree,
                                                       std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coeff(-9, 9);
  std::uniform_int_distribution<std::size_t> degree(0, max_degree);
  std::uniform_int_distribution<Index> var(0, static_cast<Index>(n_vars - 1));
  MultilinearPolynomial p(n_vars);
  for (std::size_t t = 0; t < n_terms; ++t) {
    const std::size_t k = degree(rng);
    std::vector<Index> vars;
    for (std::size_t a = 0; a < k; ++a) vars.push_back(var(rng));
    p.add_term(coeff(rng), std::move(vars));
  }
  return p;
}

// Central differences of a scalar function.
inline std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> at, double step) {
  std::vector<double> x(at.begin(), at.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

inline std::vector<double> uniform_point(std::size_t n, double lo, double hi,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

// QKP with q_ij ~ U[0, 2/N], w ~ U[0.5, 1.5], d = sum(w) / 2: fields are
// O(1), so mean-field fixed points sit well inside (0, 1).
inline ProblemInstance unit_scale_qkp(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> q(0.0, 2.0 / static_cast<double>(n));
  std::uniform_real_distribution<double> wd(0.5, 1.5);
  std::vector<double> full(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = q(rng);
      full[i * n + j] = v;
      full[j * n + i] = v;
    }
  }
  std::vector<double> w(n);
  double total = 0.0;
  for (double& v : w) {
    v = wd(rng);
    total += v;
  }
  return ProblemInstance::quadratic_knapsack(std::move(full), std::move(w),
                                             0.5 * total);
}

inline double sup_norm(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

}  // namespace mfopt::testing
