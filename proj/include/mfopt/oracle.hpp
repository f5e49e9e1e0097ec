#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfopt/error.hpp"
#include "mfopt/problem.hpp"

namespace mfopt {

enum class OracleMethod { kBrute, kDp };

inline std::string_view to_string(OracleMethod m) {
  return m == OracleMethod::kBrute ? "brute" : "dp";
}

struct OracleResult {
  bool feasible = false;  // false: no feasible point exists
  BinaryVector optimal_x;
  double optimal_value = 0.0;
  OracleMethod method = OracleMethod::kBrute;
  double elapsed = 0.0;
};

inline constexpr std::size_t kBruteForceLimit = 24;

// Exhaustive enumeration of {0,1}^N. Ties go to the lexicographically
// smallest vector (x_0 most significant).
inline OracleResult brute_force(const ProblemInstance& inst) {
  const std::size_t n = inst.n_vars();
  if (n > kBruteForceLimit) {
    throw Refused("brute force refused for " + std::to_string(n) +
                  " variables (limit " + std::to_string(kBruteForceLimit) + ")");
  }
  const auto start = std::chrono::steady_clock::now();
  OracleResult out;
  out.method = OracleMethod::kBrute;

  BinaryVector x(n, 0);
  const std::uint64_t count = std::uint64_t{1} << n;
  const bool knapsack = inst.is_knapsack_like();
  const auto w = inst.weights();
  // Enumerating in lexicographic order: bit (n-1-i) of the counter is x_i,
  // so the first minimizer met is the lexicographically smallest.
  for (std::uint64_t code = 0; code < count; ++code) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1u);
    }
    if (knapsack) {
      double load = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i]) load += w[i];
      }
      if (load > inst.capacity()) continue;
    } else if (!is_feasible(inst, x)) {
      continue;
    }
    const double v = objective_value(inst, std::span<const std::uint8_t>(x));
    if (!out.feasible || v < out.optimal_value) {
      out.feasible = true;
      out.optimal_value = v;
      out.optimal_x = x;
    }
  }
  out.elapsed = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

// Cells of the (N+1) x (d+1) choice table allowed before refusing.
inline constexpr std::uint64_t kDpCellBudget = 400'000'000;

// Capacity-indexed 0/1 knapsack dynamic program. Needs integer weights and
// capacity.
inline OracleResult kp_dp(const ProblemInstance& inst) {
  if (inst.kind() != ProblemKind::kKp) {
    throw Refused("kp_dp needs a KP instance");
  }
  const auto q = inst.gains();
  const auto w = inst.weights();
  const std::size_t n = inst.n_vars();
  auto integral = [](double v) { return std::nearbyint(v) == v; };
  for (double wi : w) {
    if (!integral(wi)) throw Refused("kp_dp needs integer weights");
  }
  if (!integral(inst.capacity())) throw Refused("kp_dp needs integer capacity");

  const auto start = std::chrono::steady_clock::now();
  OracleResult out;
  out.method = OracleMethod::kDp;
  if (inst.capacity() < 0.0) {
    out.feasible = false;
    return out;
  }
  const auto cap = static_cast<std::size_t>(inst.capacity());
  if (static_cast<std::uint64_t>(n) * (cap + 1) > kDpCellBudget) {
    throw Refused("kp_dp table too large");
  }

  // best[c] = max gain with load <= c using the items seen so far.
  std::vector<double> best(cap + 1, 0.0);
  std::vector<std::uint8_t> take(n * (cap + 1), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto wi = static_cast<std::size_t>(w[i]);
    if (wi > cap || q[i] <= 0.0) continue;
    std::uint8_t* row = take.data() + i * (cap + 1);
    for (std::size_t c = cap; c + 1 > wi; --c) {
      const double cand = best[c - wi] + q[i];
      if (cand > best[c]) {
        best[c] = cand;
        row[c] = 1;
      }
      if (c == 0) break;
    }
  }

  out.optimal_x.assign(n, 0);
  std::size_t c = cap;
  for (std::size_t i = n; i-- > 0;) {
    if (take[i * (cap + 1) + c]) {
      out.optimal_x[i] = 1;
      c -= static_cast<std::size_t>(w[i]);
    }
  }
  out.feasible = true;
  out.optimal_value = -best[cap];
  out.elapsed = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

}  // namespace mfopt
