#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "mfopt/polynomial.hpp"
#include "test_support.hpp"

namespace mfopt {
namespace {

using testing::central_difference;
using testing::random_integer_polynomial;
using testing::random_polynomial;

MultilinearPolynomial poly(std::size_t n, std::vector<Term> terms) {
  return MultilinearPolynomial(n, std::move(terms));
}

TEST(Canonicalize, CollapsesRepeatedIndex) {
  const auto c = canonicalize(poly(1, {{3.0, {0, 0}}}));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.terms()[0].coeff, 3.0);
  EXPECT_EQ(c.terms()[0].vars, (std::vector<Index>{0}));
  EXPECT_TRUE(c.is_canonical());
}

TEST(Canonicalize, CancellationGivesZeroPolynomial) {
  const auto c = canonicalize(poly(2, {{2.0, {0, 1}}, {-2.0, {1, 0}}}));
  EXPECT_TRUE(c.empty());
}

TEST(Canonicalize, MergesDuplicates) {
  const auto c = canonicalize(poly(2, {{1.0, {0}}, {1.0, {1}}, {1.0, {0}}}));
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.terms()[0].coeff, 2.0);
  EXPECT_EQ(c.terms()[0].vars, (std::vector<Index>{0}));
  EXPECT_EQ(c.terms()[1].coeff, 1.0);
  EXPECT_EQ(c.terms()[1].vars, (std::vector<Index>{1}));
}

TEST(Canonicalize, Idempotent) {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = canonicalize(random_polynomial(6, 15, 3, rng, true));
    EXPECT_EQ(canonicalize(c), c);
  }
}

TEST(Canonicalize, IndexOutOfRangeIsMalformed) {
  MultilinearPolynomial p(2);
  EXPECT_THROW(p.add_term(1.0, {2}), MalformedInstance);
  EXPECT_THROW(poly(2, {{1.0, {0, 5}}}), MalformedInstance);
}

TEST(Eval, Examples) {
  const MultilinearPolynomial empty(3);
  const std::vector<double> any = {0.3, 0.9, 0.1};
  EXPECT_EQ(eval(empty, std::span<const double>(any)), 0.0);

  const auto p = poly(2, {{2.0, {0, 1}}});
  const std::vector<double> ones = {1.0, 1.0};
  const std::vector<double> halves = {0.5, 0.5};
  EXPECT_EQ(eval(p, std::span<const double>(ones)), 2.0);
  EXPECT_EQ(eval(p, std::span<const double>(halves)), 0.5);
}

TEST(Eval, LengthMismatch) {
  const auto p = poly(2, {{2.0, {0, 1}}});
  const std::vector<double> x = {1.0};
  EXPECT_THROW(eval(p, std::span<const double>(x)), DimensionError);
  EXPECT_THROW(grad(p, x), DimensionError);
}

TEST(Grad, LinearIsConstant) {
  const auto p = poly(2, {{1.5, {0}}, {-4.0, {1}}});
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = testing::uniform_point(2, 0.0, 1.0, rng);
    const auto g = grad(p, x);
    EXPECT_EQ(g[0], 1.5);
    EXPECT_EQ(g[1], -4.0);
  }
}

TEST(Grad, BilinearExample) {
  const auto g = grad(poly(2, {{1.0, {0, 1}}}), std::vector<double>{0.5, 0.5});
  EXPECT_EQ(g, (std::vector<double>{0.5, 0.5}));
}

TEST(Grad, RawInputMatchesCanonical) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto raw = random_polynomial(5, 12, 3, rng, true);
    const auto x = testing::uniform_point(5, 0.0, 1.0, rng);
    const auto a = grad(raw, x);
    const auto b = grad(canonicalize(raw), x);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(Grad, MatchesFiniteDifferenceDegree3) {
  std::mt19937_64 rng(2024);
  for (int sample = 0; sample < 10; ++sample) {
    const auto p = canonicalize(random_polynomial(6, 20, 3, rng));
    auto f = [&](std::span<const double> x) { return eval(p, x); };
    for (int pt = 0; pt < 100; ++pt) {
      const auto x = testing::uniform_point(6, 0.05, 0.95, rng);
      const auto g = grad(p, x);
      const auto fd = central_difference(f, x, 1e-5);
      for (std::size_t i = 0; i < 6; ++i) {
        const double scale = std::max(1.0, std::abs(g[i]));
        EXPECT_LT(std::abs(g[i] - fd[i]) / scale, 1e-6) << "component " << i;
      }
    }
  }
}

// eval(canonicalize(p), x) == eval(p, x) on every binary point.
TEST(Canonicalize, ExhaustiveBinaryEquivalence) {
  std::mt19937_64 rng(99);
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto raw = random_integer_polynomial(n, 3 * n, 4, rng);
    const auto c = canonicalize(raw);
    BinaryVector x(n);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
      for (std::size_t i = 0; i < n; ++i) x[i] = (code >> i) & 1u;
      ASSERT_EQ(eval(c, std::span<const std::uint8_t>(x)),
                eval(raw, std::span<const std::uint8_t>(x)))
          << "n=" << n << " code=" << code;
    }
  }
}

TEST(Eval, DuplicatedIndexInvariantOnBinary) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, 1000);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p = canonicalize(random_integer_polynomial(8, 10, 3, rng));
    MultilinearPolynomial dup(8);
    for (const auto& t : p.terms()) {
      auto vars = t.vars;
      if (!vars.empty()) vars.push_back(vars[pick(rng) % vars.size()]);
      dup.add_term(t.coeff, vars);
    }
    BinaryVector x(8);
    for (std::uint64_t code = 0; code < 256; ++code) {
      for (std::size_t i = 0; i < 8; ++i) x[i] = (code >> i) & 1u;
      EXPECT_EQ(eval(dup, std::span<const std::uint8_t>(x)),
                eval(p, std::span<const std::uint8_t>(x)));
    }
  }
}

TEST(EvalExact, MatchesDoubleAndDetectsOverflow) {
  const auto p = poly(3, {{3.0, {0, 1}}, {-7.0, {2}}, {4.0, {}}});
  const BinaryVector x = {1, 1, 1};
  std::int64_t v = -1;
  ASSERT_TRUE(eval_exact(p, x, v));
  EXPECT_EQ(v, 0);

  // 2000 raw copies of a 2^53 - 1 constant overflow int64.
  MultilinearPolynomial big(1);
  for (int k = 0; k < 2000; ++k) big.add_term(9007199254740991.0, {});
  ASSERT_TRUE(big.has_integer_coefficients());
  const BinaryVector one = {1};
  std::int64_t w = 0;
  EXPECT_FALSE(eval_exact(big, one, w));
}

TEST(Polynomial, DegreeAndIntegerFlag) {
  const auto p = canonicalize(poly(4, {{1.0, {0, 1, 2}}, {0.5, {3}}}));
  EXPECT_EQ(p.degree(), 3u);
  EXPECT_FALSE(p.has_integer_coefficients());
  EXPECT_TRUE(canonicalize(poly(2, {{2.0, {1}}})).has_integer_coefficients());
}

}  // namespace
}  // namespace mfopt
