#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "mfopt/instances.hpp"
#include "mfopt/meanfield.hpp"
#include "test_support.hpp"

namespace mfopt {
namespace {

std::string to_text(const ProblemInstance& inst) {
  std::ostringstream out;
  write_instance(inst, out);
  return out.str();
}

ProblemInstance from_text(const std::string& text) {
  std::istringstream in(text);
  return read_instance(in);
}

TEST(GenKp, CorrelationRuleForSingleItem) {
  const auto kp = gen_kp_strong({.n = 1, .weight_range = 1000, .seed = 5});
  EXPECT_EQ(kp.gains()[0], kp.weights()[0] + 100.0);
}

TEST(GenKp, WeightRangeAndCapacity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto kp = gen_kp_strong({.n = 200, .seed = seed});
    double total = 0.0, min_w = 1e9;
    for (std::size_t i = 0; i < kp.n_vars(); ++i) {
      const double w = kp.weights()[i];
      EXPECT_GE(w, 1.0);
      EXPECT_LE(w, 1000.0);
      EXPECT_EQ(w, std::floor(w));
      EXPECT_EQ(kp.gains()[i], w + 100.0);
      total += w;
      min_w = std::min(min_w, w);
    }
    EXPECT_EQ(kp.capacity(), std::floor(0.25 * total));
    EXPECT_TRUE(is_feasible(kp, BinaryVector(kp.n_vars(), 0)));
    EXPECT_LE(min_w, kp.capacity());
  }
}

TEST(GenKp, DeterministicBySeed) {
  const KpGenSpec spec{.n = 300, .seed = 77};
  EXPECT_EQ(to_text(gen_kp_strong(spec)), to_text(gen_kp_strong(spec)));
  EXPECT_NE(to_text(gen_kp_strong(spec)),
            to_text(gen_kp_strong({.n = 300, .seed = 78})));
}

TEST(GenKp, RejectsBadSpec) {
  EXPECT_THROW(gen_kp_strong({.n = 5, .weight_range = 0}), DomainError);
  EXPECT_THROW(gen_kp_strong({.n = 5, .capacity_fraction = 1.5}), DomainError);
}

TEST(GenQkp, DenseHasEveryPair) {
  const auto inst = gen_qkp({.n = 40, .density = 1.0, .seed = 2});
  const std::size_t n = inst.n_vars();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_GT(inst.q(i, j), 0.0);
      EXPECT_EQ(inst.q(i, j), inst.q(j, i));
    }
  }
}

TEST(GenQkp, SymmetricNonnegativeAndFeasibleAtZero) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = gen_qkp({.n = 30, .density = 0.25, .seed = seed});
    const std::size_t n = inst.n_vars();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_GE(inst.q(i, j), 0.0);
        EXPECT_EQ(inst.q(i, j), inst.q(j, i));
      }
      EXPECT_GE(inst.weights()[i], 1.0);
      EXPECT_LE(inst.weights()[i], 50.0);
    }
    EXPECT_TRUE(is_feasible(inst, BinaryVector(n, 0)));
    EXPECT_GE(inst.capacity(), 1.0);
  }
}

TEST(GenQkp, VanishingDensityIsLinearKnapsack) {
  const auto inst = gen_qkp({.n = 25, .density = 1e-300, .seed = 4});
  ASSERT_TRUE(is_linear(inst));
  std::vector<double> gains(inst.n_vars());
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = inst.q(i, i);
  const auto kp = ProblemInstance::knapsack(
      gains, std::vector<double>(inst.weights().begin(), inst.weights().end()),
      inst.capacity());
  std::mt19937_64 rng(1);
  std::bernoulli_distribution bit(0.5);
  for (int rep = 0; rep < 100; ++rep) {
    BinaryVector x(inst.n_vars());
    for (auto& v : x) v = bit(rng);
    EXPECT_EQ(objective_value(inst, std::span<const std::uint8_t>(x)),
              objective_value(kp, std::span<const std::uint8_t>(x)));
  }
}

TEST(GenQkp, DeterministicBySeed) {
  const QkpGenSpec spec{.n = 50, .density = 0.5, .seed = 3};
  EXPECT_EQ(to_text(gen_qkp(spec)), to_text(gen_qkp(spec)));
}

TEST(NativeFormat, RoundTripGenerated) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto kp = gen_kp_strong({.n = 40, .seed = seed});
    EXPECT_EQ(from_text(to_text(kp)), kp);
    const auto qkp = gen_qkp({.n = 20, .density = 0.7, .seed = seed});
    EXPECT_EQ(from_text(to_text(qkp)), qkp);
  }
}

TEST(NativeFormat, RoundTripNonIntegerAndGeneric) {
  std::mt19937_64 rng(8);
  const auto qkp = testing::unit_scale_qkp(9, rng);
  EXPECT_EQ(from_text(to_text(qkp)), qkp);

  const auto f = testing::random_polynomial(7, 15, 3, rng);
  const auto g = testing::random_polynomial(7, 5, 2, rng);
  const auto h = testing::random_polynomial(7, 4, 1, rng);
  const auto inst = ProblemInstance::generic(7, f, {g, g}, {h});
  const auto back = from_text(to_text(inst));
  EXPECT_EQ(back, inst);
  EXPECT_EQ(back.kind(), ProblemKind::kGeneric);
}

TEST(NativeFormat, RoundTripThroughFile) {
  const auto path =
      (std::filesystem::temp_directory_path() / "mfopt_roundtrip.txt").string();
  const auto kp = gen_kp_strong({.n = 12, .seed = 2});
  write_instance(kp, path);
  EXPECT_EQ(read_instance(path), kp);
  std::filesystem::remove(path);
}

TEST(NativeFormat, CommentsAndBlankLinesIgnored) {
  const std::string text =
      "# hand written\n"
      "mfopt-instance 1\n"
      "\n"
      "n_vars 2\n"
      "kind kp\n"
      "gains 6 10\n"
      "# weights follow\n"
      "weights 3 6\n"
      "capacity 6\n"
      "end\n";
  const auto inst = from_text(text);
  EXPECT_EQ(inst, ProblemInstance::knapsack({6, 10}, {3, 6}, 6));
}

TEST(NativeFormat, TruncatedFileIsParseError) {
  const auto text = to_text(gen_qkp({.n = 6, .seed = 1}));
  for (std::size_t cut : {text.size() / 4, text.size() / 2, text.size() - 5}) {
    EXPECT_THROW(from_text(text.substr(0, cut)), ParseError) << "cut " << cut;
  }
}

TEST(NativeFormat, ErrorsCarryLineNumbers) {
  const std::string text =
      "mfopt-instance 1\n"
      "n_vars 2\n"
      "kind kp\n"
      "gains 6 ten\n";
  try {
    from_text(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(NativeFormat, WrongCountsRejected) {
  EXPECT_THROW(from_text("mfopt-instance 1\nn_vars 2\nkind kp\ngains 1 2 3\n"
                         "weights 1 1\ncapacity 1\nend\n"),
               ParseError);
  EXPECT_THROW(from_text("mfopt-instance 2\n"), ParseError);
}

std::string bs_example() {
  // 3 items: linear 5 6 7, pairs (0,1)=1 (0,2)=0 (1,2)=2, type 0, d=4,
  // weights 1 2 3.
  return "bs_example_3\n3\n5 6 7\n1 0\n2\n\n0\n4\n1 2 3\n";
}

TEST(BillionetSoutif, ReadsSmallFile) {
  std::istringstream in(bs_example());
  const auto inst = read_billionet_soutif(in);
  EXPECT_EQ(inst.kind(), ProblemKind::kQkp);
  EXPECT_EQ(inst.n_vars(), 3u);
  EXPECT_EQ(inst.q(1, 1), 6.0);
  EXPECT_EQ(inst.q(0, 1), 1.0);
  EXPECT_EQ(inst.q(2, 1), 2.0);
  EXPECT_EQ(inst.capacity(), 4.0);
  EXPECT_EQ(inst.weights()[2], 3.0);
  EXPECT_EQ(inst.inequalities().size(), 1u);
}

TEST(BillionetSoutif, FieldCountsAtTwoHundred) {
  const std::size_t n = 200;
  std::ostringstream out;
  out << "r_200_100_1\n" << n << '\n';
  for (std::size_t i = 0; i < n; ++i) out << (i % 100) + 1 << ' ';
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out << (i + j) % 7 << ' ';
    out << '\n';
  }
  out << "\n0\n1234\n";
  for (std::size_t i = 0; i < n; ++i) out << (i % 50) + 1 << ' ';
  out << '\n';
  std::istringstream in(out.str());
  const auto inst = read_billionet_soutif(in);
  EXPECT_EQ(inst.n_vars(), n);
  EXPECT_EQ(inst.inequalities().size(), 1u);
  EXPECT_EQ(inst.capacity(), 1234.0);
  EXPECT_EQ(inst.q(3, 199), (3 + 199) % 7);
}

TEST(BillionetSoutif, RejectsTruncatedAndTrailing) {
  auto text = bs_example();
  std::istringstream truncated(text.substr(0, text.size() - 4));
  EXPECT_THROW(read_billionet_soutif(truncated), ParseError);
  std::istringstream trailing(text + "9\n");
  EXPECT_THROW(read_billionet_soutif(trailing), ParseError);
  std::istringstream bad_type("3\n5 6 7\n1 0\n2\n1\n4\n1 2 3\n");
  EXPECT_THROW(read_billionet_soutif(bad_type), ParseError);
}

}  // namespace
}  // namespace mfopt
