#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "qlab/perm.hpp"
#include "qlab/rng.hpp"
#include "qlab/stats.hpp"

namespace qlab {
namespace {

template <typename Sampler>
ChiSquare sampler_chi_square(const std::vector<Permutation>& outcomes, std::size_t samples,
                             Sampler sample) {
  std::map<Permutation, std::size_t> index;
  for (std::size_t i = 0; i < outcomes.size(); ++i) index[outcomes[i]] = i;
  std::vector<std::uint64_t> counts(outcomes.size(), 0);
  for (std::size_t i = 0; i < samples; ++i) {
    auto it = index.find(sample());
    if (it == index.end()) return {INFINITY, outcomes.size() - 1, 0.0};
    ++counts[it->second];
  }
  return chi_square(counts, std::vector<double>(outcomes.size(), 1.0 / outcomes.size()));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(42, 1);
  Rng d(42);
  EXPECT_NE(c.next(), d.next());
}

TEST(Rng, FrozenOutputs) {
  // Pinned values: any change here breaks reproducibility of recorded runs.
  Rng r(1);
  EXPECT_EQ(r.next(), 0xcf526a8dee9551b1ULL);
  EXPECT_EQ(r.next(), 0xb78147954c5bea47ULL);
  EXPECT_EQ(r.next(), 0x606a3500b989f934ULL);
  Rng s(7);
  const std::vector<std::uint64_t> expected{9, 9, 4, 1, 1, 5, 6, 0};
  for (auto v : expected) EXPECT_EQ(s.below(10), v);
  EXPECT_DOUBLE_EQ(Rng(9).uniform(), 0.96501041243549046);
}

TEST(Rng, BelowIsInRangeAndBalanced) {
  Rng r(3);
  std::vector<std::uint64_t> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  EXPECT_GT(chi_square(counts, std::vector<double>(7, 1.0 / 7)).p_value, 1e-3);
}

TEST(Rng, SplitStreamsDiffer) {
  Rng r(5);
  auto a = r.split(1), b = r.split(2), a2 = r.split(1);
  EXPECT_NE(a.next(), b.next());
  EXPECT_EQ(r.split(1).next(), a2.next());
}

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(Permutation({0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(Permutation({0, 3}), std::invalid_argument);
}

TEST(Compose, IdentityAndInverse) {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    auto p = sample_uniform(6, rng);
    EXPECT_EQ(compose(Permutation::identity(6), p), p);
    EXPECT_TRUE(compose(p, invert(p)).is_identity());
    EXPECT_EQ(invert(invert(p)), p);
    EXPECT_EQ(cycle_type(invert(p)), cycle_type(p));
  }
}

TEST(Compose, TranspositionsGiveThreeCycle) {
  const Permutation a({1, 0, 2});  // (0 1)
  const Permutation b({0, 2, 1});  // (1 2)
  // a(b(0)) = 1, a(b(1)) = a(2) = 2, a(b(2)) = a(1) = 0.
  EXPECT_EQ(compose(a, b), Permutation({1, 2, 0}));
}

TEST(Compose, SizeMismatchRejected) {
  EXPECT_THROW(compose(Permutation::identity(3), Permutation::identity(4)), std::invalid_argument);
}

TEST(SampleUniform, SizeOneIsIdentity) {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(sample_uniform(1, rng).is_identity());
}

TEST(SampleUniform, ChiSquareOnS3) {
  Rng rng(2024);
  auto c = sampler_chi_square(all_permutations(3), 60000, [&] { return sample_uniform(3, rng); });
  EXPECT_GT(c.p_value, 1e-3);
}

TEST(SampleUniform, SwapFrequencyOnTwo) {
  Rng rng(9);
  const int n = 20000;
  int swaps = 0;
  for (int i = 0; i < n; ++i) swaps += sample_uniform(2, rng).is_identity() ? 0 : 1;
  EXPECT_NEAR(swaps / double(n), 0.5, 3 * binomial_sigma(0.5, n));
}

TEST(SampleUniform, ChiSquareOnS4) {
  Rng rng(77);
  auto c = sampler_chi_square(all_permutations(4), 240000, [&] { return sample_uniform(4, rng); });
  EXPECT_GT(c.p_value, 1e-3);
}

TEST(SampleMatching, TwoIsSwap) {
  Rng rng(4);
  EXPECT_EQ(sample_matching(2, rng), Permutation({1, 0}));
}

TEST(SampleMatching, OddRejected) {
  Rng rng(4);
  EXPECT_THROW(sample_matching(5, rng), std::invalid_argument);
}

TEST(SampleMatching, FixedPointFreeInvolution) {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    auto p = sample_matching(10, rng);
    for (std::size_t x = 0; x < 10; ++x) {
      EXPECT_NE(p(x), x);
      EXPECT_EQ(p(p(x)), x);
    }
  }
}

TEST(SampleMatching, ChiSquareOnFour) {
  const auto all = all_matchings(4);
  ASSERT_EQ(all.size(), 3u);
  Rng rng(31);
  EXPECT_GT(sampler_chi_square(all, 30000, [&] { return sample_matching(4, rng); }).p_value, 1e-3);
}

TEST(SampleMatching, CountMatchesDoubleFactorial) {
  EXPECT_EQ(all_matchings(6).size(), 15u);
  EXPECT_EQ(all_matchings(8).size(), 105u);
}

TEST(SampleSingleCycle, TwoIsSwap) {
  Rng rng(4);
  EXPECT_EQ(sample_single_cycle(2, rng), Permutation({1, 0}));
}

TEST(SampleSingleCycle, ChiSquareOnFour) {
  const auto all = all_single_cycles(4);
  ASSERT_EQ(all.size(), 6u);
  for (const auto& p : all) EXPECT_EQ(cycle_type(p), CycleType({4}));
  Rng rng(12);
  EXPECT_GT(sampler_chi_square(all, 48000, [&] { return sample_single_cycle(4, rng); }).p_value, 1e-3);
}

TEST(CycleType, Examples) {
  EXPECT_EQ(cycle_type(Permutation::identity(4)), CycleType({1, 1, 1, 1}));
  EXPECT_EQ(cycle_type(Permutation({1, 0})), CycleType({2}));
  EXPECT_EQ(cycle_type(Permutation({1, 0, 3, 2})), CycleType({2, 2}));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    auto t = cycle_type(sample_uniform(9, rng));
    std::size_t sum = 0;
    for (auto l : t) sum += l;
    EXPECT_EQ(sum, 9u);
  }
}

TEST(PermTuple, EvaluatesComponentwise) {
  PermTuple t({Permutation({1, 0}), Permutation({2, 0, 1})});
  EXPECT_EQ(t.arity(), 2u);
  EXPECT_EQ(t.domain_size(), 5u);
  EXPECT_EQ(t.offset(1), 2u);
  EXPECT_EQ(t(0, 0), 1u);
  EXPECT_EQ(t(1, 0), 2u);
  EXPECT_EQ(t.inverse()(1, 2), 0u);
}

}  // namespace
}  // namespace qlab
