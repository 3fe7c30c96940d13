#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "qlab/game.hpp"
#include "qlab/stats.hpp"

using namespace qlab;

namespace {

StateVector side_witness(const NoisyPermOracle& f) { return canonical_witness(f.side); }

}  // namespace

TEST(GameOracle, SampledOraclesAreWellFormed) {
  Rng rng(1);
  for (std::size_t n : {4u, 8u, 16u}) {
    for (int t = 0; t < 50; ++t) {
      const auto f = sample_game_oracle(n, 6, rng);
      EXPECT_NO_THROW(f.validate());
      for (std::size_t r = 0; r < f.r; ++r) {
        EXPECT_EQ(compose(f.forward[r], f.inverse[r]), Permutation::identity(n));
        const auto ct = cycle_type(f.forward[r]);
        EXPECT_EQ(ct, f.proper[r] ? (CycleType{n / 2, n / 2}) : (CycleType{n}));
      }
    }
  }
}

TEST(GameOracle, ValidateCatchesBrokenTables) {
  Rng rng(2);
  auto f = sample_game_oracle(8, 4, rng);
  f.proper[0] = 1;
  f.forward[0] = Permutation::identity(8);
  f.inverse[0] = Permutation::identity(8);
  EXPECT_THROW(f.validate(), std::invalid_argument);
  EXPECT_THROW(sample_game_oracle(5, 2, rng), std::invalid_argument);
}

TEST(GameOracle, PartitionIsUniform) {
  Rng rng(3);
  std::map<std::vector<std::uint8_t>, std::uint64_t> counts;
  const std::size_t samples = 20'000;
  for (std::size_t t = 0; t < samples; ++t) ++counts[sample_game_oracle(4, 2, rng).side];
  ASSERT_EQ(counts.size(), 6u);
  std::vector<std::uint64_t> obs;
  for (const auto& [k, v] : counts) obs.push_back(v);
  const auto cs = chi_square(obs, std::vector<double>(6, 1.0 / 6.0));
  EXPECT_GT(cs.p_value, 0.001);
}

TEST(GameOracle, ProperSetIsUniform) {
  Rng rng(4);
  std::vector<std::uint64_t> sizes(5, 0);
  for (int t = 0; t < 16'000; ++t) ++sizes[sample_game_oracle(4, 4, rng).proper_count()];
  const auto cs = chi_square(sizes, {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0});
  EXPECT_GT(cs.p_value, 0.001);
}

TEST(GameOracle, UniformityDiagnostic) {
  Rng rng(5);
  const auto f = sample_game_oracle(8, 64, rng);
  const double d = f.uniformity_delta();
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, 1.0);
}

TEST(InteractiveVerifier, ProperChallengeAcceptsCanonicalWitness) {
  Rng rng(6);
  for (std::size_t n : {8u, 16u}) {
    const auto f = sample_game_oracle(n, 6, rng);
    for (std::size_t r = 0; r < f.r; ++r) {
      if (!f.proper[r]) continue;
      const auto acc = interactive_qma_verify(f, r, side_witness(f));
      EXPECT_NEAR(acc.circuit, 1.0, 1e-12);
      EXPECT_NEAR(acc.operator_form, 1.0, 1e-12);
      EXPECT_EQ(acc.invariance_queries, 2u);
    }
  }
}

TEST(InteractiveVerifier, CircuitMatchesOperator) {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const auto f = sample_game_oracle(8, 3, rng);
    std::vector<Complex> amp(8);
    double norm = 0.0;
    for (auto& a : amp) {
      a = Complex(rng.normal(), rng.normal());
      norm += std::norm(a);
    }
    for (auto& a : amp) a /= std::sqrt(norm);
    const StateVector w({8}, amp);
    for (std::size_t r = 0; r < 3; ++r) {
      const auto acc = interactive_qma_verify(f, r, w);
      EXPECT_NEAR(acc.circuit, acc.operator_form, 1e-10);
    }
  }
}

TEST(InteractiveVerifier, UniformWitnessFailsBalancedness) {
  Rng rng(8);
  const auto f = sample_game_oracle(8, 2, rng);
  const auto acc = interactive_qma_verify(f, 0, uniform_witness(8));
  EXPECT_NEAR(acc.balancedness, 0.0, 1e-12);
  EXPECT_NEAR(acc.invariance, 1.0, 1e-12);
}

TEST(InteractiveVerifier, ImproperChallengeGap) {
  Rng rng(9);
  for (std::size_t n : {4u, 8u, 16u, 32u}) {
    NoisyPermOracle f;
    do {
      f = sample_game_oracle(n, 4, rng);
    } while (f.proper_count() == f.r);
    std::size_t r = 0;
    while (f.proper[r]) ++r;
    // Single N-cycle: invariance spectrum (1 + cos(2 pi j / N)) / 2.
    const double gap = invariance_gap(f.forward[r]);
    EXPECT_NEAR(gap, (1.0 - std::cos(2.0 * std::numbers::pi / static_cast<double>(n))) / 2.0, 1e-12);
    const double max_acc = interactive_max_acceptance(f, r);
    EXPECT_NEAR(max_acc, 1.0 - gap / 2.0, 1e-12);
    EXPECT_LT(max_acc, 1.0);
  }
}

TEST(AdversaryCounts, FrozenSmallCases) {
  // Independent brute force over permutations with cycle type (N/2, N/2).
  const auto c4 = adversary_counts(4);
  EXPECT_EQ(c4.yes_instances, 6u);
  EXPECT_EQ(c4.no_instances, 6u);
  EXPECT_EQ(c4.m_min, 4u);
  EXPECT_EQ(c4.m_prime_min, 4u);
  EXPECT_EQ(c4.l_x, 2u);
  EXPECT_EQ(c4.l_y, 2u);
  EXPECT_EQ(c4.l_max, 4u);
  EXPECT_DOUBLE_EQ(c4.bound, 2.0);

  const auto c6 = adversary_counts(6);
  EXPECT_EQ(c6.yes_instances, 80u);
  EXPECT_EQ(c6.no_instances, 120u);
  EXPECT_EQ(c6.m_min, 9u);
  EXPECT_EQ(c6.m_max, 9u);
  EXPECT_EQ(c6.m_prime_min, 6u);
  EXPECT_EQ(c6.m_prime_max, 6u);
  EXPECT_EQ(c6.m_prime_unordered, 3u);
  EXPECT_EQ(c6.l_x, 3u);
  EXPECT_EQ(c6.l_y, 2u);
  EXPECT_EQ(c6.l_max, 6u);
  EXPECT_DOUBLE_EQ(c6.bound, 3.0);

  const auto c8 = adversary_counts(8);
  EXPECT_EQ(c8.yes_instances, 2520u);
  EXPECT_EQ(c8.no_instances, 5040u);
  EXPECT_EQ(c8.l_max, 8u);
  EXPECT_DOUBLE_EQ(c8.bound, 4.0);
}

TEST(AdversaryCounts, PatternHoldsUpToTen) {
  for (std::size_t n : {4u, 6u, 8u, 10u}) {
    const auto c = adversary_counts(n);
    EXPECT_TRUE(c.matches_expected) << "n=" << n;
    EXPECT_EQ(c.m_min, (n / 2) * (n / 2));
    EXPECT_EQ(c.m_prime_min, n);
    EXPECT_EQ(c.l_max, n);
    EXPECT_DOUBLE_EQ(c.bound, static_cast<double>(n) / 2.0);
  }
  EXPECT_THROW(adversary_counts(12), std::invalid_argument);
  EXPECT_THROW(adversary_counts(5), std::invalid_argument);
}

TEST(AdversaryCounts, CsvHasHeaderAndRow) {
  const auto csv = adversary_counts(4).to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("4,6,6,4,4,4,4,2,2,2,4,2,1"), std::string::npos);
}

TEST(MultiInstance, TranscriptShape) {
  Rng rng(10);
  CoinFlipAdversary coin;
  const auto t = run_multi_instance(coin, 8, 8, 5, rng);
  ASSERT_EQ(t.rounds.size(), 5u);
  std::istringstream lines(t.to_json_lines());
  std::string line;
  std::size_t i = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("round"), i);
    EXPECT_EQ(j.at("outcome").get<bool>(), t.rounds[i].outcome);
    ++i;
  }
  EXPECT_EQ(i, 5u);
  EXPECT_THROW(run_multi_instance(coin, 8, 8, 0, rng), std::invalid_argument);
}

TEST(MultiInstance, CoinFlipDecays) {
  Rng rng(11);
  CoinFlipAdversary coin;
  for (std::size_t k : {1u, 2u, 5u}) {
    const auto st = multi_instance_trials(coin, 8, 8, k, 40'000, rng);
    EXPECT_NEAR(st.rate, std::pow(0.5, static_cast<double>(k)), 3.0 * st.sigma + 1e-12);
    EXPECT_TRUE(st.within());
  }
}

TEST(MultiInstance, WalkerIsExactWhenItWalks) {
  Rng rng(12);
  NoisyWalkerAdversary always(1.0);
  const auto st = multi_instance_trials(always, 8, 8, 5, 2'000, rng);
  EXPECT_EQ(st.wins, st.trials);
  NoisyWalkerAdversary half(0.5);
  const auto s2 = multi_instance_trials(half, 8, 8, 3, 40'000, rng);
  EXPECT_TRUE(s2.within());
  EXPECT_NEAR(s2.rate, std::pow(0.75, 3.0), 3.0 * s2.sigma + 1e-12);
}

TEST(MultiInstance, MemoryAdversaryWithinBound) {
  Rng rng(13);
  MemoryAdversary mem;
  const auto st = multi_instance_trials(mem, 8, 4, 5, 40'000, rng);
  EXPECT_DOUBLE_EQ(st.delta, 0.5 + 4.0 / 8.0);
  EXPECT_TRUE(st.within());
  // Repeats help: strictly better than independent coin flips.
  EXPECT_GT(st.rate, std::pow(0.5, 5.0));
}

TEST(MultiInstance, BudgetExceederForfeits) {
  Rng rng(14);
  BudgetExceederAdversary greedy;
  const auto t = run_multi_instance(greedy, 8, 4, 3, rng);
  for (const auto& r : t.rounds) {
    EXPECT_TRUE(r.forfeited);
    EXPECT_FALSE(r.outcome);
    EXPECT_EQ(r.queries, 4u);
  }
  const auto big = run_multi_instance(greedy, 8, 4, 3, rng, 8);
  for (const auto& r : big.rounds) EXPECT_FALSE(r.forfeited);
}

TEST(MultiInstance, FactoryNames) {
  for (const char* name : {"coin-flip", "noisy-walker", "memory", "budget-exceeder"})
    EXPECT_EQ(make_adversary(name)->name(), name);
  EXPECT_THROW(make_adversary("oracle-peeker"), std::invalid_argument);
}

TEST(WitnessBound, NoWitness) {
  const auto b = witness_guess_bound(0, 100, 1 << 16, 1.0);
  const double expect = 0.5 + 1.0 / 256.0 + 100.0 / 65536.0;
  EXPECT_NEAR(b.cap, expect, 1e-15);
  EXPECT_NEAR(b.per_round, expect, 1e-15);
  EXPECT_FALSE(b.flagged);
}

TEST(WitnessBound, ClosedFormValue) {
  const double n = std::ldexp(1.0, 20);
  const auto b = witness_guess_bound(10, 1e4, n, 1.0);
  const double eta = 1.0 / 1024.0 + 1e4 / n;
  EXPECT_NEAR(b.cap, 0.5 + eta + 10.0 / 2e4 + eta * 1e-3, 1e-15);
  EXPECT_NEAR(b.cap, 0.511023818969727, 1e-12);
  EXPECT_GE(b.remainder, 0.0);
  EXPECT_LE(b.per_round, b.cap);
}

TEST(WitnessBound, FlagsLargeRatio) {
  const auto b = witness_guess_bound(20, 10, 1 << 20, 1.0);
  EXPECT_TRUE(b.flagged);
  EXPECT_LT(b.remainder, 0.0);
}

TEST(WitnessBound, TurningPoint) {
  const double n = std::ldexp(1.0, 20);
  const auto k = witness_turning_point(10, n, 1.0, 20'000);
  // d/dk [c k / N + W / (2k) + W / (k sqrt N)] = 0.
  const double cont = std::sqrt((10.0 / 2.0 + 10.0 / 1024.0) * n);
  EXPECT_NEAR(static_cast<double>(k), cont, 1.0);
  EXPECT_LT(witness_guess_bound(10, k, n).cap, witness_guess_bound(10, k / 2, n).cap);
  EXPECT_LT(witness_guess_bound(10, k, n).cap, witness_guess_bound(10, 2 * k, n).cap);
}
