#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "qlab/entropy.hpp"

namespace qlab {
namespace {

PermTuple tuple1(std::vector<std::uint32_t> m) { return PermTuple({Permutation(std::move(m))}); }

TEST(MinEntropy, Examples) {
  EXPECT_NEAR(min_entropy(PermDistribution::uniform({3})), std::log2(6.0), 1e-12);
  EXPECT_EQ(min_entropy(PermDistribution::point_mass(tuple1({1, 0, 2}))), 0.0);
  const auto half = PermDistribution::uniform_where({4}, [](const PermTuple& p) { return p(0, 0) < 2; });
  EXPECT_EQ(half.support().size(), 12u);
  EXPECT_NEAR(min_entropy(half), std::log2(12.0), 1e-12);
  EXPECT_THROW(PermDistribution({3}, {}, {}), std::invalid_argument);
}

TEST(ChainEntropy, Examples) {
  const UniformReference s4{{4}};
  EXPECT_NEAR(chain_entropy(s4, 0b0011), std::log2(12.0), 1e-12);
  EXPECT_EQ(chain_entropy(s4, 0), 0.0);
  EXPECT_THROW(chain_entropy(s4, 0b0011, 0b0010), std::invalid_argument);
  const UniformReference pair{{3, 4}};
  EXPECT_NEAR(chain_entropy(pair, 0b1001001, 0b0000010), std::log2(2.0 * 4 * 3), 1e-12);
}

// 2^{h(I|J)} must equal the number of values x_I compatible with any fixed z_J.
void check_chain_rule(const UniformReference& ref) {
  const auto u = PermDistribution::uniform(ref.sizes);
  const CoordMask full = ref.full_mask();
  for (CoordMask j = 0; j <= full; ++j) {
    for (CoordMask i = (~j) & full;; i = (i - 1) & (~j) & full) {
      EXPECT_NEAR(chain_entropy(ref, i | j), chain_entropy(ref, j) + chain_entropy(ref, i, j), 1e-12);
      const auto zj = mask_coords(j);
      std::vector<std::uint32_t> z;
      for (auto c : zj) z.push_back(u.value(0, c));
      const auto cond = u.conditioned(j, z);
      EXPECT_NEAR(std::log2(static_cast<double>(cond.marginal(i).size())), chain_entropy(ref, i, j), 1e-12);
      if (i == 0) break;
    }
  }
}

TEST(ChainEntropy, ChainRuleExhaustiveOnS3) { check_chain_rule({{3}}); }
TEST(ChainEntropy, ChainRuleExhaustiveOnS4) { check_chain_rule({{4}}); }
TEST(ChainEntropy, ChainRuleExhaustiveOnS2xS3) { check_chain_rule({{2, 3}}); }

TEST(DensityReport, UniformIsFullyDense) {
  const auto u = PermDistribution::uniform({4});
  for (auto dir : {DensityDirection::kForward, DensityDirection::kInverse}) {
    const auto r = density_report(u, dir);
    EXPECT_EQ(r.k, 0u);
    EXPECT_NEAR(r.delta, 0.0, 1e-12);
  }
}

TEST(DensityReport, InverseCounterexample) {
  const auto d = inverse_density_counterexample();
  EXPECT_EQ(d.support().size(), 12u);
  const auto fwd = density_report(d, DensityDirection::kForward);
  const auto inv = density_report(d, DensityDirection::kInverse);
  // Brute-force values: P(1) = 0 with probability 1/2; P^{-1}(0) is 1 or 3.
  EXPECT_NEAR(fwd.delta, 0.5, 1e-12);
  EXPECT_EQ(fwd.witness, CoordMask{0b0010});
  EXPECT_NEAR(inv.delta, 0.5, 1e-12);
  EXPECT_EQ(inv.witness, CoordMask{0b0001});
  EXPECT_NEAR(inv.witness_min_entropy, 1.0, 1e-12);
  EXPECT_NEAR(inv.witness_entropy, 2.0, 1e-12);
}

TEST(DensityReport, WitnessReproducesDelta) {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    std::vector<PermTuple> sup;
    std::vector<double> w;
    double total = 0.0;
    for (const auto& p : all_permutations(4)) {
      if (rng.below(3) == 0) continue;
      sup.push_back(PermTuple({p}));
      w.push_back(1.0 + rng.below(5));
      total += w.back();
    }
    for (auto& x : w) x /= total;
    const PermDistribution d({4}, sup, w);
    for (auto dir : {DensityDirection::kForward, DensityDirection::kInverse}) {
      const auto r = density_report(d, dir);
      const auto& base = dir == DensityDirection::kForward ? d : d.inverted();
      if (r.witness) EXPECT_NEAR(deficit_ratio(base, r.fixed_set, r.witness), r.delta, 1e-12);
    }
    const auto a = density_report(d, DensityDirection::kInverse);
    const auto b = density_report(d.inverted(), DensityDirection::kForward);
    EXPECT_EQ(a.fixed_set, b.fixed_set);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_EQ(a.witness, b.witness);
  }
}

TEST(DensityReport, CouplingExample) {
  const auto d = coupling_example(3);
  EXPECT_EQ(d.support().size(), 12u);
  const auto joint = density_report(d);
  EXPECT_EQ(joint.k, 0u);
  EXPECT_NEAR(joint.delta, 0.7381404928570852, 1e-12);
  // Conditioning on P_2 pins a coordinate of P_1: relative to no fixing, that
  // coordinate loses all of its entropy.
  for (const auto& p2 : all_permutations(3)) {
    std::vector<std::uint32_t> vals(p2.map().begin(), p2.map().end());
    const auto slice = d.conditioned(0b111000, vals);
    const auto m = cycle_type(p2).front();
    const auto rel = density_report_relative(slice, 0);
    EXPECT_NEAR(rel.delta, 1.0, 1e-12);
    EXPECT_NEAR(deficit_ratio(slice, 0, CoordMask{1} << (m - 1)), 1.0, 1e-12);
    const auto auto_report = density_report(slice);
    EXPECT_TRUE(auto_report.fixed_set & (CoordMask{1} << (m - 1)));
  }
}

TEST(Decompose, DenseInputIsOneComponent) {
  const auto u = PermDistribution::uniform({4});
  const auto dec = decompose(u, 0.3, 0.01, u.reference());
  ASSERT_EQ(dec.components.size(), 1u);
  EXPECT_EQ(dec.components[0].fixed_set, 0u);
  EXPECT_NEAR(dec.components[0].weight, 1.0, 1e-12);
  EXPECT_TRUE(dec.all_certified);
}

TEST(Decompose, PointMassIsFullyFixed) {
  const auto d = PermDistribution::point_mass(tuple1({2, 0, 3, 1}));
  const auto dec = decompose(d, 0.5, 0.01, d.reference());
  ASSERT_EQ(dec.components.size(), 1u);
  EXPECT_EQ(std::popcount(dec.components[0].fixed_set), 4);
  EXPECT_TRUE(dec.all_certified);
}

TEST(Decompose, FixesTheConstantCoordinate) {
  const auto d = PermDistribution::uniform_where({4}, [](const PermTuple& p) { return p(0, 0) == 1; });
  const auto dec = decompose(d, 0.6, 0.01, d.reference());
  ASSERT_EQ(dec.components.size(), 1u);
  EXPECT_EQ(dec.components[0].fixed_set, CoordMask{1});
  EXPECT_EQ(dec.components[0].fixed_values, std::vector<std::uint32_t>{1});
  EXPECT_NEAR(dec.components[0].forward.delta, 0.0, 1e-12);
  EXPECT_TRUE(dec.all_certified);
  EXPECT_TRUE(dec.cardinality_ok);
  EXPECT_NEAR(dec.mixture_tv, 0.0, 1e-12);
}

TEST(Decompose, RandomProductsAreCertified) {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<PermTuple> sup;
    std::vector<double> w;
    double total = 0.0;
    const auto s3 = all_permutations(3);
    for (const auto& a : s3)
      for (const auto& b : s3) {
        if (rng.below(4) == 0) continue;
        sup.push_back(PermTuple({a, b}));
        w.push_back(static_cast<double>(1 + rng.below(8)));
        total += w.back();
      }
    for (auto& x : w) x /= total;
    const PermDistribution d({3, 3}, sup, w);
    const double eps = 0.05;
    const auto dec = decompose(d, 0.4, eps, d.reference());
    EXPECT_TRUE(dec.all_certified);
    EXPECT_TRUE(dec.cardinality_ok);
    EXPECT_LE(dec.mixture_tv, eps);
    double weight = dec.residual;
    for (const auto& c : dec.components) weight += c.weight;
    EXPECT_NEAR(weight, 1.0, 1e-12);
  }
}

TEST(Decompose, RejectsBadArguments) {
  const auto u = PermDistribution::uniform({3});
  EXPECT_THROW(decompose(u, 0.0, 0.1, u.reference()), std::invalid_argument);
  EXPECT_THROW(decompose(u, 0.5, 0.1, UniformReference{{4}}), std::invalid_argument);
}

TEST(PermDistribution, JsonRoundTrip) {
  const auto d = coupling_example(3);
  const auto e = PermDistribution::from_json(d.to_json());
  EXPECT_EQ(e.support(), d.support());
  EXPECT_EQ(e.weights(), d.weights());
}

QueryAlgorithm permutation_probe(std::size_t n, Rng& rng) {
  QueryAlgorithm alg;
  const auto x = alg.add_register("x", n);
  const auto t = alg.add_register("t", n);
  alg.unitary({x, t}, haar_unitary(n * n, rng))
      .query({x}, t)
      .unitary({x, t}, haar_unitary(n * n, rng))
      .query({x}, t, std::nullopt, Direction::kInverse)
      .unitary({x, t}, haar_unitary(n * n, rng));
  alg.accept({{x}, {{0}, {3}}, false});
  return alg;
}

TEST(DenseAdapter, MatchesFullOracleExhaustivelyAtFour) {
  Rng rng(9);
  FixingData fix{{4}, 0b0101, {3, 1}, {}};
  const auto adapted = dense_adapter(permutation_probe(4, rng), fix);
  EXPECT_EQ(adapted.adapter.reduced_sizes(), std::vector<std::size_t>{2});
  std::set<PermTuple> lifted;
  for (const auto& p : all_permutations(2)) {
    const PermTuple reduced({p});
    const auto full = adapted.adapter.lift(reduced);
    lifted.insert(full);
    EXPECT_TRUE(adapted.adapter.consistent(full));
    EXPECT_EQ(adapted.adapter.reduce(full), reduced);
    const double want = run(adapted.algorithm, PermTupleOracle(full)).accept_probability;
    std::size_t calls = 0;
    EXPECT_NEAR(adapted.run(reduced, &calls).accept_probability, want, 1e-12);
    EXPECT_EQ(calls, 2u);
  }
  EXPECT_EQ(lifted.size(), 2u);
}

TEST(DenseAdapter, CustomBijectionStillMatches) {
  Rng rng(10);
  FixingData fix{{4}, 0b0010, {0}, {{3, 0, 2}}};
  const auto adapted = dense_adapter(permutation_probe(4, rng), fix);
  for (const auto& p : all_permutations(3)) {
    const PermTuple reduced({p});
    const auto full = adapted.adapter.lift(reduced);
    EXPECT_EQ(full(0, 1), 0u);
    EXPECT_NEAR(adapted.run(reduced).accept_probability,
                run(adapted.algorithm, PermTupleOracle(full)).accept_probability, 1e-12);
  }
}

TEST(DenseAdapter, NoFixingIsIdentityAndFullFixingMakesNoCalls) {
  Rng rng(11);
  const auto alg = permutation_probe(4, rng);
  const auto open = dense_adapter(alg, FixingData{{4}, 0, {}, {}});
  const PermTuple p({Permutation({2, 3, 1, 0})});
  EXPECT_EQ(open.adapter.lift(p), p);
  const auto closed = dense_adapter(alg, FixingData{{4}, 0b1111, {2, 3, 1, 0}, {}});
  std::size_t calls = 99;
  const PermTuple empty({Permutation()});
  EXPECT_NEAR(closed.run(empty, &calls).accept_probability,
              run(alg, PermTupleOracle(p)).accept_probability, 1e-12);
  EXPECT_EQ(calls, 0u);
}

TEST(DenseAdapter, RejectsInconsistentFixing) {
  EXPECT_THROW(DenseAdapter(FixingData{{4}, 0b0011, {1, 1}, {}}), std::invalid_argument);
  EXPECT_THROW(DenseAdapter(FixingData{{4}, 0b0011, {1}, {}}), std::invalid_argument);
  EXPECT_THROW(DenseAdapter(FixingData{{4}, 0b0001, {1}, {{0, 2, 3}}}), std::invalid_argument);
}

TEST(EvenParity, ExactDiagnosticsAtFour) {
  const auto d = EvenParitySource(4).diagnostics();
  EXPECT_NEAR(d.delta, 0.25, 1e-12);
  EXPECT_NEAR(d.tv, 0.5, 1e-12);
  EXPECT_NEAR(d.max_proper_deficit, 0.0, 1e-12);
  EXPECT_NEAR(d.full_deficit, 1.0, 1e-12);
}

TEST(EvenParity, SamplesHaveEvenParity) {
  Rng rng(3);
  const EvenParitySource src(7);
  for (int i = 0; i < 200; ++i) {
    int s = 0;
    for (auto b : src.sample(rng)) s += b;
    EXPECT_EQ(s % 2, 0);
  }
}

TEST(BiasProbe, RandomCircuitsStayUnderFrozenBound) {
  Rng rng(21);
  for (std::size_t n : {4u, 6u, 8u})
    for (std::size_t t : {1u, 2u}) {
      const auto probe = bias_probe(n, t, rng);
      EXPECT_FALSE(probe.violated()) << n << " " << t;
      EXPECT_GT(probe.epsilon, 0.0);
      EXPECT_LE(probe.epsilon, 1.0);
    }
}

}  // namespace
}  // namespace qlab
