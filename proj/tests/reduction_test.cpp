#include <gtest/gtest.h>

#include <map>
#include <set>

#include "qlab/oracle.hpp"
#include "qlab/reduction.hpp"

using namespace qlab;

namespace {

GraphOracle single_matching(std::vector<std::uint32_t> row) {
  const auto n = row.size();
  return GraphOracle(n, 1, std::move(row));
}

// Queries F(0) into a target register and accepts when it equals `want`.
QueryAlgorithm probe_zero(std::size_t n, std::size_t want, std::size_t colors = 1) {
  QueryAlgorithm alg;
  std::vector<std::size_t> inputs;
  if (colors > 1) inputs.push_back(alg.add_register("r", colors));
  inputs.push_back(alg.add_register("x", n));
  const auto t = alg.add_register("t", n);
  alg.query(inputs, t);
  alg.accept({{t}, {{want}}, false});
  return alg;
}

}  // namespace

TEST(FixingData, ValidateRejectsBadRho) {
  GraphFixingData ok{{0, 1}, {2}, {{0, 1, 0}}};
  EXPECT_NO_THROW(ok.validate(8, 1));
  EXPECT_THROW((GraphFixingData{{0, 0}, {}, {}}).validate(8, 1), std::invalid_argument);
  EXPECT_THROW((GraphFixingData{{0}, {0}, {}}).validate(8, 1), std::invalid_argument);
  EXPECT_THROW((GraphFixingData{{0}, {1}, {{0, 1, 0}}}).validate(8, 1), std::invalid_argument);
  EXPECT_THROW((GraphFixingData{{0, 1}, {}, {{0, 1, 1}}}).validate(8, 1), std::invalid_argument);
  EXPECT_THROW((GraphFixingData{{0, 1, 2}, {}, {{0, 1, 0}, {0, 2, 0}}}).validate(8, 1),
               std::invalid_argument);
  EXPECT_THROW((GraphFixingData{{9}, {}, {}}).validate(8, 1), std::invalid_argument);
}

TEST(FixingData, JsonRoundTrip) {
  GraphFixingData rho{{0, 1}, {2, 5}, {{0, 1, 0}, {2, 5, 1}}};
  const auto back = GraphFixingData::from_json(rho.to_json());
  EXPECT_EQ(back.a, rho.a);
  EXPECT_EQ(back.b, rho.b);
  EXPECT_EQ(back.h, rho.h);
}

TEST(FixingData, GammaToRhoIdentity) {
  RawPermutations raw{Permutation::identity(4), {Permutation::identity(2)}, {Permutation::identity(2)}};
  RawFixingData gamma;
  gamma.x = {{0, 0}, {1, 1}};
  gamma.y = {{{0, 0}, {1, 1}}};
  gamma.z = {{}};
  const auto rho = gamma_to_rho(gamma, raw);
  EXPECT_EQ(rho.a, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_TRUE(rho.b.empty());
  ASSERT_EQ(rho.h.size(), 1u);
  EXPECT_EQ(rho.h[0], (ColoredEdge{0, 1, 0}));
}

TEST(FixingData, GammaToRhoFollowsX) {
  // X swaps 0 <-> 3 and 1 <-> 2; Z_0 pair lands on values 2, 3 of X.
  RawPermutations raw{Permutation({3, 2, 1, 0}), {Permutation::identity(2)}, {Permutation::identity(2)}};
  RawFixingData gamma;
  gamma.x = {{2, 1}, {3, 0}};
  gamma.y = {{}};
  gamma.z = {{{0, 0}, {1, 1}}};
  const auto rho = gamma_to_rho(gamma, raw);
  EXPECT_TRUE(rho.a.empty());
  EXPECT_EQ(rho.b, (std::vector<std::uint32_t>{1, 0}));
  ASSERT_EQ(rho.h.size(), 1u);
  EXPECT_EQ(rho.h[0], (ColoredEdge{1, 0, 0}));
}

TEST(FixingData, GammaRejections) {
  RawPermutations raw{Permutation::identity(4), {Permutation::identity(2)}, {Permutation::identity(2)}};
  RawFixingData unpaired;
  unpaired.x = {{0, 0}};
  unpaired.y = {{{0, 0}}};
  unpaired.z = {{}};
  EXPECT_THROW(gamma_to_rho(unpaired, raw), std::invalid_argument);

  RawFixingData uncovered;
  uncovered.x = {};
  uncovered.y = {{{0, 0}, {1, 1}}};
  uncovered.z = {{}};
  EXPECT_THROW(gamma_to_rho(uncovered, raw), std::invalid_argument);

  RawFixingData wrong;
  wrong.x = {{0, 1}, {1, 0}};
  wrong.y = {{{0, 0}, {1, 1}}};
  wrong.z = {{}};
  EXPECT_THROW(gamma_to_rho(wrong, raw), std::invalid_argument);
}

TEST(Planted, RelabelWithoutChanges) {
  const auto g = single_matching({1, 0, 3, 2});
  const Permutation pi({2, 0, 1, 3});
  PlantedOracle p(g, pi);
  const auto m = p.materialize();
  for (std::uint32_t u = 0; u < 4; ++u) EXPECT_EQ(m(0, u), pi.inverse()(g(0, pi(u))));
  bool q = false;
  p.eval(0, 0, &q);
  EXPECT_TRUE(q);
}

TEST(Planted, LatestChangeWins) {
  const auto g = single_matching({1, 0, 3, 2});
  PlantedOracle p(g, Permutation::identity(4), {{0, 1, 0}, {0, 2, 0}});
  bool q = false;
  EXPECT_EQ(p.eval(0, 0, &q), 2u);
  EXPECT_FALSE(q);
  EXPECT_EQ(p.eval(0, 1), 0u);  // earlier entry still answers vertex 1
  EXPECT_EQ(p.eval(0, 3), 2u);
}

TEST(Planted, ReconnectPlantsEdges) {
  // 0-2, 1-3 rewired to 0-1, 2-3.
  const auto g = single_matching({2, 3, 0, 1});
  GraphFixingData rho{{0, 1}, {}, {{0, 1, 0}}};
  std::size_t q = 0;
  const auto changes = reconnect(rho, Permutation::identity(4), g, &q);
  EXPECT_EQ(q, 2u);
  ASSERT_EQ(changes.size(), 2u);
  EXPECT_EQ(changes[0], (ColoredEdge{0, 1, 0}));
  EXPECT_EQ(changes[1], (ColoredEdge{2, 3, 0}));
  const auto m = PlantedOracle(g, Permutation::identity(4), changes).materialize();
  EXPECT_EQ(m.table(), (std::vector<std::uint32_t>{1, 0, 3, 2}));
}

TEST(Planted, ReconnectKeepsPresentEdge) {
  const auto g = single_matching({1, 0, 3, 2});
  GraphFixingData rho{{0, 1}, {}, {{0, 1, 0}}};
  const auto changes = reconnect(rho, Permutation::identity(4), g);
  EXPECT_EQ(PlantedOracle(g, Permutation::identity(4), changes).materialize(), g);
}

TEST(Planted, ReconnectAlwaysYieldsMatchingsWithH) {
  Rng rng(11);
  GraphFixingData rho{{0, 1, 2, 3}, {4, 5}, {{0, 1, 0}, {2, 3, 0}, {1, 2, 1}, {4, 5, 1}}};
  for (int t = 0; t < 200; ++t) {
    const auto g = sample_matchings(12, 2, rng);
    Permutation pi = Permutation::identity(12);
    auto map = pi.map();
    shuffle(map, rng);
    PlantedOracle p(g, Permutation(map));
    reconnect(rho, p);
    const auto m = p.materialize();
    EXPECT_TRUE(fixes_edges(m, rho.h));
  }
}

TEST(Relabel, ConditionedRelabelHitsTargets) {
  Rng rng(5);
  GraphFixingData rho{{3, 1}, {0}, {}};
  std::map<std::vector<std::uint32_t>, int> seen;
  for (int t = 0; t < 600; ++t) {
    const auto pi = sample_conditioned_relabel(6, rho, {4, 0}, {2}, rng);
    EXPECT_EQ(pi(3), 4u);
    EXPECT_EQ(pi(1), 0u);
    EXPECT_EQ(pi(0), 2u);
    ++seen[pi.map()];
  }
  EXPECT_EQ(seen.size(), 6u);  // 3! completions
  EXPECT_THROW(sample_conditioned_relabel(6, rho, {4, 4}, {2}, rng), std::invalid_argument);
}

TEST(Walk, SpacingFormula) {
  EXPECT_EQ(walk_spacing(16, 3, 0.5), 13u);  // log2(4800) = 12.23
  EXPECT_EQ(walk_spacing(1024, 1, 0.1), 6u);  // log10(102400) = 5.01
  EXPECT_THROW(walk_spacing(16, 3, 1.0), std::invalid_argument);
}

TEST(AlgorithmM, YesVictimGivesYesRho) {
  Rng rng(21);
  GraphFixingData rho{{0, 1}, {2}, {{0, 1, 0}}};
  const auto inner = probe_zero(16, 1);
  for (int t = 0; t < 40; ++t) {
    const auto victim = sample_yes(16, 1, rng);
    const auto res = algorithm_m(rho, victim.oracle, inner, rng);
    // Walks stay on their side, so E and F are split by the victim's S.
    EXPECT_TRUE(in_yes_rho(res.planted, rho));
    EXPECT_DOUBLE_EQ(res.accept_probability, 1.0);
    EXPECT_TRUE(res.accept);
    EXPECT_EQ(res.inner_queries, 1u);
    EXPECT_EQ(res.reconnect_queries, 2u);
    EXPECT_EQ(res.total_queries(), res.walk_queries + 3u);
  }
}

TEST(AlgorithmM, ExpanderVictimMostlyStaysConnected) {
  Rng rng(22);
  GraphFixingData rho{{0, 1}, {2}, {{0, 1, 0}}};
  const auto inner = probe_zero(16, 1, 3);
  int connected = 0;
  for (int t = 0; t < 40; ++t) {
    const auto victim = sample_no(16, 3, 0.05, rng).oracle;
    const auto res = algorithm_m(rho, victim, inner, rng);
    EXPECT_TRUE(fixes_edges(res.planted, rho.h));
    // One edge swap rarely splits a 3-regular expander.
    if (in_no_rho(res.planted, rho)) ++connected;
  }
  EXPECT_GE(connected, 30);
}

TEST(Metagraph, ExhaustiveSmall) {
  Rng rng(1);
  const auto rep = metagraph_test(GraphFixingData{{0}, {1}, {}}, 4, 1, MetagraphMode::kExhaustive, rng);
  EXPECT_EQ(rep.runs, 48u);
  EXPECT_EQ(rep.support_size, 2u);
  EXPECT_EQ(rep.reference_size, 2u);
  EXPECT_TRUE(rep.exact_equal);
  EXPECT_TRUE(rep.set_uniform);
  EXPECT_EQ(rep.outside, 0u);

  const auto r2 = metagraph_test(GraphFixingData{{0, 1}, {2}, {{0, 1, 1}}}, 4, 2,
                                 MetagraphMode::kExhaustive, rng);
  EXPECT_EQ(r2.runs, 24u);
  EXPECT_EQ(r2.support_size, 1u);
  EXPECT_TRUE(r2.exact_equal);
}

TEST(Metagraph, ExhaustiveEightVertices) {
  Rng rng(1);
  GraphFixingData rho{{0, 1}, {2}, {{0, 1, 0}}};
  EXPECT_EQ(metagraph_enumeration_size(rho, 8, 1), 3628800u);
  const auto rep = metagraph_test(rho, 8, 1, MetagraphMode::kExhaustive, rng);
  EXPECT_EQ(rep.runs, 3628800u);
  EXPECT_EQ(rep.support_size, 15u);
  EXPECT_EQ(rep.reference_size, 15u);
  EXPECT_TRUE(rep.exact_equal);
  EXPECT_TRUE(rep.set_uniform);
}

TEST(Metagraph, MonteCarloAgrees) {
  Rng rng(3);
  GraphFixingData rho{{0, 1}, {2}, {{0, 1, 0}}};
  const auto rep = metagraph_test(rho, 8, 1, MetagraphMode::kMonteCarlo, rng, 150'000);
  EXPECT_EQ(rep.outside, 0u);
  EXPECT_EQ(rep.support_size, 15u);
  EXPECT_GT(rep.p_value, 1e-4);
}

TEST(Metagraph, CapRejectsHugeEnumeration) {
  Rng rng(1);
  EXPECT_THROW(metagraph_test(GraphFixingData{{0}, {1}, {}}, 8, 2, MetagraphMode::kExhaustive, rng),
               std::invalid_argument);
}

TEST(Regularity, PlantEdgeRewires) {
  const auto g = single_matching({2, 3, 0, 1});
  EXPECT_EQ(plant_edge(g, {0, 1, 0}).table(), (std::vector<std::uint32_t>{1, 0, 3, 2}));
  EXPECT_EQ(plant_edge(g, {0, 2, 0}), g);
}

TEST(Regularity, FivePreimagesEach) {
  const auto rep = regularity_test(GraphFixingData{{0, 1}, {2}, {}}, {0, 1, 0}, 8, 1);
  EXPECT_TRUE(rep.image_inside);
  EXPECT_TRUE(rep.regular);
  EXPECT_EQ(rep.min_preimages, 5u);
  EXPECT_EQ(rep.max_preimages, 5u);
  EXPECT_EQ(rep.domain, 5 * rep.codomain);
}

TEST(WalkCloseness, WithinBound) {
  Rng rng(8);
  for (std::size_t n : {16u, 32u}) {
    YesInstance g;
    do {
      g = sample_yes(n, 2, rng);
    } while (component_count(g.oracle) != 2);
    const auto rep = walk_closeness(g, 1, 1, 20'000, rng);
    EXPECT_LT(rep.slem, 1.0);
    EXPECT_GT(rep.spacing, 0u);
    EXPECT_TRUE(rep.holds()) << "n=" << n << " tv=" << rep.empirical_tv << " bound=" << rep.bound
                             << " sigma=" << rep.sigma;
  }
}

TEST(Metagraph, ExhaustiveTwoColorsIsPartitionWeighted) {
  // Brute force: 32659200 runs over 255 oracles, proportional to the labeled
  // split counts but not uniform over the set.
  Rng rng(1);
  GraphFixingData rho{{0, 1}, {2}, {{0, 1, 0}}};
  const auto rep = metagraph_test(rho, 8, 2, MetagraphMode::kExhaustive, rng);
  EXPECT_EQ(rep.runs, 32659200u);
  EXPECT_EQ(rep.support_size, 255u);
  EXPECT_EQ(rep.reference_size, 255u);
  EXPECT_TRUE(rep.exact_equal);
  EXPECT_FALSE(rep.set_uniform);
}
