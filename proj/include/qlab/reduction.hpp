#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qlab/oracle.hpp"
#include "qlab/perm.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"

namespace qlab {

struct ColoredEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  std::uint32_t r = 0;
  friend bool operator==(const ColoredEdge&, const ColoredEdge&) = default;
};

// rho = (A, B, H): A and B must end up on different sides, H edges must be present.
struct GraphFixingData {
  std::vector<std::uint32_t> a;
  std::vector<std::uint32_t> b;
  std::vector<ColoredEdge> h;

  // Throws std::invalid_argument when the invariants fail for an (N, R) oracle.
  void validate(std::size_t n, std::size_t r) const;
  GraphFixingData with_edge(ColoredEdge e) const;

  std::string to_json() const;
  static GraphFixingData from_json(const std::string& text);
};

// Fixed coordinates of the raw permutations, as (coordinate, value) pairs.
struct RawFixingData {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> x;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> y;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> z;

  void validate(std::size_t n, std::size_t r) const;
};

GraphFixingData gamma_to_rho(const RawFixingData& gamma, const RawPermutations& raw);

using ChangeList = std::vector<ColoredEdge>;

// G_{C,pi}(r, u): the latest change-list entry touching (r, u) wins, otherwise
// pi^{-1}(G(r, pi(u))).
class PlantedOracle {
 public:
  PlantedOracle(GraphOracle base, Permutation pi, ChangeList changes = {});

  std::uint32_t eval(std::size_t r, std::size_t u, bool* base_query = nullptr) const;
  // Full table; throws std::logic_error if some color is not a perfect matching.
  GraphOracle materialize() const;

  const GraphOracle& base() const { return base_; }
  const Permutation& relabel() const { return pi_; }
  const ChangeList& changes() const { return changes_; }
  void append(ColoredEdge e) { changes_.push_back(e); }

 private:
  GraphOracle base_;
  Permutation pi_;
  Permutation pi_inv_;
  ChangeList changes_;
};

std::uint32_t planted_eval(const PlantedOracle& p, std::size_t r, std::size_t u);

// Runs Reconnect on p (appending to its change list). Returns the base queries made.
std::size_t reconnect(const GraphFixingData& rho, PlantedOracle& p);
// Convenience form returning the change list for (rho, pi, base).
ChangeList reconnect(const GraphFixingData& rho, const Permutation& pi, const GraphOracle& base,
                     std::size_t* base_queries = nullptr);

bool fixes_edges(const GraphOracle& f, const std::vector<ColoredEdge>& h);
// L_yes^rho: H present and some balanced split puts A in S and B outside.
bool in_yes_rho(const GraphOracle& f, const GraphFixingData& rho);
// Single connected component with H present.
bool in_no_rho(const GraphOracle& f, const GraphFixingData& rho);

std::size_t walk_spacing(std::size_t n, std::size_t targets, double delta);

// Uniform pi with pi(A_i) = E_i and pi(B_i) = F_i.
Permutation sample_conditioned_relabel(std::size_t n, const GraphFixingData& rho,
                                       const std::vector<std::uint32_t>& e,
                                       const std::vector<std::uint32_t>& f, Rng& rng);

struct AlgorithmMResult {
  bool accept = false;
  double accept_probability = 0.0;
  GraphOracle planted;
  std::vector<std::uint32_t> e, f;
  Permutation pi;
  ChangeList changes;
  std::size_t spacing = 0;
  std::size_t resamples = 0;
  std::size_t walk_queries = 0;
  std::size_t reconnect_queries = 0;
  std::size_t inner_queries = 0;
  std::size_t total_queries() const { return walk_queries + reconnect_queries + inner_queries; }
};

// Algorithm M: walk to targets, plant rho through a conditioned relabeling, and
// run `inner` (graph queries on registers (r, x)) against the planted oracle.
// Throws std::runtime_error when walks keep colliding after 100 resamples.
AlgorithmMResult algorithm_m(const GraphFixingData& rho, const GraphOracle& victim,
                             const QueryAlgorithm& inner, Rng& rng, double delta = 0.1);

// Metagraph uniformity --------------------------------------------------------------

enum class MetagraphMode { kExhaustive, kMonteCarlo };

struct MetagraphCell {
  GraphOracle oracle;
  std::uint64_t count = 0;        // runs producing this oracle
  std::uint64_t reference = 0;    // labeled balanced splits consistent with rho
};

struct MetagraphReport {
  MetagraphMode mode = MetagraphMode::kExhaustive;
  std::uint64_t runs = 0;
  std::size_t reference_size = 0;  // |L_yes^rho|
  std::size_t support_size = 0;
  std::size_t outside = 0;         // planted oracles not in L_yes^rho
  bool exact_equal = false;        // exhaustive: rational equality with the reference
  bool set_uniform = false;        // every oracle of L_yes^rho equally likely
  double chi_square = 0.0;
  double p_value = 1.0;
  std::vector<MetagraphCell> cells;

  std::string to_json() const;
};

// Runs upper bound for exhaustive mode.
std::uint64_t metagraph_enumeration_size(const GraphFixingData& rho, std::size_t n, std::size_t r);
inline constexpr std::uint64_t kMetagraphEnumerationCap = 60'000'000;

MetagraphReport metagraph_test(const GraphFixingData& rho, std::size_t n, std::size_t r,
                               MetagraphMode mode, Rng& rng, std::uint64_t samples = 1'000'000);

// phi regularity ---------------------------------------------------------------------

struct RegularityReport {
  std::size_t domain = 0;
  std::size_t codomain = 0;
  std::uint64_t min_preimages = 0;
  std::uint64_t max_preimages = 0;
  bool image_inside = false;
  bool regular = false;
};

// phi(G) rewires G so that edge e is present: with x = G(r, u), y = G(r, v),
// the pairs (u, v) and (x, y) replace (u, x) and (v, y).
GraphOracle plant_edge(const GraphOracle& g, ColoredEdge e);
RegularityReport regularity_test(const GraphFixingData& rho, ColoredEdge e, std::size_t n,
                                 std::size_t r);

// Walk closeness -------------------------------------------------------------------

struct WalkClosenessReport {
  std::size_t n = 0;
  std::size_t spacing = 0;
  double slem = 0.0;
  double empirical_tv = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  bool holds() const { return empirical_tv <= bound + 3 * sigma; }
};

// Walks started uniformly inside each side of a yes instance, with the spacing
// chosen for the measured component SLEM, against ordered sampling without
// replacement from the same sides.
WalkClosenessReport walk_closeness(const YesInstance& g, std::size_t na, std::size_t nb,
                                   std::size_t samples, Rng& rng);

}  // namespace qlab
