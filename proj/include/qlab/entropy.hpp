#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlab/perm.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"

namespace qlab {

// Coordinate subsets of the alphabet are bit masks over flat coordinates
// offset(r) + x, so the alphabet is limited to 64 coordinates.
using CoordMask = std::uint64_t;

inline constexpr std::size_t kSupportCap = 10'000'000;

// Uniform product of S_{N_0} x S_{N_1} x ..., the only reference supported.
struct UniformReference {
  std::vector<std::size_t> sizes;

  std::size_t domain_size() const;
  // Component r's coordinates as a mask.
  CoordMask component_mask(std::size_t r) const;
  CoordMask full_mask() const;
};

// Explicit distribution over tuples of permutations on [N_0], [N_1], ...
class PermDistribution {
 public:
  PermDistribution() = default;
  // Duplicate support entries are merged; weights must sum to 1.
  PermDistribution(std::vector<std::size_t> sizes, std::vector<PermTuple> support,
                   std::vector<double> weights);

  static PermDistribution uniform(std::vector<std::size_t> sizes);
  static PermDistribution point_mass(PermTuple p);
  // Uniform over the tuples satisfying pred.
  static PermDistribution uniform_where(std::vector<std::size_t> sizes,
                                        const std::function<bool(const PermTuple&)>& pred);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<PermTuple>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t domain_size() const { return offsets_.back(); }
  std::size_t offset(std::size_t r) const { return offsets_[r]; }
  UniformReference reference() const { return {sizes_}; }

  // Value of support entry i at flat coordinate c.
  std::uint32_t value(std::size_t i, std::size_t c) const { return flat_[i * domain_size() + c]; }

  // Pointwise inversion P -> P^{-1}.
  PermDistribution inverted() const;
  // Probability that the values on mask equal `values` (listed in coordinate order).
  double probability(CoordMask mask, const std::vector<std::uint32_t>& values) const;
  // Conditioned on the values on mask; throws if the event has probability 0.
  PermDistribution conditioned(CoordMask mask, const std::vector<std::uint32_t>& values) const;
  // Marginal law of the values on mask, as (values, probability) in value order.
  std::vector<std::pair<std::vector<std::uint32_t>, double>> marginal(CoordMask mask) const;
  // Largest marginal probability on mask.
  double max_marginal(CoordMask mask) const;

  std::string to_json() const;
  static PermDistribution from_json(const std::string& text);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_{0};
  std::vector<PermTuple> support_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> flat_;
};

double min_entropy(const PermDistribution& d);
// h(I | J) = sum_r log2 of (N_r - |J_r|)(N_r - |J_r| - 1)...(N_r - |J_r| - |I_r| + 1).
double chain_entropy(const UniformReference& ref, CoordMask i, CoordMask j = 0);
std::vector<std::size_t> mask_coords(CoordMask m);
CoordMask coords_mask(const std::vector<std::size_t>& coords);

enum class DensityDirection { kForward, kInverse };

struct DensityReport {
  DensityDirection direction = DensityDirection::kForward;
  CoordMask fixed_set = 0;
  std::vector<std::uint32_t> fixed_values;
  std::size_t k = 0;
  double delta = 0.0;
  CoordMask witness = 0;  // J attaining delta; 0 when every h(J|I) vanishes
  double witness_min_entropy = 0.0;
  double witness_entropy = 0.0;

  std::string to_json() const;
};

// Minimal (k, delta): I is the set of coordinates constant on the support.
DensityReport density_report(const PermDistribution& d,
                             DensityDirection dir = DensityDirection::kForward);
// The same scan with a caller-chosen fixed set (values need not be constant).
DensityReport density_report_relative(const PermDistribution& d, CoordMask fixed,
                                      DensityDirection dir = DensityDirection::kForward);
// 1 - H_min(D(J)) / h(J | I), recomputed from scratch.
double deficit_ratio(const PermDistribution& d, CoordMask fixed, CoordMask j);

struct DecompositionComponent {
  double weight = 0.0;
  CoordMask fixed_set = 0;
  std::vector<std::uint32_t> fixed_values;
  double fixed_entropy = 0.0;  // h(I)
  PermDistribution distribution;
  DensityReport forward;
  DensityReport inverse;
};

struct Decomposition {
  std::vector<DecompositionComponent> components;
  double residual = 0.0;
  double deficiency = 0.0;      // d = h(Sigma) - H_min(D)
  double entropy_bound = 0.0;   // (d + log2 1/eps) / delta
  double mixture_tv = 0.0;
  bool all_certified = false;   // both directions delta-dense, h(I) bounded
  bool cardinality_ok = false;  // |I_r| <= h_r(I_r) + 1 and |I| <= bound + 1
};

Decomposition decompose(const PermDistribution& d, double delta, double epsilon,
                        const UniformReference& ref);

// Fixed coordinates with their values and, per component, a bijection from
// the free images to the free coordinates (both listed in increasing order).
struct FixingData {
  std::vector<std::size_t> sizes;
  CoordMask fixed = 0;
  std::vector<std::uint32_t> values;  // per fixed coordinate, in coordinate order
  std::vector<std::vector<std::uint32_t>> bijection;  // optional; default keeps order

  // Throws std::invalid_argument if values collide or bijections are malformed.
  void validate() const;
  std::vector<std::size_t> reduced_sizes() const;
};

class DenseAdapter {
 public:
  explicit DenseAdapter(FixingData data);

  const FixingData& data() const { return data_; }
  std::vector<std::size_t> reduced_sizes() const { return reduced_; }
  // B_r(x) = pi_r^{-1}(P~_r(x)) on free coordinates, the table elsewhere.
  PermTuple lift(const PermTuple& reduced) const;
  // Inverse of lift on tuples consistent with the fixing.
  PermTuple reduce(const PermTuple& full) const;
  bool consistent(const PermTuple& full) const;

  std::optional<std::uint32_t> forward(std::size_t r, std::size_t x, const PermTuple& reduced,
                                       bool* used) const;
  std::optional<std::uint32_t> inverse(std::size_t r, std::size_t y, const PermTuple& reduced,
                                       bool* used) const;

 private:
  FixingData data_;
  std::vector<std::size_t> reduced_;
  // Per component: fixed table (-1 if free), fixed inverse, rank of free coordinate,
  // free coordinate list, pi (free image -> reduced index) and its inverse.
  std::vector<std::vector<std::int64_t>> table_, table_inv_;
  std::vector<std::vector<std::int64_t>> coord_rank_;
  std::vector<std::vector<std::uint32_t>> free_coords_;
  std::vector<std::vector<std::int64_t>> pi_;
  std::vector<std::vector<std::uint32_t>> pi_inv_;
};

// Answers queries to the full tuple B from a reduced permutation oracle P~.
// Counts the oracle steps that needed P~.
class AdaptedOracle : public QueryOracle {
 public:
  AdaptedOracle(const DenseAdapter& adapter, PermTuple reduced)
      : adapter_(adapter), reduced_(std::move(reduced)) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;
  void begin_call() const override { used_ = false; }
  void end_call() const override { calls_ += used_ ? 1 : 0; }
  std::size_t reduced_calls() const { return calls_; }

 private:
  const DenseAdapter& adapter_;
  PermTuple reduced_;
  mutable bool used_ = false;
  mutable std::size_t calls_ = 0;
};

struct AdaptedAlgorithm {
  QueryAlgorithm algorithm;
  DenseAdapter adapter;

  // Runs against the reduced oracle; reports the reduced calls made.
  RunResult run(const PermTuple& reduced, std::size_t* reduced_calls = nullptr) const;
};

AdaptedAlgorithm dense_adapter(QueryAlgorithm alg, FixingData data);

// Hypercube --------------------------------------------------------------------

struct HypercubeDensity {
  std::size_t n = 0;
  std::vector<double> values;  // indexed by bit mask, mean 1

  void validate() const;
  // log2 of the largest marginal density on subset s.
  double deficit(std::uint64_t s) const;
  double delta() const;  // max over nonempty s of deficit(s) / |s|
  double tv_from_uniform() const;
};

struct ParityDiagnostics {
  std::size_t n = 0;
  double delta = 0.0;
  double tv = 0.0;
  double max_proper_deficit = 0.0;
  double full_deficit = 0.0;
};

class EvenParitySource {
 public:
  explicit EvenParitySource(std::size_t n);
  std::vector<std::uint8_t> sample(Rng& rng) const;
  HypercubeDensity density() const;
  ParityDiagnostics diagnostics() const;
  std::size_t n() const { return n_; }

 private:
  std::size_t n_;
};

// Random T-query circuits over n bits: exact bias between the even-parity
// source and uniform strings, against sqrt(d) 2^{cT} / eps + c' (d n)^{T/2} eps
// minimized over eps in (0, 1] with d = 1/n.
struct BiasProbe {
  std::size_t n = 0;
  std::size_t t = 0;
  double bias = 0.0;
  double bound = 0.0;
  double epsilon = 0.0;
  bool violated() const { return bias > bound; }
};

inline constexpr double kBiasConstC = 3.0;
inline constexpr double kBiasConstCPrime = 2.0;

double bias_bound(std::size_t n, std::size_t t, double delta, double* best_eps = nullptr);
BiasProbe bias_probe(std::size_t n, std::size_t t, Rng& rng);

// Counterexamples ---------------------------------------------------------------

// Uniform over S_4 conditioned on P^{-1}(0) in {1, 3}.
PermDistribution inverse_density_counterexample();

// Component 0 is P_1, component 1 is P_2 uniform on S_n; P_1 is uniform
// conditioned on fixing coordinate m - 1, m the longest cycle length of P_2.
PermDistribution coupling_example(std::size_t n = 3);

}  // namespace qlab
