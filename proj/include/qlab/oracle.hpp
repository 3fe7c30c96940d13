#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qlab/perm.hpp"
#include "qlab/rng.hpp"

namespace qlab {

// F : [R] x [N] -> [N] where every row F(r, .) is a perfect matching.
class GraphOracle {
 public:
  GraphOracle() = default;
  // table is row-major: entry (r, x) at r * n + x.
  GraphOracle(std::size_t n, std::size_t r, std::vector<std::uint32_t> table);

  std::size_t n() const { return n_; }
  std::size_t r() const { return r_; }
  std::uint32_t operator()(std::size_t r, std::size_t x) const { return table_[r * n_ + x]; }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {table_.data() + r * n_, n_};
  }
  const std::vector<std::uint32_t>& table() const { return table_; }

  friend bool operator==(const GraphOracle&, const GraphOracle&) = default;
  friend auto operator<=>(const GraphOracle& a, const GraphOracle& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    if (auto c = a.r_ <=> b.r_; c != 0) return c;
    return a.table_ <=> b.table_;
  }

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  std::vector<std::uint32_t> table_;
};

// X on [N]; Y_r, Z_r on [N/2].
struct RawPermutations {
  Permutation x;
  std::vector<Permutation> y;
  std::vector<Permutation> z;

  std::size_t n() const { return x.size(); }
  std::size_t r() const { return y.size(); }
  void validate() const;
};

struct SpectralReport {
  Eigen::MatrixXi adjacency;
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd eigenvalues;  // ascending
  double gap = 0.0;
  bool connected = false;
};

struct WalkTrace {
  std::vector<std::uint32_t> vertices;
  std::vector<std::uint32_t> spaced_samples;
  std::size_t step_count = 0;
  std::size_t queries = 0;
};

struct YesInstance {
  GraphOracle oracle;
  std::vector<std::uint8_t> side;  // 1 on S
};

struct NoInstance {
  GraphOracle oracle;
  std::size_t attempts = 0;
  double gap = 0.0;
};

inline constexpr double kConnectedTolerance = 1e-9;

YesInstance sample_yes(std::size_t n, std::size_t r, Rng& rng);
// Union of r independent uniform matchings, no rejection.
GraphOracle sample_matchings(std::size_t n, std::size_t r, Rng& rng);
// Rejection sampling until the gap reaches delta. Throws std::runtime_error
// when the budget is exhausted.
NoInstance sample_no(std::size_t n, std::size_t r, double delta, Rng& rng,
                     std::size_t budget = 1000);

RawPermutations sample_raw(std::size_t n, std::size_t r, Rng& rng);
std::uint32_t f_p_eval(const RawPermutations& p, std::size_t r, std::size_t x);
GraphOracle raw_to_oracle(const RawPermutations& p);

// Distinct oracles of L_yes, sorted.
std::vector<GraphOracle> enumerate_yes(std::size_t n, std::size_t r);

// Connected-component label per vertex (labels are 0..c-1 in order of first vertex).
std::vector<std::uint32_t> components(const GraphOracle& f);
std::size_t component_count(const GraphOracle& f);

// Number of vertex sets S with |S| = N/2, S a union of components,
// A contained in S and B disjoint from S.
std::uint64_t count_separating_partitions(const GraphOracle& f, std::span<const std::uint32_t> a,
                                          std::span<const std::uint32_t> b);
// Some balanced split into unions of components, if one exists.
std::optional<std::vector<std::uint8_t>> balanced_partition(const GraphOracle& f);
bool is_yes_instance(const GraphOracle& f);

Eigen::MatrixXi adjacency(const GraphOracle& f);
SpectralReport spectral(const GraphOracle& f);
double spectral_gap(const GraphOracle& f);

WalkTrace lazy_walk(const GraphOracle& f, std::uint32_t start, std::size_t steps, Rng& rng,
                    std::size_t spacing = 0);

// Exact lazy-walk algebra: P = (I + A/R) / 2.
class LazyChain {
 public:
  explicit LazyChain(const GraphOracle& f);

  const Eigen::MatrixXd& transition() const { return p_; }
  bool connected() const { return connected_; }
  // Second-largest eigenvalue modulus of P (1 when disconnected).
  double slem() const { return slem_; }

  // P^t - J/N, computed through the eigendecomposition without cancellation.
  Eigen::MatrixXd deviation(std::size_t t) const;
  std::vector<double> endpoint_distribution(std::uint32_t start, std::size_t t) const;
  // TV distance between the endpoint distribution and uniform on all of V.
  double endpoint_tv(std::uint32_t start, std::size_t t) const;
  // TV distance of (e_1, ..., e_K), e_k the (k t)-th vertex, from uniform on V^K.
  double spaced_joint_tv(std::uint32_t start, std::size_t k, std::size_t t) const;

 private:
  std::size_t n_;
  Eigen::MatrixXd p_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  bool connected_ = false;
  double slem_ = 1.0;
};

}  // namespace qlab
