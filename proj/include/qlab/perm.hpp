#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qlab/rng.hpp"

namespace qlab {

// Bijection on {0, ..., n-1}. All indices are 0-based; the 1-based [N] of the
// usual notation maps to [0, N).
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::uint32_t> map);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return map_.size(); }
  std::uint32_t operator()(std::size_t x) const { return map_[x]; }
  const std::vector<std::uint32_t>& map() const { return map_; }

  Permutation inverse() const;
  bool is_identity() const;
  bool is_involution() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation& a, const Permutation& b) { return a.map_ <=> b.map_; }

 private:
  std::vector<std::uint32_t> map_;
};

// result(x) = p(q(x)).
Permutation compose(const Permutation& p, const Permutation& q);
Permutation invert(const Permutation& p);

// Cycle lengths sorted in decreasing order.
using CycleType = std::vector<std::size_t>;
CycleType cycle_type(const Permutation& p);
std::vector<std::vector<std::uint32_t>> cycles(const Permutation& p);

void shuffle(std::span<std::uint32_t> values, Rng& rng);

Permutation sample_uniform(std::size_t n, Rng& rng);
// Fixed-point-free involution, uniform over the (n-1)!! matchings.
Permutation sample_matching(std::size_t n, Rng& rng);
// Uniform over the (n-1)! permutations consisting of one n-cycle.
Permutation sample_single_cycle(std::size_t n, Rng& rng);

// Writes a uniform matching on `vertices` into map (map[v] = partner).
void sample_matching_on(std::span<const std::uint32_t> vertices, std::vector<std::uint32_t>& map,
                        Rng& rng);
// Writes a uniform single cycle through `vertices` into map.
void sample_cycle_on(std::span<const std::uint32_t> vertices, std::vector<std::uint32_t>& map,
                     Rng& rng);

// Lexicographic enumeration helpers for exhaustive checks.
std::vector<Permutation> all_permutations(std::size_t n);
std::vector<Permutation> all_matchings(std::size_t n);
std::vector<Permutation> all_single_cycles(std::size_t n);
// Every matching of `vertices`, as lists of pairs.
std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> all_matchings_on(
    std::span<const std::uint32_t> vertices);

std::uint64_t factorial(std::size_t n);

// Product of permutations on separate index sets [n_0], [n_1], ...
// Evaluation at (r, x) reads component r only.
class PermTuple {
 public:
  PermTuple() = default;
  explicit PermTuple(std::vector<Permutation> components);

  std::size_t arity() const { return components_.size(); }
  const Permutation& component(std::size_t r) const { return components_[r]; }
  const std::vector<Permutation>& components() const { return components_; }
  std::vector<std::size_t> sizes() const;
  std::uint32_t operator()(std::size_t r, std::size_t x) const { return components_[r](x); }

  // Total number of coordinates, i.e. the size of the disjoint union.
  std::size_t domain_size() const;
  // Flat coordinate index of (r, x).
  std::size_t offset(std::size_t r) const { return offsets_[r]; }

  PermTuple inverse() const;

  friend bool operator==(const PermTuple& a, const PermTuple& b) {
    return a.components_ == b.components_;
  }
  friend auto operator<=>(const PermTuple& a, const PermTuple& b) {
    return a.components_ <=> b.components_;
  }

 private:
  std::vector<Permutation> components_;
  std::vector<std::size_t> offsets_;
};

}  // namespace qlab
