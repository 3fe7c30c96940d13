#include "qlab/perm.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qlab {

Permutation::Permutation(std::vector<std::uint32_t> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (auto v : map_) {
    if (v >= map_.size() || seen[v]) {
      throw std::invalid_argument("Permutation: map is not a bijection on [" +
                                  std::to_string(map_.size()) + "]");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::uint32_t> m(n);
  std::iota(m.begin(), m.end(), 0u);
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<std::uint32_t> inv(map_.size());
  for (std::size_t x = 0; x < map_.size(); ++x) inv[map_[x]] = static_cast<std::uint32_t>(x);
  Permutation out;
  out.map_ = std::move(inv);
  return out;
}

bool Permutation::is_identity() const {
  for (std::size_t x = 0; x < map_.size(); ++x)
    if (map_[x] != x) return false;
  return true;
}

bool Permutation::is_involution() const {
  for (std::size_t x = 0; x < map_.size(); ++x)
    if (map_[map_[x]] != x) return false;
  return true;
}

Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size()) throw std::invalid_argument("compose: size mismatch");
  std::vector<std::uint32_t> m(p.size());
  for (std::size_t x = 0; x < m.size(); ++x) m[x] = p(q(x));
  return Permutation(std::move(m));
}

Permutation invert(const Permutation& p) { return p.inverse(); }

std::vector<std::vector<std::uint32_t>> cycles(const Permutation& p) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<bool> seen(p.size(), false);
  for (std::uint32_t s = 0; s < p.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::uint32_t> c;
    for (std::uint32_t x = s; !seen[x]; x = p(x)) {
      seen[x] = true;
      c.push_back(x);
    }
    out.push_back(std::move(c));
  }
  return out;
}

CycleType cycle_type(const Permutation& p) {
  CycleType t;
  for (const auto& c : cycles(p)) t.push_back(c.size());
  std::sort(t.begin(), t.end(), std::greater<>());
  return t;
}

void shuffle(std::span<std::uint32_t> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = rng.below(i);
    std::swap(values[i - 1], values[j]);
  }
}

Permutation sample_uniform(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> m(n);
  std::iota(m.begin(), m.end(), 0u);
  shuffle(m, rng);
  return Permutation(std::move(m));
}

void sample_matching_on(std::span<const std::uint32_t> vertices, std::vector<std::uint32_t>& map,
                        Rng& rng) {
  if (vertices.size() % 2 != 0) throw std::invalid_argument("sample_matching: odd vertex count");
  std::vector<std::uint32_t> order(vertices.begin(), vertices.end());
  shuffle(order, rng);
  for (std::size_t i = 0; i < order.size(); i += 2) {
    map[order[i]] = order[i + 1];
    map[order[i + 1]] = order[i];
  }
}

void sample_cycle_on(std::span<const std::uint32_t> vertices, std::vector<std::uint32_t>& map,
                     Rng& rng) {
  std::vector<std::uint32_t> order(vertices.begin(), vertices.end());
  shuffle(order, rng);
  for (std::size_t i = 0; i < order.size(); ++i) map[order[i]] = order[(i + 1) % order.size()];
}

Permutation sample_matching(std::size_t n, Rng& rng) {
  if (n % 2 != 0 || n == 0) throw std::invalid_argument("sample_matching: N must be even and positive");
  std::vector<std::uint32_t> verts(n);
  std::iota(verts.begin(), verts.end(), 0u);
  std::vector<std::uint32_t> m(n);
  sample_matching_on(verts, m, rng);
  return Permutation(std::move(m));
}

Permutation sample_single_cycle(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample_single_cycle: N must be positive");
  std::vector<std::uint32_t> verts(n);
  std::iota(verts.begin(), verts.end(), 0u);
  std::vector<std::uint32_t> m(n);
  sample_cycle_on(verts, m, rng);
  return Permutation(std::move(m));
}

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<std::uint32_t> m(n);
  std::iota(m.begin(), m.end(), 0u);
  std::vector<Permutation> out;
  do {
    out.emplace_back(m);
  } while (std::next_permutation(m.begin(), m.end()));
  return out;
}

std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> all_matchings_on(
    std::span<const std::uint32_t> vertices) {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> out;
  if (vertices.empty()) {
    out.emplace_back();
    return out;
  }
  if (vertices.size() % 2 != 0) return out;
  const auto a = vertices[0];
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    std::vector<std::uint32_t> rest;
    for (std::size_t j = 1; j < vertices.size(); ++j)
      if (j != i) rest.push_back(vertices[j]);
    for (auto& sub : all_matchings_on(rest)) {
      sub.insert(sub.begin(), {a, vertices[i]});
      out.push_back(std::move(sub));
    }
  }
  return out;
}

std::vector<Permutation> all_matchings(std::size_t n) {
  std::vector<std::uint32_t> verts(n);
  std::iota(verts.begin(), verts.end(), 0u);
  std::vector<Permutation> out;
  for (const auto& pairs : all_matchings_on(verts)) {
    std::vector<std::uint32_t> m(n);
    for (auto [a, b] : pairs) {
      m[a] = b;
      m[b] = a;
    }
    out.emplace_back(std::move(m));
  }
  return out;
}

std::vector<Permutation> all_single_cycles(std::size_t n) {
  std::vector<Permutation> out;
  if (n == 0) return out;
  std::vector<std::uint32_t> tail(n - 1);
  std::iota(tail.begin(), tail.end(), 1u);
  do {
    std::vector<std::uint32_t> m(n);
    std::uint32_t prev = 0;
    for (auto v : tail) {
      m[prev] = v;
      prev = v;
    }
    m[prev] = 0;
    out.emplace_back(std::move(m));
  } while (std::next_permutation(tail.begin(), tail.end()));
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

PermTuple::PermTuple(std::vector<Permutation> components) : components_(std::move(components)) {
  std::size_t off = 0;
  for (const auto& c : components_) {
    offsets_.push_back(off);
    off += c.size();
  }
  offsets_.push_back(off);
}

std::vector<std::size_t> PermTuple::sizes() const {
  std::vector<std::size_t> s;
  for (const auto& c : components_) s.push_back(c.size());
  return s;
}

std::size_t PermTuple::domain_size() const { return offsets_.empty() ? 0 : offsets_.back(); }

PermTuple PermTuple::inverse() const {
  std::vector<Permutation> inv;
  for (const auto& c : components_) inv.push_back(c.inverse());
  return PermTuple(std::move(inv));
}

}  // namespace qlab
