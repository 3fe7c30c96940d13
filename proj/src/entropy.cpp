#include "qlab/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace qlab {

namespace {

constexpr double kProbTolerance = 1e-12;

double log2_falling(std::size_t n, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log2(static_cast<double>(n - i));
  return s;
}

// Keys for value vectors on a mask: mixed radix with a common radix.
struct KeyCodec {
  std::uint64_t radix = 2;
  std::size_t width = 0;

  KeyCodec(std::size_t max_size, std::size_t w) : radix(std::max<std::size_t>(max_size, 2)), width(w) {
    long double cap = 1.0L;
    for (std::size_t i = 0; i < w; ++i) cap *= static_cast<long double>(radix);
    if (cap > 1.8e19L) throw std::invalid_argument("coordinate subset too large for key encoding");
  }
  std::vector<std::uint32_t> decode(std::uint64_t key) const {
    std::vector<std::uint32_t> v(width);
    for (std::size_t i = width; i-- > 0;) {
      v[i] = static_cast<std::uint32_t>(key % radix);
      key /= radix;
    }
    return v;
  }
};

std::size_t max_size(const std::vector<std::size_t>& sizes) {
  std::size_t m = 2;
  for (auto s : sizes) m = std::max(m, s);
  return m;
}

}  // namespace

std::vector<std::size_t> mask_coords(CoordMask m) {
  std::vector<std::size_t> c;
  while (m) {
    c.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    m &= m - 1;
  }
  return c;
}

CoordMask coords_mask(const std::vector<std::size_t>& coords) {
  CoordMask m = 0;
  for (auto c : coords) {
    if (c >= 64) throw std::invalid_argument("coordinate beyond 64");
    m |= CoordMask{1} << c;
  }
  return m;
}

std::size_t UniformReference::domain_size() const {
  std::size_t s = 0;
  for (auto n : sizes) s += n;
  return s;
}

CoordMask UniformReference::component_mask(std::size_t r) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < r; ++i) off += sizes[i];
  CoordMask m = 0;
  for (std::size_t x = 0; x < sizes[r]; ++x) m |= CoordMask{1} << (off + x);
  return m;
}

CoordMask UniformReference::full_mask() const {
  const auto d = domain_size();
  return d >= 64 ? ~CoordMask{0} : (CoordMask{1} << d) - 1;
}

// PermDistribution ------------------------------------------------------------------

PermDistribution::PermDistribution(std::vector<std::size_t> sizes, std::vector<PermTuple> support,
                                   std::vector<double> weights)
    : sizes_(std::move(sizes)) {
  if (support.size() != weights.size()) throw std::invalid_argument("support/weights length");
  if (support.empty()) throw std::invalid_argument("empty support");
  if (support.size() > kSupportCap)
    throw std::invalid_argument("support of " + std::to_string(support.size()) +
                                " entries exceeds the cap");
  for (auto s : sizes_) offsets_.push_back(offsets_.back() + s);
  if (domain_size() > 64) throw std::invalid_argument("alphabet larger than 64 coordinates");

  std::map<PermTuple, double> merged;
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].sizes() != sizes_) throw std::invalid_argument("support entry has wrong shape");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("negative weight");
    total += weights[i];
    if (weights[i] > 0.0) merged[support[i]] += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights do not sum to 1");
  for (auto& [p, w] : merged) {
    support_.push_back(p);
    weights_.push_back(w / total);
  }
  flat_.resize(support_.size() * domain_size());
  for (std::size_t i = 0; i < support_.size(); ++i)
    for (std::size_t r = 0; r < sizes_.size(); ++r)
      for (std::size_t x = 0; x < sizes_[r]; ++x)
        flat_[i * domain_size() + offsets_[r] + x] = support_[i](r, x);
}

namespace {

void for_each_tuple(const std::vector<std::size_t>& sizes,
                    const std::function<void(const PermTuple&)>& f) {
  long double count = 1.0L;
  std::vector<std::vector<Permutation>> all;
  for (auto s : sizes) {
    all.push_back(all_permutations(s));
    count *= static_cast<long double>(all.back().size());
  }
  if (count > static_cast<long double>(kSupportCap))
    throw std::invalid_argument("reference support exceeds the cap");
  std::vector<std::size_t> idx(sizes.size(), 0);
  while (true) {
    std::vector<Permutation> comps;
    for (std::size_t r = 0; r < sizes.size(); ++r) comps.push_back(all[r][idx[r]]);
    f(PermTuple(std::move(comps)));
    std::size_t r = sizes.size();
    while (r > 0) {
      --r;
      if (++idx[r] < all[r].size()) break;
      idx[r] = 0;
      if (r == 0) return;
    }
    if (sizes.empty()) return;
  }
}

}  // namespace

PermDistribution PermDistribution::uniform(std::vector<std::size_t> sizes) {
  return uniform_where(std::move(sizes), [](const PermTuple&) { return true; });
}

PermDistribution PermDistribution::point_mass(PermTuple p) {
  auto sizes = p.sizes();
  return PermDistribution(std::move(sizes), {std::move(p)}, {1.0});
}

PermDistribution PermDistribution::uniform_where(
    std::vector<std::size_t> sizes, const std::function<bool(const PermTuple&)>& pred) {
  std::vector<PermTuple> support;
  for_each_tuple(sizes, [&](const PermTuple& p) {
    if (pred(p)) support.push_back(p);
  });
  if (support.empty()) throw std::invalid_argument("predicate excludes every tuple");
  std::vector<double> w(support.size(), 1.0 / static_cast<double>(support.size()));
  return PermDistribution(std::move(sizes), std::move(support), std::move(w));
}

PermDistribution PermDistribution::inverted() const {
  std::vector<PermTuple> inv;
  inv.reserve(support_.size());
  for (const auto& p : support_) inv.push_back(p.inverse());
  return PermDistribution(sizes_, std::move(inv), weights_);
}

double PermDistribution::probability(CoordMask mask, const std::vector<std::uint32_t>& values) const {
  const auto coords = mask_coords(mask);
  if (coords.size() != values.size()) throw std::invalid_argument("value count does not match mask");
  double p = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < coords.size() && hit; ++k) hit = value(i, coords[k]) == values[k];
    if (hit) p += weights_[i];
  }
  return p;
}

PermDistribution PermDistribution::conditioned(CoordMask mask,
                                               const std::vector<std::uint32_t>& values) const {
  const auto coords = mask_coords(mask);
  if (coords.size() != values.size()) throw std::invalid_argument("value count does not match mask");
  std::vector<PermTuple> sup;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < coords.size() && hit; ++k) hit = value(i, coords[k]) == values[k];
    if (!hit) continue;
    sup.push_back(support_[i]);
    w.push_back(weights_[i]);
    total += weights_[i];
  }
  if (total <= 0.0) throw std::invalid_argument("conditioning on a null event");
  for (auto& x : w) x /= total;
  return PermDistribution(sizes_, std::move(sup), std::move(w));
}

std::vector<std::pair<std::vector<std::uint32_t>, double>> PermDistribution::marginal(
    CoordMask mask) const {
  const auto coords = mask_coords(mask);
  const KeyCodec codec(max_size(sizes_), coords.size());
  std::map<std::uint64_t, double> acc;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    std::uint64_t key = 0;
    for (auto c : coords) key = key * codec.radix + value(i, c);
    acc[key] += weights_[i];
  }
  std::vector<std::pair<std::vector<std::uint32_t>, double>> out;
  for (const auto& [k, p] : acc) out.emplace_back(codec.decode(k), p);
  return out;
}

double PermDistribution::max_marginal(CoordMask mask) const {
  const auto coords = mask_coords(mask);
  if (coords.empty()) return 1.0;
  const KeyCodec codec(max_size(sizes_), coords.size());
  std::unordered_map<std::uint64_t, double> acc;
  acc.reserve(support_.size());
  double best = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    std::uint64_t key = 0;
    for (auto c : coords) key = key * codec.radix + value(i, c);
    best = std::max(best, acc[key] += weights_[i]);
  }
  return best;
}

std::string PermDistribution::to_json() const {
  nlohmann::json j;
  j["alphabet"] = sizes_;
  auto sup = nlohmann::json::array();
  for (const auto& p : support_) {
    auto t = nlohmann::json::array();
    for (const auto& c : p.components()) t.push_back(c.map());
    sup.push_back(t);
  }
  j["support"] = sup;
  j["weights"] = weights_;
  return j.dump();
}

PermDistribution PermDistribution::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto sizes = j.at("alphabet").get<std::vector<std::size_t>>();
  std::vector<PermTuple> sup;
  for (const auto& t : j.at("support")) {
    std::vector<Permutation> comps;
    for (const auto& c : t) comps.emplace_back(c.get<std::vector<std::uint32_t>>());
    sup.emplace_back(std::move(comps));
  }
  return PermDistribution(std::move(sizes), std::move(sup),
                          j.at("weights").get<std::vector<double>>());
}

// Entropy -------------------------------------------------------------------------------

double min_entropy(const PermDistribution& d) {
  if (d.support().empty()) throw std::invalid_argument("min_entropy: empty support");
  return -std::log2(*std::max_element(d.weights().begin(), d.weights().end()));
}

double chain_entropy(const UniformReference& ref, CoordMask i, CoordMask j) {
  if (i & j) throw std::invalid_argument("chain_entropy: I and J overlap");
  if ((i | j) & ~ref.full_mask()) throw std::invalid_argument("chain_entropy: coordinate out of range");
  double h = 0.0;
  for (std::size_t r = 0; r < ref.sizes.size(); ++r) {
    const CoordMask c = ref.component_mask(r);
    const auto ni = static_cast<std::size_t>(std::popcount(i & c));
    const auto nj = static_cast<std::size_t>(std::popcount(j & c));
    h += log2_falling(ref.sizes[r] - nj, ni);
  }
  return h;
}

double deficit_ratio(const PermDistribution& d, CoordMask fixed, CoordMask j) {
  const double h = chain_entropy(d.reference(), j, fixed);
  if (h <= kProbTolerance) return 0.0;
  return 1.0 - (-std::log2(d.max_marginal(j))) / h;
}

std::string DensityReport::to_json() const {
  nlohmann::json j;
  j["direction"] = direction == DensityDirection::kForward ? "forward" : "inverse";
  j["fixed_set"] = mask_coords(fixed_set);
  j["fixed_values"] = fixed_values;
  j["k"] = k;
  j["delta"] = delta;
  j["witness"] = mask_coords(witness);
  j["witness_min_entropy"] = witness_min_entropy;
  j["witness_entropy"] = witness_entropy;
  return j.dump();
}

namespace {

DensityReport scan(const PermDistribution& d, CoordMask fixed, DensityDirection dir) {
  const auto ref = d.reference();
  const CoordMask free = ref.full_mask() & ~fixed;
  if (std::popcount(free) > 30) throw std::invalid_argument("density scan over too many coordinates");
  long double work = std::ldexp(1.0L, std::popcount(free)) * static_cast<long double>(d.support().size());
  if (work > 4e9L) throw std::invalid_argument("density scan too large");

  DensityReport rep;
  rep.direction = dir;
  rep.fixed_set = fixed;
  rep.k = static_cast<std::size_t>(std::popcount(fixed));
  for (auto c : mask_coords(fixed)) rep.fixed_values.push_back(d.value(0, c));
  rep.delta = 0.0;
  // Enumerate submasks of `free` in increasing numeric order.
  const auto free_coords = mask_coords(free);
  const std::size_t m = free_coords.size();
  for (std::uint64_t s = 1; s < (std::uint64_t{1} << m); ++s) {
    CoordMask j = 0;
    for (std::size_t b = 0; b < m; ++b)
      if ((s >> b) & 1u) j |= CoordMask{1} << free_coords[b];
    const double h = chain_entropy(ref, j, fixed);
    if (h <= kProbTolerance) continue;
    const double hmin = -std::log2(d.max_marginal(j));
    const double ratio = 1.0 - hmin / h;
    if (ratio > rep.delta + kProbTolerance) {
      rep.delta = ratio;
      rep.witness = j;
      rep.witness_min_entropy = hmin;
      rep.witness_entropy = h;
    }
  }
  rep.delta = std::max(rep.delta, 0.0);
  return rep;
}

CoordMask constant_coords(const PermDistribution& d) {
  CoordMask fixed = 0;
  for (std::size_t c = 0; c < d.domain_size(); ++c) {
    bool constant = true;
    for (std::size_t i = 1; i < d.support().size() && constant; ++i)
      constant = d.value(i, c) == d.value(0, c);
    if (constant) fixed |= CoordMask{1} << c;
  }
  return fixed;
}

}  // namespace

DensityReport density_report(const PermDistribution& d, DensityDirection dir) {
  if (dir == DensityDirection::kInverse) {
    auto inv = d.inverted();
    return scan(inv, constant_coords(inv), dir);
  }
  return scan(d, constant_coords(d), dir);
}

DensityReport density_report_relative(const PermDistribution& d, CoordMask fixed,
                                      DensityDirection dir) {
  if (dir == DensityDirection::kInverse) return scan(d.inverted(), fixed, dir);
  return scan(d, fixed, dir);
}

// Decomposition ------------------------------------------------------------------------

namespace {

struct Candidate {
  CoordMask mask;
  std::vector<std::uint32_t> values;
  double probability;
};

bool coords_less(CoordMask a, CoordMask b) {
  const int pa = std::popcount(a), pb = std::popcount(b);
  if (pa != pb) return pa < pb;
  return mask_coords(a) < mask_coords(b);
}

bool restricts_to(const Candidate& big, const Candidate& small) {
  const auto coords = mask_coords(big.mask);
  std::size_t k = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!((small.mask >> coords[i]) & 1u)) continue;
    if (big.values[i] != small.values[k++]) return false;
  }
  return true;
}

}  // namespace

Decomposition decompose(const PermDistribution& d, double delta, double epsilon,
                        const UniformReference& ref) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("decompose: delta must be in (0, 1]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("decompose: epsilon must be in (0, 1)");
  if (ref.sizes != d.sizes()) throw std::invalid_argument("decompose: support outside the reference");

  Decomposition out;
  out.deficiency = chain_entropy(ref, ref.full_mask()) - min_entropy(d);
  out.entropy_bound = (out.deficiency + std::log2(1.0 / epsilon)) / delta;

  const CoordMask full = ref.full_mask();
  std::vector<CoordMask> masks;
  for (CoordMask m = 0;; ++m) {
    masks.push_back(m);
    if (m == full) break;
  }
  std::sort(masks.begin(), masks.end(), coords_less);

  std::vector<double> remaining = d.weights();
  std::vector<double> mixture(d.support().size(), 0.0);
  while (true) {
    double mass = 0.0;
    for (double w : remaining) mass += w;
    if (mass < epsilon || mass <= kProbTolerance) {
      out.residual = std::max(mass, 0.0);
      break;
    }
    std::vector<PermTuple> sup;
    std::vector<double> w;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (remaining[i] > 0.0) {
        sup.push_back(d.support()[i]);
        w.push_back(remaining[i] / mass);
      }
    const PermDistribution current(d.sizes(), std::move(sup), std::move(w));

    std::vector<Candidate> cands;
    for (auto m : masks) {
      const double threshold = std::exp2(-(1.0 - delta) * chain_entropy(ref, m));
      for (auto& [vals, p] : current.marginal(m))
        if (p >= threshold - kProbTolerance) cands.push_back({m, vals, p});
    }
    const Candidate* chosen = nullptr;
    for (const auto& c : cands) {
      bool extendable = false;
      for (const auto& e : cands) {
        if (e.mask == c.mask || (e.mask & c.mask) != c.mask) continue;
        if (restricts_to(e, c)) {
          extendable = true;
          break;
        }
      }
      if (!extendable) {
        chosen = &c;
        break;
      }
    }
    if (!chosen) throw std::logic_error("decompose: no maximal candidate");

    DecompositionComponent comp;
    comp.weight = mass * chosen->probability;
    comp.fixed_set = chosen->mask;
    comp.fixed_values = chosen->values;
    comp.fixed_entropy = chain_entropy(ref, chosen->mask);
    comp.distribution = current.conditioned(chosen->mask, chosen->values);
    comp.forward = density_report(comp.distribution, DensityDirection::kForward);
    comp.inverse = density_report(comp.distribution, DensityDirection::kInverse);

    const auto coords = mask_coords(chosen->mask);
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (remaining[i] <= 0.0) continue;
      bool hit = true;
      for (std::size_t k = 0; k < coords.size() && hit; ++k)
        hit = d.value(i, coords[k]) == chosen->values[k];
      if (!hit) continue;
      mixture[i] += remaining[i];
      remaining[i] = 0.0;
    }
    out.components.push_back(std::move(comp));
  }

  double covered = 0.0;
  for (double m : mixture) covered += m;
  double tv = 0.0;
  for (std::size_t i = 0; i < mixture.size(); ++i)
    tv += std::abs(d.weights()[i] - (covered > 0 ? mixture[i] / covered : 0.0));
  out.mixture_tv = 0.5 * tv;

  out.all_certified = true;
  out.cardinality_ok = true;
  for (const auto& c : out.components) {
    if (c.forward.delta > delta + 1e-9 || c.inverse.delta > delta + 1e-9) out.all_certified = false;
    if (c.fixed_entropy > out.entropy_bound + 1e-9) out.all_certified = false;
    const auto size = static_cast<double>(std::popcount(c.fixed_set));
    if (size > out.entropy_bound + 1.0 + 1e-9) out.cardinality_ok = false;
    for (std::size_t r = 0; r < ref.sizes.size(); ++r) {
      const CoordMask ir = c.fixed_set & ref.component_mask(r);
      if (std::popcount(ir) > chain_entropy(ref, ir) + 1.0 + 1e-9) out.cardinality_ok = false;
    }
  }
  return out;
}

// Dense adapter -------------------------------------------------------------------------

std::vector<std::size_t> FixingData::reduced_sizes() const {
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (auto s : sizes) {
    std::size_t fixed_here = 0;
    for (std::size_t x = 0; x < s; ++x) fixed_here += (fixed >> (off + x)) & 1u;
    out.push_back(s - fixed_here);
    off += s;
  }
  return out;
}

void FixingData::validate() const {
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (total > 64) throw std::invalid_argument("fixing: alphabet larger than 64");
  if (total < 64 && (fixed >> total)) throw std::invalid_argument("fixing: coordinate out of range");
  if (values.size() != static_cast<std::size_t>(std::popcount(fixed)))
    throw std::invalid_argument("fixing: value count does not match fixed set");
  std::size_t off = 0, vi = 0;
  const auto red = reduced_sizes();
  if (!bijection.empty() && bijection.size() != sizes.size())
    throw std::invalid_argument("fixing: one bijection per component");
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    std::vector<bool> used(sizes[r], false);
    for (std::size_t x = 0; x < sizes[r]; ++x) {
      if (!((fixed >> (off + x)) & 1u)) continue;
      const auto v = values[vi++];
      if (v >= sizes[r] || used[v]) throw std::invalid_argument("fixing: values collide or overflow");
      used[v] = true;
    }
    if (!bijection.empty()) {
      const auto& b = bijection[r];
      if (b.size() != red[r]) throw std::invalid_argument("fixing: bijection has wrong length");
      std::vector<bool> hit(sizes[r], false);
      for (auto x : b) {
        if (x >= sizes[r] || ((fixed >> (off + x)) & 1u) || hit[x])
          throw std::invalid_argument("fixing: bijection must map onto the free coordinates");
        hit[x] = true;
      }
    }
    off += sizes[r];
  }
}

DenseAdapter::DenseAdapter(FixingData data) : data_(std::move(data)) {
  data_.validate();
  reduced_ = data_.reduced_sizes();
  std::size_t off = 0, vi = 0;
  for (std::size_t r = 0; r < data_.sizes.size(); ++r) {
    const std::size_t n = data_.sizes[r];
    std::vector<std::int64_t> table(n, -1), table_inv(n, -1), rank(n, -1);
    std::vector<std::uint32_t> free_coords;
    for (std::size_t x = 0; x < n; ++x) {
      if ((data_.fixed >> (off + x)) & 1u) {
        const auto v = data_.values[vi++];
        table[x] = v;
        table_inv[v] = static_cast<std::int64_t>(x);
      } else {
        rank[x] = static_cast<std::int64_t>(free_coords.size());
        free_coords.push_back(static_cast<std::uint32_t>(x));
      }
    }
    std::vector<std::uint32_t> free_images;
    for (std::size_t y = 0; y < n; ++y)
      if (table_inv[y] < 0) free_images.push_back(static_cast<std::uint32_t>(y));
    std::vector<std::int64_t> pi(n, -1);
    std::vector<std::uint32_t> pi_inv(free_images.size());
    for (std::size_t i = 0; i < free_images.size(); ++i) {
      const std::uint32_t target = data_.bijection.empty() ? free_coords[i] : data_.bijection[r][i];
      const auto idx = rank[target];
      pi[free_images[i]] = idx;
      pi_inv[static_cast<std::size_t>(idx)] = free_images[i];
    }
    table_.push_back(std::move(table));
    table_inv_.push_back(std::move(table_inv));
    coord_rank_.push_back(std::move(rank));
    free_coords_.push_back(std::move(free_coords));
    pi_.push_back(std::move(pi));
    pi_inv_.push_back(std::move(pi_inv));
    off += n;
  }
}

std::optional<std::uint32_t> DenseAdapter::forward(std::size_t r, std::size_t x,
                                                   const PermTuple& reduced, bool* used) const {
  if (r >= table_.size() || x >= table_[r].size()) return std::nullopt;
  if (table_[r][x] >= 0) return static_cast<std::uint32_t>(table_[r][x]);
  if (used) *used = true;
  const auto z = reduced(r, static_cast<std::size_t>(coord_rank_[r][x]));
  return pi_inv_[r][z];
}

std::optional<std::uint32_t> DenseAdapter::inverse(std::size_t r, std::size_t y,
                                                   const PermTuple& reduced, bool* used) const {
  if (r >= table_.size() || y >= table_[r].size()) return std::nullopt;
  if (table_inv_[r][y] >= 0) return static_cast<std::uint32_t>(table_inv_[r][y]);
  if (used) *used = true;
  const auto target = static_cast<std::uint32_t>(pi_[r][y]);
  const auto& comp = reduced.component(r);
  for (std::size_t z = 0; z < comp.size(); ++z)
    if (comp(z) == target) return free_coords_[r][z];
  throw std::logic_error("reduced oracle is not a permutation");
}

PermTuple DenseAdapter::lift(const PermTuple& reduced) const {
  if (reduced.sizes() != reduced_) throw std::invalid_argument("lift: reduced tuple has wrong shape");
  std::vector<Permutation> comps;
  for (std::size_t r = 0; r < table_.size(); ++r) {
    std::vector<std::uint32_t> map(table_[r].size());
    for (std::size_t x = 0; x < map.size(); ++x) map[x] = *forward(r, x, reduced, nullptr);
    comps.emplace_back(std::move(map));
  }
  return PermTuple(std::move(comps));
}

bool DenseAdapter::consistent(const PermTuple& full) const {
  if (full.sizes() != data_.sizes) return false;
  for (std::size_t r = 0; r < table_.size(); ++r)
    for (std::size_t x = 0; x < table_[r].size(); ++x)
      if (table_[r][x] >= 0 && full(r, x) != static_cast<std::uint32_t>(table_[r][x])) return false;
  return true;
}

PermTuple DenseAdapter::reduce(const PermTuple& full) const {
  if (!consistent(full)) throw std::invalid_argument("reduce: tuple violates the fixing");
  std::vector<Permutation> comps;
  for (std::size_t r = 0; r < table_.size(); ++r) {
    std::vector<std::uint32_t> map(reduced_[r]);
    for (std::size_t i = 0; i < map.size(); ++i)
      map[i] = static_cast<std::uint32_t>(pi_[r][full(r, free_coords_[r][i])]);
    comps.emplace_back(std::move(map));
  }
  return PermTuple(std::move(comps));
}

std::optional<std::uint32_t> AdaptedOracle::evaluate(std::span<const std::size_t> input,
                                                     Direction dir) const {
  std::size_t r = 0, x = 0;
  if (input.size() == 2) {
    r = input[0];
    x = input[1];
  } else if (input.size() == 1 && adapter_.data().sizes.size() == 1) {
    x = input[0];
  } else {
    throw std::invalid_argument("AdaptedOracle: expected (r, x)");
  }
  return dir == Direction::kForward ? adapter_.forward(r, x, reduced_, &used_)
                                    : adapter_.inverse(r, x, reduced_, &used_);
}

RunResult AdaptedAlgorithm::run(const PermTuple& reduced, std::size_t* reduced_calls) const {
  const AdaptedOracle oracle(adapter, reduced);
  auto res = qlab::run(algorithm, oracle);
  if (reduced_calls) *reduced_calls = oracle.reduced_calls();
  return res;
}

AdaptedAlgorithm dense_adapter(QueryAlgorithm alg, FixingData data) {
  alg.validate();
  return {std::move(alg), DenseAdapter(std::move(data))};
}

// Hypercube ---------------------------------------------------------------------------

void HypercubeDensity::validate() const {
  if (n >= 30 || values.size() != (std::size_t{1} << n))
    throw std::invalid_argument("hypercube density: need 2^n values");
  double s = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("hypercube density: negative value");
    s += v;
  }
  if (std::abs(s / static_cast<double>(values.size()) - 1.0) > 1e-12)
    throw std::invalid_argument("hypercube density: mean is not 1");
}

double HypercubeDensity::deficit(std::uint64_t s) const {
  // Marginal density on s: average over the coordinates outside s.
  std::unordered_map<std::uint64_t, double> acc;
  for (std::uint64_t x = 0; x < values.size(); ++x) acc[x & s] += values[x];
  const double outside = std::ldexp(1.0, static_cast<int>(n) - std::popcount(s));
  double best = 0.0;
  for (const auto& [k, v] : acc) best = std::max(best, v / outside);
  return std::log2(best);
}

double HypercubeDensity::delta() const {
  double d = 0.0;
  for (std::uint64_t s = 1; s < (std::uint64_t{1} << n); ++s)
    d = std::max(d, deficit(s) / std::popcount(s));
  return d;
}

double HypercubeDensity::tv_from_uniform() const {
  double s = 0.0;
  for (double v : values) s += std::abs(v - 1.0);
  return 0.5 * s / static_cast<double>(values.size());
}

EvenParitySource::EvenParitySource(std::size_t n) : n_(n) {
  if (n == 0 || n >= 30) throw std::invalid_argument("even parity source needs 1 <= n < 30");
}

std::vector<std::uint8_t> EvenParitySource::sample(Rng& rng) const {
  std::vector<std::uint8_t> b(n_);
  std::uint8_t parity = 0;
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    b[i] = rng.coin() ? 1 : 0;
    parity ^= b[i];
  }
  b[n_ - 1] = parity;
  return b;
}

HypercubeDensity EvenParitySource::density() const {
  HypercubeDensity h{n_, std::vector<double>(std::size_t{1} << n_)};
  for (std::uint64_t x = 0; x < h.values.size(); ++x) h.values[x] = std::popcount(x) % 2 ? 0.0 : 2.0;
  return h;
}

ParityDiagnostics EvenParitySource::diagnostics() const {
  const auto h = density();
  h.validate();
  ParityDiagnostics d;
  d.n = n_;
  const std::uint64_t full = (std::uint64_t{1} << n_) - 1;
  for (std::uint64_t s = 1; s < full; ++s) d.max_proper_deficit = std::max(d.max_proper_deficit, h.deficit(s));
  d.full_deficit = h.deficit(full);
  d.delta = h.delta();
  d.tv = h.tv_from_uniform();
  return d;
}

double bias_bound(std::size_t n, std::size_t t, double delta, double* best_eps) {
  const double a = std::sqrt(delta) * std::exp2(kBiasConstC * static_cast<double>(t));
  const double b = kBiasConstCPrime * std::pow(delta * static_cast<double>(n), t / 2.0);
  double eps = b > 0 ? std::sqrt(a / b) : 1.0;
  eps = std::min(eps, 1.0);
  if (best_eps) *best_eps = eps;
  return a / eps + b * eps;
}

BiasProbe bias_probe(std::size_t n, std::size_t t, Rng& rng) {
  if (n == 0 || n > 12) throw std::invalid_argument("bias_probe: n must be in [1, 12]");
  const auto alg = random_bit_query_circuit(n, t, rng);
  double even = 0.0, all = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = (x >> i) & 1u;
    const double p = run(alg, BitStringOracle(bits)).accept_probability;
    all += p;
    if (std::popcount(x) % 2 == 0) even += p;
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));
  BiasProbe probe;
  probe.n = n;
  probe.t = t;
  probe.bias = std::abs(even / (total / 2) - all / total);
  probe.bound = bias_bound(n, t, 1.0 / static_cast<double>(n), &probe.epsilon);
  return probe;
}

PermDistribution inverse_density_counterexample() {
  return PermDistribution::uniform_where({4}, [](const PermTuple& p) {
    const auto pre = p.component(0).inverse()(0);
    return pre == 1 || pre == 3;
  });
}

PermDistribution coupling_example(std::size_t n) {
  if (n < 1 || n > 6) throw std::invalid_argument("coupling_example: n must be in [1, 6]");
  return PermDistribution::uniform_where({n, n}, [](const PermTuple& p) {
    const auto m = cycle_type(p.component(1)).front();
    return p(0, m - 1) == m - 1;
  });
}

}  // namespace qlab
