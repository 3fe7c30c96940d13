#include "qlab/reduction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <boost/rational.hpp>
#include <json.hpp>

#include "qlab/stats.hpp"

namespace qlab {

// Fixing data ------------------------------------------------------------------------

void GraphFixingData::validate(std::size_t n, std::size_t r) const {
  std::vector<int> side(n, 0);
  for (auto v : a) {
    if (v >= n || side[v]) throw std::invalid_argument("rho: A has an invalid or repeated vertex");
    side[v] = 1;
  }
  for (auto v : b) {
    if (v >= n || side[v]) throw std::invalid_argument("rho: B invalid, repeated, or meets A");
    side[v] = 2;
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> used;  // (vertex, color)
  for (const auto& e : h) {
    if (e.u >= n || e.v >= n || e.r >= r || e.u == e.v)
      throw std::invalid_argument("rho: malformed H edge");
    if (side[e.u] == 0 || side[e.u] != side[e.v])
      throw std::invalid_argument("rho: H edge must lie inside A or inside B");
    if (!used.insert({e.u, e.r}).second || !used.insert({e.v, e.r}).second)
      throw std::invalid_argument("rho: vertex has two H edges of one color");
  }
}

GraphFixingData GraphFixingData::with_edge(ColoredEdge e) const {
  GraphFixingData out = *this;
  out.h.push_back(e);
  return out;
}

std::string GraphFixingData::to_json() const {
  nlohmann::json j;
  j["a"] = a;
  j["b"] = b;
  auto hs = nlohmann::json::array();
  for (const auto& e : h) hs.push_back({e.u, e.v, e.r});
  j["h"] = hs;
  return j.dump();
}

GraphFixingData GraphFixingData::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GraphFixingData rho;
  rho.a = j.value("a", std::vector<std::uint32_t>{});
  rho.b = j.value("b", std::vector<std::uint32_t>{});
  for (const auto& e : j.value("h", nlohmann::json::array())) {
    if (e.size() != 3) throw std::invalid_argument("rho: H entries are [u, v, r]");
    rho.h.push_back({e.at(0), e.at(1), e.at(2)});
  }
  return rho;
}

namespace {

using Fixings = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

void check_fixings(const Fixings& fx, std::size_t size, const char* what) {
  std::set<std::uint32_t> coords, values;
  for (auto [c, v] : fx) {
    if (c >= size || v >= size || !coords.insert(c).second || !values.insert(v).second)
      throw std::invalid_argument(std::string("gamma: inconsistent fixings of ") + what);
  }
}

void check_pairs(const Fixings& fx, const char* what) {
  std::set<std::uint32_t> coords;
  for (auto [c, v] : fx) coords.insert(c);
  for (auto c : coords)
    if (!coords.count(c ^ 1u))
      throw std::invalid_argument(std::string("gamma: fixings of ") + what + " are not paired");
}

}  // namespace

void RawFixingData::validate(std::size_t n, std::size_t r) const {
  if (n < 4 || n % 4) throw std::invalid_argument("gamma: N must be a positive multiple of 4");
  if (y.size() != r || z.size() != r) throw std::invalid_argument("gamma: need R fixings of Y and Z");
  const std::uint32_t half = static_cast<std::uint32_t>(n / 2);
  check_fixings(x, n, "X");
  std::set<std::uint32_t> y_values, z_values;
  for (std::size_t c = 0; c < r; ++c) {
    check_fixings(y[c], half, "Y");
    check_fixings(z[c], half, "Z");
    check_pairs(y[c], "Y");
    check_pairs(z[c], "Z");
    for (auto [i, v] : y[c]) y_values.insert(v);
    for (auto [i, v] : z[c]) z_values.insert(v + half);
  }
  std::set<std::uint32_t> x_low, x_high;
  for (auto [c, v] : x) (c < half ? x_low : x_high).insert(c);
  if (x_low != y_values || x_high != z_values)
    throw std::invalid_argument("gamma: X fixings must cover exactly the fixed Y and Z values");
}

GraphFixingData gamma_to_rho(const RawFixingData& gamma, const RawPermutations& raw) {
  raw.validate();
  const std::size_t n = raw.n(), r = raw.r();
  gamma.validate(n, r);
  const std::uint32_t half = static_cast<std::uint32_t>(n / 2);
  for (auto [c, v] : gamma.x)
    if (raw.x(c) != v) throw std::invalid_argument("gamma: raw X disagrees with the fixing");
  for (std::size_t c = 0; c < r; ++c) {
    for (auto [i, v] : gamma.y[c])
      if (raw.y[c](i) != v) throw std::invalid_argument("gamma: raw Y disagrees with the fixing");
    for (auto [i, v] : gamma.z[c])
      if (raw.z[c](i) != v) throw std::invalid_argument("gamma: raw Z disagrees with the fixing");
  }
  GraphFixingData rho;
  auto xs = gamma.x;
  std::sort(xs.begin(), xs.end());
  for (auto [c, v] : xs) (c < half ? rho.a : rho.b).push_back(v);
  for (std::size_t c = 0; c < r; ++c) {
    auto add = [&](Fixings fx, std::uint32_t shift) {
      std::sort(fx.begin(), fx.end());
      for (std::size_t k = 0; k + 1 < fx.size(); k += 2)
        rho.h.push_back({raw.x(fx[k].second + shift), raw.x(fx[k + 1].second + shift),
                         static_cast<std::uint32_t>(c)});
    };
    add(gamma.y[c], 0);
    add(gamma.z[c], half);
  }
  rho.validate(n, r);
  return rho;
}

// Planted oracle ---------------------------------------------------------------------

PlantedOracle::PlantedOracle(GraphOracle base, Permutation pi, ChangeList changes)
    : base_(std::move(base)), pi_(std::move(pi)), pi_inv_(pi_.inverse()), changes_(std::move(changes)) {
  if (pi_.size() != base_.n()) throw std::invalid_argument("planted oracle: relabel size mismatch");
}

std::uint32_t PlantedOracle::eval(std::size_t r, std::size_t u, bool* base_query) const {
  for (auto it = changes_.rbegin(); it != changes_.rend(); ++it) {
    if (it->r != r) continue;
    if (it->u == u) return it->v;
    if (it->v == u) return it->u;
  }
  if (base_query) *base_query = true;
  return pi_inv_(base_(r, pi_(u)));
}

GraphOracle PlantedOracle::materialize() const {
  std::vector<std::uint32_t> table(base_.n() * base_.r());
  for (std::size_t r = 0; r < base_.r(); ++r)
    for (std::size_t u = 0; u < base_.n(); ++u) table[r * base_.n() + u] = eval(r, u);
  try {
    return GraphOracle(base_.n(), base_.r(), std::move(table));
  } catch (const std::invalid_argument& e) {
    throw std::logic_error(std::string("planted oracle is not a matching: ") + e.what());
  }
}

std::uint32_t planted_eval(const PlantedOracle& p, std::size_t r, std::size_t u) { return p.eval(r, u); }

std::size_t reconnect(const GraphFixingData& rho, PlantedOracle& p) {
  rho.validate(p.base().n(), p.base().r());
  std::size_t queries = 0;
  for (const auto& e : rho.h) {
    bool qx = false, qy = false;
    const auto x = p.eval(e.r, e.u, &qx);
    const auto y = p.eval(e.r, e.v, &qy);
    queries += qx + qy;
    p.append(e);
    p.append({x, y, e.r});
  }
  return queries;
}

ChangeList reconnect(const GraphFixingData& rho, const Permutation& pi, const GraphOracle& base,
                     std::size_t* base_queries) {
  PlantedOracle p(base, pi);
  const auto q = reconnect(rho, p);
  if (base_queries) *base_queries = q;
  return p.changes();
}

bool fixes_edges(const GraphOracle& f, const std::vector<ColoredEdge>& h) {
  return std::all_of(h.begin(), h.end(), [&](const ColoredEdge& e) { return f(e.r, e.u) == e.v; });
}

bool in_yes_rho(const GraphOracle& f, const GraphFixingData& rho) {
  return fixes_edges(f, rho.h) && count_separating_partitions(f, rho.a, rho.b) > 0;
}

bool in_no_rho(const GraphOracle& f, const GraphFixingData& rho) {
  return fixes_edges(f, rho.h) && component_count(f) == 1;
}

std::size_t walk_spacing(std::size_t n, std::size_t targets, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("walk_spacing: delta must be in (0, 1)");
  const double l = std::log(100.0 * static_cast<double>(n) * static_cast<double>(targets)) /
                   std::log(1.0 / delta);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(l)));
}

Permutation sample_conditioned_relabel(std::size_t n, const GraphFixingData& rho,
                                       const std::vector<std::uint32_t>& e,
                                       const std::vector<std::uint32_t>& f, Rng& rng) {
  if (e.size() != rho.a.size() || f.size() != rho.b.size())
    throw std::invalid_argument("relabel: target counts do not match rho");
  std::vector<std::int64_t> map(n, -1);
  std::vector<bool> taken(n, false);
  auto fix = [&](std::uint32_t from, std::uint32_t to) {
    if (taken[to]) throw std::invalid_argument("relabel: targets are not distinct");
    map[from] = to;
    taken[to] = true;
  };
  for (std::size_t i = 0; i < e.size(); ++i) fix(rho.a[i], e[i]);
  for (std::size_t i = 0; i < f.size(); ++i) fix(rho.b[i], f[i]);
  std::vector<std::uint32_t> rest;
  for (std::uint32_t v = 0; v < n; ++v)
    if (!taken[v]) rest.push_back(v);
  shuffle(rest, rng);
  std::size_t k = 0;
  std::vector<std::uint32_t> out(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = map[v] >= 0 ? static_cast<std::uint32_t>(map[v]) : rest[k++];
  return Permutation(std::move(out));
}

AlgorithmMResult algorithm_m(const GraphFixingData& rho, const GraphOracle& victim,
                             const QueryAlgorithm& inner, Rng& rng, double delta) {
  const std::size_t n = victim.n();
  rho.validate(n, victim.r());
  if (rho.a.empty() || rho.b.empty()) throw std::invalid_argument("algorithm_m: A and B must be nonempty");
  AlgorithmMResult res;
  res.spacing = walk_spacing(n, rho.a.size() + rho.b.size(), delta);
  const std::size_t l = res.spacing;

  auto walk = [&](std::size_t count) {
    const auto start = static_cast<std::uint32_t>(rng.below(n));
    auto w = lazy_walk(victim, start, count * l, rng, l);
    res.walk_queries += w.queries;
    return w.spaced_samples;
  };
  auto distinct = [](const std::vector<std::uint32_t>& v) {
    std::set<std::uint32_t> s(v.begin(), v.end());
    return s.size() == v.size();
  };
  res.e = walk(rho.a.size());
  res.f = walk(rho.b.size());
  constexpr std::size_t kMaxResamples = 100;
  while (true) {
    if (!distinct(res.e)) {
      res.e = walk(rho.a.size());
    } else {
      std::vector<std::uint32_t> all = res.e;
      all.insert(all.end(), res.f.begin(), res.f.end());
      if (distinct(all)) break;
      res.f = walk(rho.b.size());
    }
    if (++res.resamples > kMaxResamples)
      throw std::runtime_error("algorithm_m: walk targets kept colliding");
  }

  res.pi = sample_conditioned_relabel(n, rho, res.e, res.f, rng);
  PlantedOracle planted(victim, res.pi);
  res.reconnect_queries = reconnect(rho, planted);
  res.changes = planted.changes();
  res.planted = planted.materialize();

  const auto run_res = run(inner, GraphQueryOracle(res.planted));
  res.inner_queries = run_res.queries;
  res.accept_probability = run_res.accept_probability;
  res.accept = rng.uniform() < res.accept_probability;
  return res;
}

// Metagraph --------------------------------------------------------------------------

namespace {

struct TablePacker {
  std::size_t bits;
  explicit TablePacker(const GraphOracle& shape) : TablePacker(shape.n(), shape.r()) {}
  TablePacker(std::size_t n, std::size_t r) : bits(static_cast<std::size_t>(std::bit_width(n - 1))) {
    if (n * r * bits > 64) throw std::invalid_argument("metagraph: oracle too large to pack");
  }
  std::uint64_t pack(const std::vector<std::uint32_t>& t) const {
    std::uint64_t k = 0;
    for (auto v : t) k = (k << bits) | v;
    return k;
  }
};

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

std::uint64_t double_factorial_odd(std::uint64_t n) {  // (n-1)!! for even n
  std::uint64_t p = 1;
  for (std::uint64_t i = n; i > 1; i -= 2) p *= i - 1;
  return p;
}

// Distinct combinations of `pool` of size k, in lexicographic order.
void for_each_subset(const std::vector<std::uint32_t>& pool, std::size_t k,
                     const std::function<void(const std::vector<std::uint32_t>&)>& f) {
  std::vector<bool> pick(pool.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::uint32_t> s;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pick[i]) s.push_back(pool[i]);
    f(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

std::vector<std::uint32_t> planted_table(const GraphOracle& base, const std::vector<std::uint32_t>& pi,
                                         const std::vector<std::uint32_t>& pi_inv,
                                         const GraphFixingData& rho) {
  const std::size_t n = base.n();
  ChangeList changes;
  auto ev = [&](std::size_t r, std::size_t u) -> std::uint32_t {
    for (auto it = changes.rbegin(); it != changes.rend(); ++it) {
      if (it->r != r) continue;
      if (it->u == u) return it->v;
      if (it->v == u) return it->u;
    }
    return pi_inv[base(r, pi[u])];
  };
  for (const auto& e : rho.h) {
    const auto x = ev(e.r, e.u), y = ev(e.r, e.v);
    changes.push_back(e);
    changes.push_back({x, y, e.r});
  }
  std::vector<std::uint32_t> t(n * base.r());
  for (std::size_t r = 0; r < base.r(); ++r)
    for (std::size_t u = 0; u < n; ++u) t[r * n + u] = ev(r, u);
  return t;
}

GraphOracle oracle_from_sides(std::size_t n, std::size_t r,
                              const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& ms,
                              const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& mb,
                              const std::vector<std::size_t>& choice) {
  std::vector<std::uint32_t> table(n * r);
  for (std::size_t c = 0; c < r; ++c) {
    for (auto [a, b] : ms[choice[c] / mb.size()]) {
      table[c * n + a] = b;
      table[c * n + b] = a;
    }
    for (auto [a, b] : mb[choice[c] % mb.size()]) {
      table[c * n + a] = b;
      table[c * n + b] = a;
    }
  }
  return GraphOracle(n, r, std::move(table));
}

}  // namespace

std::uint64_t metagraph_enumeration_size(const GraphFixingData& rho, std::size_t n, std::size_t r) {
  const std::uint64_t k = rho.a.size() + rho.b.size();
  std::uint64_t seqs = 1;
  for (std::uint64_t i = 0; i < k; ++i) seqs *= n - i;
  const std::uint64_t half = n / 2;
  const std::uint64_t splits = choose(n - k, half - rho.a.size());
  const std::uint64_t m = double_factorial_odd(half);
  std::uint64_t per_split = 1;
  for (std::size_t c = 0; c < r; ++c) per_split *= m * m;
  return seqs * splits * per_split * factorial(n - k);
}

std::string MetagraphReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode == MetagraphMode::kExhaustive ? "exhaustive" : "montecarlo";
  j["runs"] = runs;
  j["reference_size"] = reference_size;
  j["support_size"] = support_size;
  j["outside"] = outside;
  j["exact_equal"] = exact_equal;
  j["set_uniform"] = set_uniform;
  j["chi_square"] = chi_square;
  j["p_value"] = p_value;
  auto cs = nlohmann::json::array();
  for (const auto& c : cells) cs.push_back({{"table", c.oracle.table()}, {"count", c.count}, {"reference", c.reference}});
  j["cells"] = cs;
  return j.dump();
}

MetagraphReport metagraph_test(const GraphFixingData& rho, std::size_t n, std::size_t r,
                               MetagraphMode mode, Rng& rng, std::uint64_t samples) {
  rho.validate(n, r);
  if (n < 4 || n % 4) throw std::invalid_argument("metagraph: N must be a positive multiple of 4");
  const std::size_t half = n / 2;
  if (rho.a.size() > half || rho.b.size() > half) throw std::invalid_argument("metagraph: rho too large");
  const TablePacker packer(n, r);

  MetagraphReport rep;
  rep.mode = mode;
  std::unordered_map<std::uint64_t, std::uint64_t> counts;

  // Reference: L_yes^rho weighted by labeled splits with A inside S.
  std::map<std::uint64_t, std::size_t> ref_index;
  for (const auto& g : enumerate_yes(n, r)) {
    if (!fixes_edges(g, rho.h)) continue;
    const auto w = count_separating_partitions(g, rho.a, rho.b);
    if (w == 0) continue;
    ref_index[packer.pack(g.table())] = rep.cells.size();
    rep.cells.push_back({g, 0, w});
  }
  rep.reference_size = rep.cells.size();

  const std::size_t k = rho.a.size() + rho.b.size();
  if (mode == MetagraphMode::kExhaustive) {
    if (n > 8 || r > 2) throw std::invalid_argument("metagraph: exhaustive mode needs N <= 8 and R <= 2");
    const auto size = metagraph_enumeration_size(rho, n, r);
    if (size > kMetagraphEnumerationCap)
      throw std::invalid_argument("metagraph: exhaustive enumeration of " + std::to_string(size) +
                                  " runs exceeds the cap");
    std::vector<std::uint32_t> seq(n);
    for (std::uint32_t v = 0; v < n; ++v) seq[v] = v;
    // Ordered k-prefixes of [n]: permutations of a k-subset.
    std::vector<std::uint32_t> all(n);
    for (std::uint32_t v = 0; v < n; ++v) all[v] = v;
    for_each_subset(all, k, [&](const std::vector<std::uint32_t>& chosen) {
      std::vector<std::uint32_t> order = chosen;
      do {
        const std::vector<std::uint32_t> e(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(rho.a.size()));
        const std::vector<std::uint32_t> f(order.begin() + static_cast<std::ptrdiff_t>(rho.a.size()), order.end());
        std::vector<std::uint32_t> rest;
        for (std::uint32_t v = 0; v < n; ++v)
          if (std::find(order.begin(), order.end(), v) == order.end()) rest.push_back(v);
        std::vector<std::uint32_t> free_vertices;
        for (std::uint32_t v = 0; v < n; ++v)
          if (std::find(rho.a.begin(), rho.a.end(), v) == rho.a.end() &&
              std::find(rho.b.begin(), rho.b.end(), v) == rho.b.end())
            free_vertices.push_back(v);

        for_each_subset(rest, half - e.size(), [&](const std::vector<std::uint32_t>& extra) {
          std::vector<std::uint32_t> s = e, sbar = f;
          s.insert(s.end(), extra.begin(), extra.end());
          for (auto v : rest)
            if (std::find(extra.begin(), extra.end(), v) == extra.end()) sbar.push_back(v);
          std::sort(s.begin(), s.end());
          std::sort(sbar.begin(), sbar.end());
          const auto ms = all_matchings_on(s);
          const auto mb = all_matchings_on(sbar);
          const std::size_t per_row = ms.size() * mb.size();
          std::vector<std::size_t> choice(r, 0);
          while (true) {
            const auto g = oracle_from_sides(n, r, ms, mb, choice);
            std::vector<std::uint32_t> images = rest;  // sorted
            do {
              std::vector<std::uint32_t> pi(n), pi_inv(n);
              for (std::size_t i = 0; i < rho.a.size(); ++i) pi[rho.a[i]] = e[i];
              for (std::size_t i = 0; i < rho.b.size(); ++i) pi[rho.b[i]] = f[i];
              for (std::size_t i = 0; i < free_vertices.size(); ++i) pi[free_vertices[i]] = images[i];
              for (std::uint32_t v = 0; v < n; ++v) pi_inv[pi[v]] = v;
              ++counts[packer.pack(planted_table(g, pi, pi_inv, rho))];
              ++rep.runs;
            } while (std::next_permutation(images.begin(), images.end()));
            std::size_t c = 0;
            while (c < r && ++choice[c] == per_row) choice[c++] = 0;
            if (c == r) break;
          }
        });
      } while (std::next_permutation(order.begin(), order.end()));
    });
  } else {
    std::vector<std::uint32_t> verts(n);
    for (std::uint32_t v = 0; v < n; ++v) verts[v] = v;
    std::vector<std::uint32_t> table(n * r);
    for (std::uint64_t s = 0; s < samples; ++s) {
      shuffle(verts, rng);
      const std::vector<std::uint32_t> e(verts.begin(), verts.begin() + static_cast<std::ptrdiff_t>(rho.a.size()));
      const std::vector<std::uint32_t> f(verts.begin() + static_cast<std::ptrdiff_t>(rho.a.size()),
                                         verts.begin() + static_cast<std::ptrdiff_t>(k));
      // Labeled split S containing E and avoiding F, then matchings on each side.
      std::vector<std::uint32_t> rest(verts.begin() + static_cast<std::ptrdiff_t>(k), verts.end());
      shuffle(rest, rng);
      std::vector<std::uint32_t> side_s = e, side_b = f;
      for (std::size_t i = 0; i < rest.size(); ++i)
        (i < half - e.size() ? side_s : side_b).push_back(rest[i]);
      std::vector<std::uint32_t> row(n);
      for (std::size_t c = 0; c < r; ++c) {
        sample_matching_on(side_s, row, rng);
        sample_matching_on(side_b, row, rng);
        std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(c * n));
      }
      const GraphOracle g(n, r, table);
      const auto pi = sample_conditioned_relabel(n, rho, e, f, rng);
      ++counts[packer.pack(planted_table(g, pi.map(), pi.inverse().map(), rho))];
      ++rep.runs;
    }
  }

  rep.support_size = counts.size();
  for (const auto& [key, c] : counts) {
    auto it = ref_index.find(key);
    if (it == ref_index.end()) {
      rep.outside += c;
      continue;
    }
    rep.cells[it->second].count = c;
  }

  std::uint64_t ref_total = 0;
  for (const auto& c : rep.cells) ref_total += c.reference;
  rep.set_uniform = rep.outside == 0 && !rep.cells.empty();
  for (const auto& c : rep.cells)
    if (c.count == 0 || c.count != rep.cells.front().count) rep.set_uniform = false;

  if (mode == MetagraphMode::kExhaustive) {
    using Q = boost::rational<std::int64_t>;
    rep.exact_equal = rep.outside == 0 && rep.runs > 0;
    for (const auto& c : rep.cells) {
      const Q got(static_cast<std::int64_t>(c.count), static_cast<std::int64_t>(rep.runs));
      const Q want(static_cast<std::int64_t>(c.reference), static_cast<std::int64_t>(ref_total));
      if (got != want) rep.exact_equal = false;
    }
  } else {
    std::vector<std::uint64_t> obs;
    std::vector<double> probs;
    for (const auto& c : rep.cells) {
      obs.push_back(c.count);
      probs.push_back(static_cast<double>(c.reference) / static_cast<double>(ref_total));
    }
    if (rep.outside > 0) {
      rep.chi_square = INFINITY;
      rep.p_value = 0.0;
    } else if (obs.size() > 1) {
      const auto cs = chi_square(obs, probs);
      rep.chi_square = cs.statistic;
      rep.p_value = cs.p_value;
    }
  }
  return rep;
}

// phi regularity ----------------------------------------------------------------------

GraphOracle plant_edge(const GraphOracle& g, ColoredEdge e) {
  auto t = g.table();
  const std::size_t n = g.n();
  const auto x = g(e.r, e.u), y = g(e.r, e.v);
  if (x == e.v) return g;
  auto set = [&](std::uint32_t a, std::uint32_t b) {
    t[e.r * n + a] = b;
    t[e.r * n + b] = a;
  };
  set(e.u, e.v);
  set(x, y);
  return GraphOracle(n, g.r(), std::move(t));
}

RegularityReport regularity_test(const GraphFixingData& rho, ColoredEdge e, std::size_t n,
                                 std::size_t r) {
  const auto next = rho.with_edge(e);
  next.validate(n, r);
  RegularityReport rep;
  std::map<GraphOracle, std::uint64_t> preimages;
  std::vector<GraphOracle> domain;
  for (const auto& g : enumerate_yes(n, r)) {
    if (in_yes_rho(g, rho)) domain.push_back(g);
    if (in_yes_rho(g, next)) preimages[g] = 0;
  }
  rep.domain = domain.size();
  rep.codomain = preimages.size();
  rep.image_inside = true;
  for (const auto& g : domain) {
    auto it = preimages.find(plant_edge(g, e));
    if (it == preimages.end()) {
      rep.image_inside = false;
      continue;
    }
    ++it->second;
  }
  rep.min_preimages = UINT64_MAX;
  for (const auto& [g, c] : preimages) {
    rep.min_preimages = std::min(rep.min_preimages, c);
    rep.max_preimages = std::max(rep.max_preimages, c);
  }
  if (preimages.empty()) rep.min_preimages = 0;
  rep.regular = rep.image_inside && !preimages.empty() && rep.min_preimages == rep.max_preimages &&
                rep.min_preimages > 0;
  return rep;
}

// Walk closeness ------------------------------------------------------------------------

WalkClosenessReport walk_closeness(const YesInstance& g, std::size_t na, std::size_t nb,
                                   std::size_t samples, Rng& rng) {
  const auto& f = g.oracle;
  const std::size_t n = f.n(), half = n / 2;
  if (na == 0 || nb == 0 || na > half || nb > half) throw std::invalid_argument("walk_closeness: bad target counts");
  std::vector<std::uint32_t> s, sbar, rank(n);
  for (std::uint32_t v = 0; v < n; ++v) {
    auto& side = g.side[v] ? s : sbar;
    rank[v] = static_cast<std::uint32_t>(side.size());
    side.push_back(v);
  }
  if (s.size() != half) throw std::invalid_argument("walk_closeness: side is not balanced");

  auto sub_slem = [&](const std::vector<std::uint32_t>& side) {
    std::vector<std::uint32_t> t(half * f.r());
    for (std::size_t c = 0; c < f.r(); ++c)
      for (std::size_t i = 0; i < half; ++i) t[c * half + i] = rank[f(c, side[i])];
    const LazyChain chain(GraphOracle(half, f.r(), std::move(t)));
    if (!chain.connected()) throw std::invalid_argument("walk_closeness: a side is not connected");
    return chain.slem();
  };
  WalkClosenessReport rep;
  rep.n = n;
  rep.slem = std::max(sub_slem(s), sub_slem(sbar));
  rep.spacing = walk_spacing(n, na + nb, rep.slem);

  const std::size_t k = na + nb;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < k; ++i) cells *= half;
  if (cells > 10'000'000) throw std::invalid_argument("walk_closeness: too many cells");
  std::vector<std::uint64_t> hist(cells, 0);
  for (std::size_t t = 0; t < samples; ++t) {
    std::size_t cell = 0;
    for (const auto* side : {&s, &sbar}) {
      const std::size_t count = side == &s ? na : nb;
      const auto start = (*side)[rng.below(half)];
      const auto w = lazy_walk(f, start, count * rep.spacing, rng, rep.spacing);
      for (auto v : w.spaced_samples) cell = cell * half + rank[v];
    }
    ++hist[cell];
  }

  double pe = 1.0;
  for (std::size_t i = 0; i < na; ++i) pe /= static_cast<double>(half - i);
  for (std::size_t i = 0; i < nb; ++i) pe /= static_cast<double>(half - i);
  double tv = 0.0, sigma = 0.0;
  std::vector<std::size_t> digits(k);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rest = cell;
    for (std::size_t i = k; i-- > 0;) {
      digits[i] = rest % half;
      rest /= half;
    }
    std::set<std::size_t> da(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(na));
    std::set<std::size_t> db(digits.begin() + static_cast<std::ptrdiff_t>(na), digits.end());
    const double p = (da.size() == na && db.size() == nb) ? pe : 0.0;
    const double emp = static_cast<double>(hist[cell]) / static_cast<double>(samples);
    tv += std::abs(emp - p);
    sigma += std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  }
  rep.empirical_tv = 0.5 * tv;
  rep.sigma = 0.5 * sigma;
  const double nd = static_cast<double>(n);
  rep.bound = static_cast<double>(k) * nd * std::pow(rep.slem, static_cast<double>(rep.spacing)) +
              static_cast<double>(na * (na - 1) + nb * (nb - 1)) / nd;
  return rep;
}

}  // namespace qlab
