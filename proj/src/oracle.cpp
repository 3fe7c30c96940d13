#include "qlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace qlab {

GraphOracle::GraphOracle(std::size_t n, std::size_t r, std::vector<std::uint32_t> table)
    : n_(n), r_(r), table_(std::move(table)) {
  if (n == 0 || n % 2 != 0) throw std::invalid_argument("GraphOracle: N must be even and positive");
  if (r == 0) throw std::invalid_argument("GraphOracle: R must be positive");
  if (table_.size() != n * r) throw std::invalid_argument("GraphOracle: table has wrong size");
  for (std::size_t c = 0; c < r; ++c) {
    for (std::size_t x = 0; x < n; ++x) {
      const auto y = table_[c * n + x];
      if (y >= n || y == x || table_[c * n + y] != x) {
        throw std::invalid_argument("GraphOracle: row " + std::to_string(c) +
                                    " is not a perfect matching");
      }
    }
  }
}

void RawPermutations::validate() const {
  const auto n = x.size();
  if (n == 0 || n % 4 != 0) throw std::invalid_argument("RawPermutations: N must be a positive multiple of 4");
  if (y.size() != z.size() || y.empty())
    throw std::invalid_argument("RawPermutations: need R >= 1 Y and Z permutations");
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (y[r].size() != n / 2 || z[r].size() != n / 2)
      throw std::invalid_argument("RawPermutations: Y_r, Z_r must act on [N/2]");
  }
}

namespace {

void check_components_shape(std::size_t n, std::size_t r) {
  if (n == 0 || n % 4 != 0) throw std::invalid_argument("N must be a positive multiple of 4");
  if (r == 0) throw std::invalid_argument("R must be positive");
}

std::vector<std::uint32_t> iota_vec(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

}  // namespace

YesInstance sample_yes(std::size_t n, std::size_t r, Rng& rng) {
  check_components_shape(n, r);
  auto order = iota_vec(n);
  shuffle(order, rng);
  std::vector<std::uint32_t> s(order.begin(), order.begin() + n / 2);
  std::vector<std::uint32_t> sbar(order.begin() + n / 2, order.end());
  std::sort(s.begin(), s.end());
  std::sort(sbar.begin(), sbar.end());
  std::vector<std::uint32_t> table(n * r);
  std::vector<std::uint32_t> row(n);
  for (std::size_t c = 0; c < r; ++c) {
    sample_matching_on(s, row, rng);
    sample_matching_on(sbar, row, rng);
    std::copy(row.begin(), row.end(), table.begin() + c * n);
  }
  YesInstance out{GraphOracle(n, r, std::move(table)), std::vector<std::uint8_t>(n, 0)};
  for (auto v : s) out.side[v] = 1;
  return out;
}

GraphOracle sample_matchings(std::size_t n, std::size_t r, Rng& rng) {
  if (n == 0 || n % 2 != 0) throw std::invalid_argument("sample_matchings: N must be even");
  if (r == 0) throw std::invalid_argument("sample_matchings: R must be positive");
  const auto verts = iota_vec(n);
  std::vector<std::uint32_t> table(n * r);
  std::vector<std::uint32_t> row(n);
  for (std::size_t c = 0; c < r; ++c) {
    sample_matching_on(verts, row, rng);
    std::copy(row.begin(), row.end(), table.begin() + c * n);
  }
  return GraphOracle(n, r, std::move(table));
}

NoInstance sample_no(std::size_t n, std::size_t r, double delta, Rng& rng, std::size_t budget) {
  for (std::size_t attempt = 1; attempt <= budget; ++attempt) {
    auto f = sample_matchings(n, r, rng);
    const double gap = spectral_gap(f);
    if (gap >= delta && gap > kConnectedTolerance) return {std::move(f), attempt, gap};
  }
  throw std::runtime_error("sample_no: no " + std::to_string(delta) + "-expander among " +
                           std::to_string(budget) + " attempts at N=" + std::to_string(n) +
                           ", R=" + std::to_string(r));
}

RawPermutations sample_raw(std::size_t n, std::size_t r, Rng& rng) {
  check_components_shape(n, r);
  RawPermutations p;
  p.x = sample_uniform(n, rng);
  for (std::size_t c = 0; c < r; ++c) {
    p.y.push_back(sample_uniform(n / 2, rng));
    p.z.push_back(sample_uniform(n / 2, rng));
  }
  return p;
}

std::uint32_t f_p_eval(const RawPermutations& p, std::size_t r, std::size_t x) {
  const std::size_t half = p.n() / 2;
  // Which half of X's domain x comes from selects Y_r or Z_r.
  const std::size_t a = p.x.inverse()(x);
  const bool first = a < half;
  const Permutation& w = first ? p.y[r] : p.z[r];
  const std::size_t u = first ? a : a - half;
  const std::size_t s = w.inverse()(u);
  const std::size_t v = w(s ^ 1u);
  return p.x(first ? v : v + half);
}

GraphOracle raw_to_oracle(const RawPermutations& p) {
  p.validate();
  const std::size_t n = p.n();
  const std::size_t half = n / 2;
  std::vector<std::uint32_t> table(n * p.r());
  for (std::size_t r = 0; r < p.r(); ++r) {
    for (std::size_t s = 0; s < half; s += 2) {
      const auto y0 = p.x(p.y[r](s)), y1 = p.x(p.y[r](s + 1));
      table[r * n + y0] = y1;
      table[r * n + y1] = y0;
      const auto z0 = p.x(p.z[r](s) + half), z1 = p.x(p.z[r](s + 1) + half);
      table[r * n + z0] = z1;
      table[r * n + z1] = z0;
    }
  }
  return GraphOracle(n, p.r(), std::move(table));
}

std::vector<GraphOracle> enumerate_yes(std::size_t n, std::size_t r) {
  check_components_shape(n, r);
  std::set<std::vector<std::uint32_t>> tables;
  // S always contains vertex 0; the complement covers the other labeling.
  std::vector<bool> pick(n - 1, false);
  std::fill(pick.begin(), pick.begin() + (n / 2 - 1), true);
  do {
    std::vector<std::uint32_t> s{0}, sbar;
    for (std::size_t i = 0; i + 1 < n; ++i) (pick[i] ? s : sbar).push_back(static_cast<std::uint32_t>(i + 1));
    const auto ms = all_matchings_on(s);
    const auto mb = all_matchings_on(sbar);
    const std::size_t per_row = ms.size() * mb.size();
    std::vector<std::size_t> choice(r, 0);
    while (true) {
      std::vector<std::uint32_t> table(n * r);
      for (std::size_t c = 0; c < r; ++c) {
        const auto& m1 = ms[choice[c] / mb.size()];
        const auto& m2 = mb[choice[c] % mb.size()];
        for (const auto* m : {&m1, &m2}) {
          for (auto [a, b] : *m) {
            table[c * n + a] = b;
            table[c * n + b] = a;
          }
        }
      }
      tables.insert(std::move(table));
      std::size_t c = 0;
      while (c < r && ++choice[c] == per_row) choice[c++] = 0;
      if (c == r) break;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  std::vector<GraphOracle> out;
  out.reserve(tables.size());
  for (const auto& t : tables) out.emplace_back(n, r, t);
  return out;
}

std::vector<std::uint32_t> components(const GraphOracle& f) {
  const std::size_t n = f.n();
  std::vector<std::uint32_t> parent = iota_vec(n);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t c = 0; c < f.r(); ++c)
    for (std::uint32_t x = 0; x < n; ++x) parent[find(x)] = find(f(c, x));
  std::vector<std::uint32_t> label(n, UINT32_MAX), root_label(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (std::uint32_t x = 0; x < n; ++x) {
    const auto root = find(x);
    if (root_label[root] == UINT32_MAX) root_label[root] = next++;
    label[x] = root_label[root];
  }
  return label;
}

std::size_t component_count(const GraphOracle& f) {
  const auto label = components(f);
  return label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
}

namespace {

struct ComponentView {
  std::vector<std::uint32_t> label;
  std::vector<std::size_t> size;
};

ComponentView component_view(const GraphOracle& f) {
  ComponentView v{components(f), {}};
  for (auto l : v.label) {
    if (l >= v.size.size()) v.size.resize(l + 1, 0);
    ++v.size[l];
  }
  return v;
}

}  // namespace

std::uint64_t count_separating_partitions(const GraphOracle& f, std::span<const std::uint32_t> a,
                                          std::span<const std::uint32_t> b) {
  const auto view = component_view(f);
  const std::size_t c = view.size.size();
  // forced[i]: 1 = must be in S, 2 = must be outside, 3 = contradiction.
  std::vector<int> forced(c, 0);
  for (auto v : a) forced[view.label[v]] |= 1;
  for (auto v : b) forced[view.label[v]] |= 2;
  std::size_t base = 0;
  std::vector<std::size_t> free_sizes;
  for (std::size_t i = 0; i < c; ++i) {
    if (forced[i] == 3) return 0;
    if (forced[i] == 1) base += view.size[i];
    if (forced[i] == 0) free_sizes.push_back(view.size[i]);
  }
  const std::size_t target = f.n() / 2;
  if (base > target) return 0;
  // Subset-sum count over the free components.
  std::vector<std::uint64_t> ways(target - base + 1, 0);
  ways[0] = 1;
  for (auto s : free_sizes)
    for (std::size_t t = ways.size(); t-- > s;) ways[t] += ways[t - s];
  return ways.back();
}

std::optional<std::vector<std::uint8_t>> balanced_partition(const GraphOracle& f) {
  const auto view = component_view(f);
  const std::size_t c = view.size.size();
  const std::size_t target = f.n() / 2;
  // reach[i][t]: can the first i components hit size t.
  std::vector<std::vector<bool>> reach(c + 1, std::vector<bool>(target + 1, false));
  reach[0][0] = true;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t t = 0; t <= target; ++t) {
      if (!reach[i][t]) continue;
      reach[i + 1][t] = true;
      if (t + view.size[i] <= target) reach[i + 1][t + view.size[i]] = true;
    }
  }
  if (!reach[c][target]) return std::nullopt;
  std::vector<bool> take(c, false);
  std::size_t t = target;
  for (std::size_t i = c; i-- > 0;) {
    if (reach[i][t]) continue;
    take[i] = true;
    t -= view.size[i];
  }
  std::vector<std::uint8_t> side(f.n(), 0);
  for (std::size_t v = 0; v < f.n(); ++v) side[v] = take[view.label[v]] ? 1 : 0;
  return side;
}

bool is_yes_instance(const GraphOracle& f) { return balanced_partition(f).has_value(); }

Eigen::MatrixXi adjacency(const GraphOracle& f) {
  const auto n = static_cast<Eigen::Index>(f.n());
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t c = 0; c < f.r(); ++c)
    for (std::size_t x = 0; x < f.n(); ++x) a(static_cast<Eigen::Index>(x), f(c, x)) += 1;
  return a;
}

SpectralReport spectral(const GraphOracle& f) {
  SpectralReport rep;
  rep.adjacency = adjacency(f);
  const auto n = rep.adjacency.rows();
  rep.laplacian = Eigen::MatrixXd::Identity(n, n) -
                  rep.adjacency.cast<double>() / static_cast<double>(f.r());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rep.laplacian, Eigen::EigenvaluesOnly);
  rep.eigenvalues = es.eigenvalues();
  rep.gap = n > 1 ? rep.eigenvalues(1) : 0.0;
  if (std::abs(rep.gap) < kConnectedTolerance) rep.gap = std::max(rep.gap, 0.0);
  rep.connected = rep.gap > kConnectedTolerance;
  return rep;
}

double spectral_gap(const GraphOracle& f) { return spectral(f).gap; }

WalkTrace lazy_walk(const GraphOracle& f, std::uint32_t start, std::size_t steps, Rng& rng,
                    std::size_t spacing) {
  if (start >= f.n()) throw std::invalid_argument("lazy_walk: start vertex out of range");
  WalkTrace w;
  w.vertices.reserve(steps + 1);
  w.vertices.push_back(start);
  std::uint32_t cur = start;
  for (std::size_t i = 1; i <= steps; ++i) {
    if (rng.coin()) {
      cur = f(rng.below(f.r()), cur);
      ++w.queries;
    }
    w.vertices.push_back(cur);
    if (spacing > 0 && i % spacing == 0) w.spaced_samples.push_back(cur);
  }
  w.step_count = steps;
  return w;
}

LazyChain::LazyChain(const GraphOracle& f) : n_(f.n()) {
  const auto n = static_cast<Eigen::Index>(n_);
  p_ = 0.5 * (Eigen::MatrixXd::Identity(n, n) +
              adjacency(f).cast<double>() / static_cast<double>(f.r()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p_);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
  connected_ = component_count(f) == 1;
  if (connected_) {
    slem_ = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) slem_ = std::max(slem_, std::abs(evals_(i)));
  }
}

Eigen::MatrixXd LazyChain::deviation(std::size_t t) const {
  const auto n = static_cast<Eigen::Index>(n_);
  if (!connected_) {
    Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t i = 0; i < t; ++i) pt = pt * p_;
    return pt - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  }
  // The top eigenpair (1, uniform/sqrt(N)) is exactly the J/N term, so drop it.
  Eigen::VectorXd powered(n);
  for (Eigen::Index i = 0; i < n; ++i)
    powered(i) = i + 1 == n ? 0.0 : std::pow(evals_(i), static_cast<double>(t));
  return evecs_ * powered.asDiagonal() * evecs_.transpose();
}

std::vector<double> LazyChain::endpoint_distribution(std::uint32_t start, std::size_t t) const {
  const Eigen::MatrixXd d = deviation(t);
  std::vector<double> out(n_);
  for (std::size_t v = 0; v < n_; ++v)
    out[v] = 1.0 / static_cast<double>(n_) + d(start, static_cast<Eigen::Index>(v));
  return out;
}

double LazyChain::endpoint_tv(std::uint32_t start, std::size_t t) const {
  const Eigen::MatrixXd d = deviation(t);
  return 0.5 * d.row(start).cwiseAbs().sum();
}

double LazyChain::spaced_joint_tv(std::uint32_t start, std::size_t k, std::size_t t) const {
  if (k == 0) return 0.0;
  const Eigen::MatrixXd d = deviation(t);
  const double inv_n = 1.0 / static_cast<double>(n_);
  // dev over prefixes (e_1..e_j): joint minus uniform; prefix index encodes e_j last.
  std::vector<double> dev(n_);
  for (std::size_t e = 0; e < n_; ++e) dev[e] = d(start, static_cast<Eigen::Index>(e));
  double base = inv_n;
  for (std::size_t j = 2; j <= k; ++j) {
    std::vector<double> next(dev.size() * n_);
    for (std::size_t prefix = 0; prefix < dev.size(); ++prefix) {
      const auto last = static_cast<Eigen::Index>(prefix % n_);
      for (std::size_t e = 0; e < n_; ++e) {
        const double step = d(last, static_cast<Eigen::Index>(e));
        next[prefix * n_ + e] = dev[prefix] * (inv_n + step) + base * step;
      }
    }
    dev = std::move(next);
    base *= inv_n;
  }
  double s = 0.0;
  for (double v : dev) s += std::abs(v);
  return 0.5 * s;
}

}  // namespace qlab
