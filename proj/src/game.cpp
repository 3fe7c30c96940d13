#include "qlab/game.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Dense>
#include <json.hpp>

namespace qlab {

// Oracle ------------------------------------------------------------------------------

std::size_t NoisyPermOracle::proper_count() const {
  return static_cast<std::size_t>(std::count(proper.begin(), proper.end(), 1));
}

void NoisyPermOracle::validate() const {
  if (n < 2 || n % 2) throw std::invalid_argument("game oracle: N must be even");
  if (forward.size() != r || inverse.size() != r || proper.size() != r || side.size() != n)
    throw std::invalid_argument("game oracle: table shapes disagree");
  if (static_cast<std::size_t>(std::count(side.begin(), side.end(), 1)) != n / 2)
    throw std::invalid_argument("game oracle: S must have N/2 elements");
  for (std::size_t rr = 0; rr < r; ++rr) {
    if (forward[rr].size() != n || inverse[rr].size() != n)
      throw std::invalid_argument("game oracle: table of the wrong size");
    if (!proper[rr]) {
      if (cycle_type(forward[rr]) != CycleType{n})
        throw std::invalid_argument("game oracle: improper r is not an N-cycle");
      continue;
    }
    if (compose(forward[rr], inverse[rr]) != Permutation::identity(n))
      throw std::invalid_argument("game oracle: proper r tables are not mutually inverse");
    if (cycle_type(forward[rr]) != CycleType{n / 2, n / 2})
      throw std::invalid_argument("game oracle: proper r is not two N/2-cycles");
    for (std::size_t x = 0; x < n; ++x)
      if (side[x] != side[forward[rr](x)])
        throw std::invalid_argument("game oracle: proper r crosses the partition");
  }
}

double NoisyPermOracle::uniformity_delta() const {
  double worst = 0.0;
  std::vector<std::size_t> counts(n);
  for (int b = 0; b < 2; ++b) {
    for (std::size_t x = 0; x < n; ++x) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t rr = 0; rr < r; ++rr) ++counts[(*this)(rr, b, x)];
      double tv = 0.0;
      for (auto c : counts)
        tv += std::abs(static_cast<double>(c) / static_cast<double>(r) - 1.0 / static_cast<double>(n));
      worst = std::max(worst, 0.5 * tv);
    }
  }
  return worst;
}

NoisyPermOracle sample_game_oracle(std::size_t n, std::size_t r, Rng& rng) {
  if (n < 2 || n % 2) throw std::invalid_argument("sample_game_oracle: N must be even");
  if (r == 0) throw std::invalid_argument("sample_game_oracle: R must be positive");
  NoisyPermOracle f;
  f.n = n;
  f.r = r;
  std::vector<std::uint32_t> verts(n);
  for (std::uint32_t v = 0; v < n; ++v) verts[v] = v;
  shuffle(verts, rng);
  f.side.assign(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) f.side[verts[i]] = 1;
  std::vector<std::uint32_t> s, sbar;
  for (std::uint32_t v = 0; v < n; ++v) (f.side[v] ? s : sbar).push_back(v);

  f.proper.resize(r);
  for (std::size_t rr = 0; rr < r; ++rr) f.proper[rr] = rng.coin() ? 1 : 0;
  for (std::size_t rr = 0; rr < r; ++rr) {
    Permutation p;
    if (f.proper[rr]) {
      std::vector<std::uint32_t> map(n);
      sample_cycle_on(s, map, rng);
      sample_cycle_on(sbar, map, rng);
      p = Permutation(std::move(map));
    } else {
      p = sample_single_cycle(n, rng);
    }
    f.inverse.push_back(p.inverse());
    f.forward.push_back(std::move(p));
  }
  return f;
}

std::optional<std::uint32_t> NoisyQueryOracle::evaluate(std::span<const std::size_t> input,
                                                        Direction dir) const {
  if (input.size() != 2) throw std::invalid_argument("NoisyQueryOracle: expected (r, x)");
  if (input[0] >= f_.r || input[1] >= f_.n) return std::nullopt;
  return f_(input[0], dir == Direction::kForward ? 0 : 1, input[1]);
}

// Verifier ------------------------------------------------------------------------------

Eigen::MatrixXd invariance_operator(const Permutation& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) pm(p(static_cast<std::size_t>(x)), x) = 1.0;
  return (2.0 * Eigen::MatrixXd::Identity(n, n) + pm + pm.transpose()) / 4.0;
}

Eigen::MatrixXd interactive_acceptance_operator(const NoisyPermOracle& f, std::size_t r_star) {
  if (r_star >= f.r) throw std::invalid_argument("interactive verifier: r* out of range");
  const auto n = static_cast<Eigen::Index>(f.n);
  const Eigen::MatrixXd balanced =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return 0.5 * balanced + 0.5 * invariance_operator(f.forward[r_star]);
}

InteractiveAcceptance interactive_qma_verify(const NoisyPermOracle& f, std::size_t r_star,
                                             const StateVector& witness) {
  if (witness.size() != f.n) throw std::invalid_argument("interactive verifier: witness needs N amplitudes");
  const auto m = interactive_acceptance_operator(f, r_star);
  InteractiveAcceptance out;
  out.balancedness = balancedness_circuit(witness);
  out.invariance = invariance_circuit(NoisyQueryOracle(f), f.r, r_star, witness, &out.invariance_queries);
  out.circuit = 0.5 * out.balancedness + 0.5 * out.invariance;
  const auto& a = witness.amplitudes();
  Complex s = 0.0;
  for (std::size_t x = 0; x < f.n; ++x)
    for (std::size_t y = 0; y < f.n; ++y)
      s += std::conj(a[x]) * m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * a[y];
  out.operator_form = s.real();
  return out;
}

double interactive_max_acceptance(const NoisyPermOracle& f, std::size_t r_star) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(interactive_acceptance_operator(f, r_star),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double invariance_gap(const Permutation& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(invariance_operator(p), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  if (ev.size() < 2) return 0.0;
  return ev(ev.size() - 1) - ev(ev.size() - 2);
}

// Adversary counts ------------------------------------------------------------------------

namespace {

std::uint64_t pack_perm(const std::vector<std::uint32_t>& p) {
  std::uint64_t k = 0;
  for (auto v : p) k = (k << 4) | v;
  return k;
}

struct NoRecord {
  std::uint32_t count = 0;
  std::array<std::uint16_t, 2 * kMaxAdversaryN> per_entry{};
};

// Calls f(sigma, sigma_inv, s_list, sbar_list) for each labeled yes instance.
template <typename F>
void for_each_yes(std::size_t n, F&& f) {
  const std::size_t half = n / 2;
  const auto cycles = all_single_cycles(half);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(half), true);
  do {
    std::vector<std::uint32_t> s, sbar;
    for (std::uint32_t v = 0; v < n; ++v) (pick[v] ? s : sbar).push_back(v);
    for (const auto& c1 : cycles) {
      for (const auto& c2 : cycles) {
        std::vector<std::uint32_t> sigma(n), inv(n);
        for (std::size_t i = 0; i < half; ++i) {
          sigma[s[i]] = s[c1(i)];
          sigma[sbar[i]] = sbar[c2(i)];
        }
        for (std::uint32_t v = 0; v < n; ++v) inv[sigma[v]] = v;
        f(sigma, inv, s, sbar);
      }
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

}  // namespace

std::string RelationCounts::to_csv() const {
  std::ostringstream os;
  os << "n,yes_instances,no_instances,m_min,m_max,m_prime_min,m_prime_max,m_prime_unordered,l_x,l_y,"
        "l_max,bound,matches_expected\n";
  os << n << ',' << yes_instances << ',' << no_instances << ',' << m_min << ',' << m_max << ','
     << m_prime_min << ',' << m_prime_max << ',' << m_prime_unordered << ',' << l_x << ',' << l_y
     << ',' << l_max << ',' << bound << ',' << (matches_expected ? 1 : 0) << '\n';
  return os.str();
}

RelationCounts adversary_counts(std::size_t n) {
  if (n < 4 || n % 2) throw std::invalid_argument("adversary_counts: N must be even and at least 4");
  if (n > kMaxAdversaryN) throw std::invalid_argument("adversary_counts: N too large to enumerate");
  RelationCounts rc;
  rc.n = n;
  rc.m_min = UINT64_MAX;
  std::unordered_map<std::uint64_t, NoRecord> no;

  // Related pi = sigma o (a b); differing entries: forward a, b and inverse sigma(a), sigma(b).
  auto relate = [&](const std::vector<std::uint32_t>& sigma, std::uint32_t a, std::uint32_t b,
                    std::vector<std::uint32_t>& pi) {
    pi = sigma;
    pi[a] = sigma[b];
    pi[b] = sigma[a];
    return std::array<std::size_t, 4>{a, b, n + sigma[a], n + sigma[b]};
  };

  std::vector<std::uint32_t> pi;
  for_each_yes(n, [&](const auto& sigma, const auto&, const auto& s, const auto& sbar) {
    ++rc.yes_instances;
    std::vector<std::uint64_t> per_entry(2 * n, 0);
    std::uint64_t m = 0;
    for (auto a : s) {
      for (auto b : sbar) {
        const auto diff = relate(sigma, a, b, pi);
        ++m;
        for (auto i : diff) ++per_entry[i];
        auto& rec = no[pack_perm(pi)];
        ++rec.count;
        for (auto i : diff) ++rec.per_entry[i];
      }
    }
    rc.m_min = std::min(rc.m_min, m);
    rc.m_max = std::max(rc.m_max, m);
    rc.l_x = std::max(rc.l_x, *std::max_element(per_entry.begin(), per_entry.end()));
  });

  rc.no_instances = no.size();
  rc.m_prime_min = UINT64_MAX;
  for (const auto& [key, rec] : no) {
    rc.m_prime_min = std::min<std::uint64_t>(rc.m_prime_min, rec.count);
    rc.m_prime_max = std::max<std::uint64_t>(rc.m_prime_max, rec.count);
    for (std::size_t i = 0; i < 2 * n; ++i) rc.l_y = std::max<std::uint64_t>(rc.l_y, rec.per_entry[i]);
  }

  // Second pass for l_max, which pairs entries of related instances.
  for_each_yes(n, [&](const auto& sigma, const auto&, const auto& s, const auto& sbar) {
    std::vector<std::uint64_t> per_entry(2 * n, 0);
    for (auto a : s)
      for (auto b : sbar)
        for (auto i : relate(sigma, a, b, pi)) ++per_entry[i];
    for (auto a : s) {
      for (auto b : sbar) {
        const auto diff = relate(sigma, a, b, pi);
        const auto& rec = no.at(pack_perm(pi));
        for (auto i : diff) rc.l_max = std::max<std::uint64_t>(rc.l_max, per_entry[i] * rec.per_entry[i]);
      }
    }
  });

  rc.m_prime_unordered = rc.m_prime_min / 2;
  rc.bound = std::sqrt(static_cast<double>(rc.m_min) * static_cast<double>(rc.m_prime_min) /
                       static_cast<double>(rc.l_max));
  const std::uint64_t half = n / 2;
  rc.matches_expected = rc.m_min == half * half && rc.m_max == half * half && rc.m_prime_min == n &&
                        rc.m_prime_max == n && rc.no_instances == factorial(n - 1);
  return rc;
}

// Multi-instance game --------------------------------------------------------------------

std::optional<std::uint32_t> GameOracleHandle::query(std::size_t r, int b, std::size_t x) {
  if (queries_ >= budget_) {
    exceeded_ = true;
    return std::nullopt;
  }
  if (r >= f_.r || x >= f_.n || (b != 0 && b != 1))
    throw std::invalid_argument("game oracle query out of range");
  ++queries_;
  return f_(r, b, x);
}

bool NoisyWalkerAdversary::play(std::size_t, std::size_t challenge, GameOracleHandle& oracle, Rng& rng) {
  if (rng.uniform() >= p_) return rng.coin();
  std::uint32_t x = 0;
  for (std::size_t i = 0; i < oracle.n() / 2; ++i) {
    const auto y = oracle.query(challenge, 0, x);
    if (!y) return rng.coin();
    x = *y;
  }
  return x == 0;
}

bool MemoryAdversary::play(std::size_t, std::size_t challenge, GameOracleHandle&, Rng& rng) {
  for (const auto& [c, g] : guesses_)
    if (c == challenge) return g;
  const bool g = rng.coin();
  guesses_.push_back({challenge, g});
  return g;
}

bool BudgetExceederAdversary::play(std::size_t, std::size_t challenge, GameOracleHandle& oracle, Rng&) {
  std::uint32_t x = 0;
  for (std::size_t i = 0; i < oracle.n(); ++i) {
    const auto y = oracle.query(challenge, 0, x);
    if (!y) break;
    x = *y;
  }
  // A full walk always returns to 0; the answer is irrelevant once the budget is blown.
  return true;
}

std::unique_ptr<Adversary> make_adversary(const std::string& name, double p) {
  if (name == "coin-flip") return std::make_unique<CoinFlipAdversary>();
  if (name == "noisy-walker") return std::make_unique<NoisyWalkerAdversary>(p);
  if (name == "memory") return std::make_unique<MemoryAdversary>();
  if (name == "budget-exceeder") return std::make_unique<BudgetExceederAdversary>();
  throw std::invalid_argument("unknown adversary: " + name);
}

bool GameTranscript::won() const {
  return std::all_of(rounds.begin(), rounds.end(), [](const GameRound& r) { return r.outcome; });
}

std::string GameTranscript::to_json_lines() const {
  std::string out;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const auto& r = rounds[i];
    nlohmann::json j{{"round", i},           {"challenge", r.challenge}, {"proper", r.proper},
                     {"guess", r.guess},     {"outcome", r.outcome},     {"forfeited", r.forfeited},
                     {"queries", r.queries}, {"witness_length", witness_length}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

GameTranscript run_multi_instance(Adversary& adversary, std::size_t n, std::size_t r, std::size_t k,
                                  Rng& rng, std::optional<std::size_t> budget) {
  if (k == 0) throw std::invalid_argument("run_multi_instance: k must be at least 1");
  const auto f = sample_game_oracle(n, r, rng);
  const std::size_t b = budget.value_or(n / 2);
  GameTranscript t;
  t.k = k;
  adversary.reset();
  for (std::size_t i = 0; i < k; ++i) {
    GameRound round;
    round.challenge = rng.below(r);
    round.proper = f.proper[round.challenge] != 0;
    GameOracleHandle handle(f, b);
    round.guess = adversary.play(i, round.challenge, handle, rng);
    round.queries = handle.queries();
    round.forfeited = handle.exceeded();
    round.outcome = !round.forfeited && round.guess == round.proper;
    t.rounds.push_back(round);
  }
  return t;
}

MultiInstanceStats multi_instance_trials(Adversary& adversary, std::size_t n, std::size_t r,
                                         std::size_t k, std::size_t trials, Rng& rng) {
  MultiInstanceStats st;
  st.trials = trials;
  for (std::size_t t = 0; t < trials; ++t)
    if (run_multi_instance(adversary, n, r, k, rng).won()) ++st.wins;
  st.rate = trials ? static_cast<double>(st.wins) / static_cast<double>(trials) : 0.0;
  st.delta = adversary.certified_delta(n, r, k);
  st.bound = std::pow(st.delta, static_cast<double>(k));
  st.sigma = trials ? std::sqrt(st.bound * (1.0 - st.bound) / static_cast<double>(trials)) : 0.0;
  return st;
}

// Witness guessing --------------------------------------------------------------------

WitnessBound witness_guess_bound(double w, double k, double n, double c) {
  if (w < 0 || !(k > 0) || !(n > 0) || c < 0)
    throw std::invalid_argument("witness_guess_bound: W >= 0, k > 0, N > 0, c >= 0 required");
  const double eta = 1.0 / std::sqrt(n) + c * k / n;
  const double ratio = w / k;
  WitnessBound b;
  b.per_round = std::exp2(ratio) * (0.5 + eta);
  b.cap = 0.5 + eta + w / (2.0 * k) + eta * ratio;
  b.remainder = b.cap - b.per_round;
  b.flagged = ratio > 1.0;
  return b;
}

std::size_t witness_turning_point(double w, double n, double c, std::size_t k_max) {
  const auto k_min = static_cast<std::size_t>(std::max(1.0, std::ceil(w)));
  if (k_max < k_min) throw std::invalid_argument("witness_turning_point: empty range");
  std::size_t best = k_min;
  double best_cap = witness_guess_bound(w, static_cast<double>(k_min), n, c).cap;
  for (std::size_t k = k_min + 1; k <= k_max; ++k) {
    const double cap = witness_guess_bound(w, static_cast<double>(k), n, c).cap;
    if (cap < best_cap) {
      best_cap = cap;
      best = k;
    }
  }
  return best;
}

}  // namespace qlab
