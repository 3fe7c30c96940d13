#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qlab/perm.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"

namespace qlab {

// F : [R] x {0, 1} x [N] -> [N]. b = 0 is the forward table, b = 1 the inverse.
// Proper r carry two N/2-cycles on S and its complement, improper r one N-cycle.
struct NoisyPermOracle {
  std::size_t n = 0;
  std::size_t r = 0;
  std::vector<Permutation> forward;
  std::vector<Permutation> inverse;
  std::vector<std::uint8_t> proper;  // Z membership per r
  std::vector<std::uint8_t> side;    // 1 on S

  std::uint32_t operator()(std::size_t rr, int b, std::size_t x) const {
    return b == 0 ? forward[rr](x) : inverse[rr](x);
  }
  std::size_t proper_count() const;
  // Throws std::invalid_argument when tables are not mutually inverse on proper r
  // or the cycle structure disagrees with the proper flags.
  void validate() const;
  // max over (x, b) of the TV distance between F(., b, x) over r and uniform on [N].
  double uniformity_delta() const;
};

NoisyPermOracle sample_game_oracle(std::size_t n, std::size_t r, Rng& rng);

// Input (r, x); direction selects b.
class NoisyQueryOracle : public QueryOracle {
 public:
  explicit NoisyQueryOracle(const NoisyPermOracle& f) : f_(f) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;

 private:
  const NoisyPermOracle& f_;
};

struct InteractiveAcceptance {
  double circuit = 0.0;
  double operator_form = 0.0;
  double balancedness = 0.0;
  double invariance = 0.0;
  std::size_t invariance_queries = 0;
};

// (2I + P + P^T) / 4 for the permutation matrix P of F(r*, 0, .).
Eigen::MatrixXd invariance_operator(const Permutation& p);
// 1/2 (I - J/N) + 1/2 invariance_operator(F(r*, 0, .)).
Eigen::MatrixXd interactive_acceptance_operator(const NoisyPermOracle& f, std::size_t r_star);

InteractiveAcceptance interactive_qma_verify(const NoisyPermOracle& f, std::size_t r_star,
                                             const StateVector& witness);
double interactive_max_acceptance(const NoisyPermOracle& f, std::size_t r_star);
// 1 - second eigenvalue of the invariance operator.
double invariance_gap(const Permutation& p);

// Adversary-method counts ---------------------------------------------------------------

// Yes instances are (sigma, S): sigma a product of N/2-cycles on S and its
// complement, with S labeled. A yes instance relates to pi = sigma o (a b) for
// a in S, b outside S, which is a single N-cycle. Entries are the 2N forward
// and inverse table positions.
struct RelationCounts {
  std::size_t n = 0;
  std::uint64_t yes_instances = 0;
  std::uint64_t no_instances = 0;   // no instances reached by the relation
  std::uint64_t m_min = 0, m_max = 0;            // related no instances per yes
  std::uint64_t m_prime_min = 0, m_prime_max = 0;  // related yes instances per no
  std::uint64_t m_prime_unordered = 0;  // m' with S and its complement identified
  std::uint64_t l_x = 0;  // max related no instances differing at one entry of a yes
  std::uint64_t l_y = 0;  // max related yes instances differing at one entry of a no
  std::uint64_t l_max = 0;  // max of l_x * l_y over related pairs and differing entries
  double bound = 0.0;       // sqrt(m m' / l_max)
  bool matches_expected = false;  // m = (N/2)^2, m' = N, every N-cycle reached

  std::string to_csv() const;
};

inline constexpr std::size_t kMaxAdversaryN = 10;

RelationCounts adversary_counts(std::size_t n);

// Multi-instance game -----------------------------------------------------------------

// Classical query access for one round with a hard budget. Past the budget
// every query returns nullopt and the round is forfeited.
class GameOracleHandle {
 public:
  GameOracleHandle(const NoisyPermOracle& f, std::size_t budget) : f_(f), budget_(budget) {}
  std::optional<std::uint32_t> query(std::size_t r, int b, std::size_t x);
  std::size_t queries() const { return queries_; }
  std::size_t budget() const { return budget_; }
  bool exceeded() const { return exceeded_; }
  std::size_t n() const { return f_.n; }
  std::size_t r() const { return f_.r; }

 private:
  const NoisyPermOracle& f_;
  std::size_t budget_;
  std::size_t queries_ = 0;
  bool exceeded_ = false;
};

// State carried across rounds is the strategy object itself.
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  // Called once per transcript before round 0.
  virtual void reset() {}
  // Guess whether F(challenge, .) is proper (two cycles).
  virtual bool play(std::size_t round, std::size_t challenge, GameOracleHandle& oracle, Rng& rng) = 0;
  // Certified bound on Pr[B_i = 1 | earlier outcomes] for rounds i < k.
  virtual double certified_delta(std::size_t n, std::size_t r, std::size_t k) const = 0;
};

class CoinFlipAdversary : public Adversary {
 public:
  std::string name() const override { return "coin-flip"; }
  bool play(std::size_t, std::size_t, GameOracleHandle&, Rng& rng) override { return rng.coin(); }
  double certified_delta(std::size_t, std::size_t, std::size_t) const override { return 0.5; }
};

// With probability p walks N/2 steps from vertex 0 and answers exactly,
// otherwise flips a coin.
class NoisyWalkerAdversary : public Adversary {
 public:
  explicit NoisyWalkerAdversary(double p) : p_(p) {}
  std::string name() const override { return "noisy-walker"; }
  bool play(std::size_t, std::size_t challenge, GameOracleHandle& oracle, Rng& rng) override;
  double certified_delta(std::size_t, std::size_t, std::size_t) const override { return 0.5 * (1.0 + p_); }

 private:
  double p_;
};

// Flips a coin on a new challenge and repeats its earlier guess on a repeated one.
// Conditioned on earlier wins a repeat is always won, so delta = 1/2 + (k-1)/(2R).
class MemoryAdversary : public Adversary {
 public:
  std::string name() const override { return "memory"; }
  void reset() override { guesses_.clear(); }
  bool play(std::size_t, std::size_t challenge, GameOracleHandle&, Rng& rng) override;
  double certified_delta(std::size_t, std::size_t r, std::size_t k) const override {
    return 0.5 + static_cast<double>(k - 1) / (2.0 * static_cast<double>(r));
  }

 private:
  std::vector<std::pair<std::size_t, bool>> guesses_;
};

// Walks the full cycle, which needs more queries than the budget allows.
class BudgetExceederAdversary : public Adversary {
 public:
  std::string name() const override { return "budget-exceeder"; }
  bool play(std::size_t, std::size_t challenge, GameOracleHandle& oracle, Rng& rng) override;
  double certified_delta(std::size_t, std::size_t, std::size_t) const override { return 0.0; }
};

std::unique_ptr<Adversary> make_adversary(const std::string& name, double p = 0.5);

struct GameRound {
  std::size_t challenge = 0;
  bool proper = false;
  bool guess = false;
  bool outcome = false;
  bool forfeited = false;
  std::size_t queries = 0;
};

struct GameTranscript {
  std::size_t k = 0;
  std::size_t witness_length = 0;
  std::vector<GameRound> rounds;

  bool won() const;
  // One JSON object per round, newline separated.
  std::string to_json_lines() const;
};

// Per-round query budget defaults to N/2, enough for one half-cycle walk.
GameTranscript run_multi_instance(Adversary& adversary, std::size_t n, std::size_t r, std::size_t k,
                                  Rng& rng, std::optional<std::size_t> budget = std::nullopt);

struct MultiInstanceStats {
  std::size_t trials = 0;
  std::size_t wins = 0;
  double rate = 0.0;
  double delta = 0.0;
  double bound = 0.0;  // delta^k
  double sigma = 0.0;  // sqrt(bound (1 - bound) / trials)
  bool within() const { return rate <= bound + 3.0 * sigma; }
};

MultiInstanceStats multi_instance_trials(Adversary& adversary, std::size_t n, std::size_t r,
                                         std::size_t k, std::size_t trials, Rng& rng);

// Witness guessing ------------------------------------------------------------------

struct WitnessBound {
  double per_round = 0.0;  // 2^{W/k} (1/2 + 1/sqrt N + c k / N)
  double cap = 0.0;        // 1/2 + 1/sqrt N + c k/N + W/(2k) + (1/sqrt N + c k/N) W/k
  double remainder = 0.0;  // cap - per_round, nonnegative when W/k <= 1
  bool flagged = false;    // W/k > 1, where 2^{W/k} <= 1 + W/k fails
};

WitnessBound witness_guess_bound(double w, double k, double n, double c = 1.0);
// Integer k in [max(W, 1), k_max] minimizing the cap.
std::size_t witness_turning_point(double w, double n, double c, std::size_t k_max);

}  // namespace qlab
