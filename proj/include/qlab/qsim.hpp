#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qlab/oracle.hpp"
#include "qlab/perm.hpp"
#include "qlab/rng.hpp"
#include "qlab/stats.hpp"

namespace qlab {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;

// Dense amplitudes over a product of registers. Register 0 is the most
// significant digit of the flat index.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::vector<std::size_t> dims);
  StateVector(std::vector<std::size_t> dims, std::vector<Complex> amplitudes);

  static StateVector basis(std::vector<std::size_t> dims, const std::vector<std::size_t>& values);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return amps_.size(); }
  std::size_t stride(std::size_t reg) const { return strides_[reg]; }
  std::vector<Complex>& amplitudes() { return amps_; }
  const std::vector<Complex>& amplitudes() const { return amps_; }
  Complex& operator[](std::size_t i) { return amps_[i]; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  std::size_t index(const std::vector<std::size_t>& values) const;
  std::size_t value(std::size_t flat, std::size_t reg) const {
    return (flat / strides_[reg]) % dims_[reg];
  }

  double norm_squared() const;
  // Throws std::logic_error if the norm drifted beyond tolerance.
  void check_normalized(double tol = kNormTolerance) const;
  double distance(const StateVector& other) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<Complex> amps_;
};

enum class Direction { kForward, kInverse };

// A classical function answered through reversible XOR queries. evaluate()
// returns nullopt for inputs outside the oracle's domain; the query then acts
// as the identity on that basis state.
class QueryOracle {
 public:
  virtual ~QueryOracle() = default;
  virtual std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                                Direction dir) const = 0;
  // Hooks bracketing one oracle call, for adapters that count calls.
  virtual void begin_call() const {}
  virtual void end_call() const {}
};

// Input (r, x) -> F(r, x). Matchings are involutions, so direction is ignored.
class GraphQueryOracle : public QueryOracle {
 public:
  explicit GraphQueryOracle(GraphOracle f) : f_(std::move(f)) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;
  const GraphOracle& graph() const { return f_; }

 private:
  GraphOracle f_;
};

// Input (x) -> bit x.
class BitStringOracle : public QueryOracle {
 public:
  explicit BitStringOracle(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;

 private:
  std::vector<std::uint8_t> bits_;
};

// Input (x) -> f(x) for an arbitrary table; the inverse direction is undefined.
class TableOracle : public QueryOracle {
 public:
  explicit TableOracle(std::vector<std::uint32_t> table) : table_(std::move(table)) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;
  const std::vector<std::uint32_t>& table() const { return table_; }

 private:
  std::vector<std::uint32_t> table_;
};

// Input (r, x) -> P_r(x) or P_r^{-1}(x). With a single component the input may be (x).
class PermTupleOracle : public QueryOracle {
 public:
  explicit PermTupleOracle(PermTuple p) : p_(std::move(p)), inv_(p_.inverse()) {}
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;
  const PermTuple& tuple() const { return p_; }

 private:
  PermTuple p_;
  PermTuple inv_;
};

// Permutation oracles for the raw tuple (X, Y_r, Z_r). The first input is a
// call tag fixed by the query step:
//   tag 0, (v)       -> X(v)                 inverse: X^{-1}(v)
//   tag 1, (r, a)    -> W^{-1}(a mod N/2)    W = Y_r if a < N/2 else Z_r
//   tag 2, (r, a, s) -> W(s xor 1) + N/2 [a >= N/2]
// Each evaluation is one call to one permutation.
class RawPermutationOracle : public QueryOracle {
 public:
  explicit RawPermutationOracle(RawPermutations p);
  std::optional<std::uint32_t> evaluate(std::span<const std::size_t> input,
                                        Direction dir) const override;
  const RawPermutations& raw() const { return p_; }

 private:
  RawPermutations p_;
  std::vector<Permutation> y_inv_, z_inv_;
  Permutation x_inv_;
};

struct Register {
  std::string name;
  std::size_t dim = 0;
};

struct UnitaryStep {
  std::vector<std::size_t> regs;
  Eigen::MatrixXcd matrix;
};
// Walsh-Hadamard on a power-of-two register.
struct HadamardStep {
  std::size_t reg = 0;
};
// DFT over the register dimension.
struct FourierStep {
  std::size_t reg = 0;
  bool inverse = false;
};
struct SwapStep {
  std::size_t a = 0;
  std::size_t b = 0;
  std::optional<std::size_t> control;
};
struct QueryStep {
  std::vector<std::size_t> inputs;
  std::optional<std::size_t> tag;  // constant prepended to the oracle input
  std::size_t target = 0;
  std::optional<std::size_t> control;  // active on value 1
  Direction direction = Direction::kForward;
};
using Step = std::variant<UnitaryStep, HadamardStep, FourierStep, SwapStep, QueryStep>;

// Accepting projector: joint values of `regs` in `values`, or outside them if
// `complement` is set.
struct AcceptSpec {
  std::vector<std::size_t> regs;
  std::vector<std::vector<std::size_t>> values;
  bool complement = false;
};

class QueryAlgorithm {
 public:
  QueryAlgorithm() = default;

  std::size_t add_register(std::string name, std::size_t dim);
  std::size_t reg(const std::string& name) const;
  const std::vector<Register>& registers() const { return registers_; }
  std::vector<std::size_t> dims() const;

  QueryAlgorithm& unitary(std::vector<std::size_t> regs, Eigen::MatrixXcd m);
  QueryAlgorithm& hadamard(std::size_t reg);
  QueryAlgorithm& fourier(std::size_t reg, bool inverse = false);
  QueryAlgorithm& swap(std::size_t a, std::size_t b, std::optional<std::size_t> control = {});
  QueryAlgorithm& query(std::vector<std::size_t> inputs, std::size_t target,
                        std::optional<std::size_t> control = {},
                        Direction dir = Direction::kForward);
  QueryAlgorithm& tagged_query(std::size_t tag, std::vector<std::size_t> inputs,
                               std::size_t target, Direction dir = Direction::kForward);
  // x -> F(prefix, x) in place, controlled: forward query into the ancilla,
  // inverse query to clear x, swap. Two oracle calls.
  QueryAlgorithm& controlled_inplace(std::size_t control, std::vector<std::size_t> prefix,
                                     std::size_t x, std::size_t ancilla);
  QueryAlgorithm& accept(AcceptSpec spec);

  const std::vector<Step>& steps() const { return steps_; }
  const AcceptSpec& accept_spec() const { return accept_; }
  std::size_t query_count() const;
  std::size_t budget() const { return budget_; }
  void set_budget(std::size_t t) { budget_ = t; }

  // Throws std::invalid_argument on inconsistent registers or a blown budget.
  void validate() const;

 private:
  std::vector<Register> registers_;
  std::vector<Step> steps_;
  AcceptSpec accept_;
  std::size_t budget_ = SIZE_MAX;
};

// Reversible F_P query built from permutation calls. Registers
// R, X (input), OUT (target), and ancillas A, S, V returned to 0.
QueryAlgorithm raw_query_algorithm(std::size_t n, std::size_t r);

// Per-query, per-input squared amplitude mass before each oracle call.
struct QueryWeightTrace {
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  StateVector state;
  double accept_probability = 0.0;
  std::size_t queries = 0;
  QueryWeightTrace weights;
};

RunResult run(const QueryAlgorithm& alg, const QueryOracle& oracle,
              const std::optional<StateVector>& initial = std::nullopt,
              bool record_weights = false);

void apply_step(StateVector& state, const Step& step, const QueryOracle* oracle,
                std::vector<double>* weights = nullptr);
double accept_probability(const StateVector& state, const AcceptSpec& spec);

// |r, x, u> -> |r, x, u xor F(r, x)> on registers (R, N, N), N a power of two.
StateVector apply_oracle_query(const StateVector& state, const GraphOracle& f);

// Circuit from the JSON schema: {"registers": [{"name", "dim"}], "budget",
// "steps": [{"op": "hadamard"|"fourier"|"unitary"|"swap"|"query", ...}],
// "accept": {"regs", "values", "complement"}}. Registers are referenced by name.
QueryAlgorithm load_circuit(const std::string& json_text);

// |c, x> -> |c, pi^c(x)> as a dense (2N x 2N) matrix, c the high digit.
Eigen::MatrixXcd controlled_permutation_matrix(const Permutation& pi);

Eigen::MatrixXcd walsh_hadamard(std::size_t dim);
Eigen::MatrixXcd dft(std::size_t dim, bool inverse = false);
Eigen::MatrixXcd haar_unitary(std::size_t dim, Rng& rng);
std::size_t next_power_of_two(std::size_t n);
bool is_power_of_two(std::size_t n);

// Components verifier ----------------------------------------------------

struct AcceptanceOperator {
  Eigen::MatrixXd matrix;
  std::string provenance;
};

// (1/sqrt N)(sum_{S} |x> - sum_{not S} |x>).
StateVector canonical_witness(const std::vector<std::uint8_t>& side);
StateVector uniform_witness(std::size_t n);

// 1/2 (I - |u><u|) + 1/2 (I - L/2) with L = I - A/R.
AcceptanceOperator acceptance_operator(const GraphOracle& f);

struct QmaAcceptance {
  double circuit = 0.0;
  double operator_form = 0.0;
  double balancedness = 0.0;
  double invariance = 0.0;
  std::size_t queries_per_invariance = 0;
};

// Exact acceptance of the balancedness/invariance 50-50 mixture, both by
// simulating the verifier circuit and from the acceptance operator.
QmaAcceptance qma_accept_prob(const GraphOracle& f, const StateVector& witness);
double qma_accept_operator(const GraphOracle& f, const StateVector& witness);
double qma_max_acceptance(const GraphOracle& f);
// The balancedness circuit alone (H^n or DFT_N on X, reject on 0).
double balancedness_circuit(const StateVector& witness);
// Invariance test circuit for one permutation oracle input prefix.
double invariance_circuit(const QueryOracle& oracle, std::size_t r_dim, std::size_t r,
                          const StateVector& witness, std::size_t* queries = nullptr);

// BBBV ----------------------------------------------------------------------

struct BbbvReport {
  double actual = 0.0;
  double bound = 0.0;        // sqrt(T * sum of W over changed inputs)
  double tight_bound = 0.0;  // 2 * bound
  double changed_weight = 0.0;
  std::size_t queries = 0;
  bool holds() const { return actual <= bound + 1e-12; }
};

BbbvReport bbbv_check(const QueryAlgorithm& alg, const QueryOracle& f, const QueryOracle& g,
                      const std::optional<StateVector>& initial = std::nullopt);

// Distinguisher ---------------------------------------------------------------

using OracleSampler = std::function<std::unique_ptr<QueryOracle>(Rng&)>;

struct DistinguisherResult {
  double p_a = 0.0;
  double p_b = 0.0;
  double bias = 0.0;
  Interval interval_a;
  Interval interval_b;
  Interval bias_interval;
  std::size_t trials = 0;
};

// P_a, P_b are means of exact acceptance probabilities over sampled oracles.
DistinguisherResult run_distinguisher(const QueryAlgorithm& alg, const OracleSampler& a,
                                      const OracleSampler& b, std::size_t trials, Rng& rng,
                                      double z = 1.959963984540054);

// n/2 queries (n even) deciding the parity of an n-bit string exactly:
// query k reads bits 2k, 2k+1 with phase kickback.
QueryAlgorithm exact_parity_algorithm(std::size_t n);

// Random T-query circuit over (index n, target 2, work 2), accepting on work = 0.
QueryAlgorithm random_bit_query_circuit(std::size_t n, std::size_t t, Rng& rng);

}  // namespace qlab
