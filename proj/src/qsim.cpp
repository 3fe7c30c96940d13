#include "qlab/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <bit>

#include <json.hpp>

namespace qlab {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (auto d : dims) {
    if (d == 0) throw std::invalid_argument("register of dimension 0");
    p *= d;
  }
  return p;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// StateVector -----------------------------------------------------------------

StateVector::StateVector(std::vector<std::size_t> dims)
    : StateVector(dims, [&] {
        std::vector<Complex> a(product(dims), 0.0);
        a[0] = 1.0;
        return a;
      }()) {}

StateVector::StateVector(std::vector<std::size_t> dims, std::vector<Complex> amplitudes)
    : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
  if (amps_.size() != product(dims_))
    throw std::invalid_argument("StateVector: amplitude count does not match dimensions");
  strides_.assign(dims_.size(), 1);
  for (std::size_t i = dims_.size(); i-- > 1;) strides_[i - 1] = strides_[i] * dims_[i];
}

StateVector StateVector::basis(std::vector<std::size_t> dims,
                               const std::vector<std::size_t>& values) {
  StateVector s(dims, std::vector<Complex>(product(dims), 0.0));
  s.amps_[s.index(values)] = 1.0;
  return s;
}

std::size_t StateVector::index(const std::vector<std::size_t>& values) const {
  if (values.size() != dims_.size()) throw std::invalid_argument("StateVector: wrong value count");
  std::size_t i = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (values[k] >= dims_[k]) throw std::out_of_range("StateVector: register value out of range");
    i += values[k] * strides_[k];
  }
  return i;
}

double StateVector::norm_squared() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

void StateVector::check_normalized(double tol) const {
  if (std::abs(norm_squared() - 1.0) > tol) throw std::logic_error("state norm drifted from 1");
}

double StateVector::distance(const StateVector& other) const {
  if (other.dims_ != dims_) throw std::invalid_argument("distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) s += std::norm(amps_[i] - other.amps_[i]);
  return std::sqrt(s);
}

// Oracles -------------------------------------------------------------------------

std::optional<std::uint32_t> GraphQueryOracle::evaluate(std::span<const std::size_t> input,
                                                        Direction) const {
  std::size_t r = 0, x = 0;
  if (input.size() == 2) {
    r = input[0];
    x = input[1];
  } else if (input.size() == 1 && f_.r() == 1) {
    x = input[0];
  } else {
    throw std::invalid_argument("GraphQueryOracle: expected (r, x)");
  }
  if (r >= f_.r() || x >= f_.n()) return std::nullopt;
  return f_(r, x);
}

std::optional<std::uint32_t> BitStringOracle::evaluate(std::span<const std::size_t> input,
                                                       Direction) const {
  if (input.size() != 1) throw std::invalid_argument("BitStringOracle: expected (x)");
  if (input[0] >= bits_.size()) return std::nullopt;
  return bits_[input[0]];
}

std::optional<std::uint32_t> TableOracle::evaluate(std::span<const std::size_t> input,
                                                   Direction dir) const {
  if (input.size() != 1) throw std::invalid_argument("TableOracle: expected (x)");
  if (dir == Direction::kInverse) throw std::invalid_argument("TableOracle: no inverse");
  if (input[0] >= table_.size()) return std::nullopt;
  return table_[input[0]];
}

std::optional<std::uint32_t> PermTupleOracle::evaluate(std::span<const std::size_t> input,
                                                       Direction dir) const {
  std::size_t r = 0, x = 0;
  if (input.size() == 2) {
    r = input[0];
    x = input[1];
  } else if (input.size() == 1 && p_.arity() == 1) {
    x = input[0];
  } else {
    throw std::invalid_argument("PermTupleOracle: expected (r, x)");
  }
  if (r >= p_.arity() || x >= p_.component(r).size()) return std::nullopt;
  return dir == Direction::kForward ? p_(r, x) : inv_(r, x);
}

RawPermutationOracle::RawPermutationOracle(RawPermutations p) : p_(std::move(p)) {
  p_.validate();
  x_inv_ = p_.x.inverse();
  for (const auto& y : p_.y) y_inv_.push_back(y.inverse());
  for (const auto& z : p_.z) z_inv_.push_back(z.inverse());
}

std::optional<std::uint32_t> RawPermutationOracle::evaluate(std::span<const std::size_t> input,
                                                            Direction dir) const {
  if (input.empty()) throw std::invalid_argument("RawPermutationOracle: missing tag");
  const std::size_t n = p_.n(), half = n / 2;
  switch (input[0]) {
    case 0:
      if (input.size() != 2) break;
      if (input[1] >= n) return std::nullopt;
      return dir == Direction::kForward ? p_.x(input[1]) : x_inv_(input[1]);
    case 1: {
      if (input.size() != 3 || dir != Direction::kForward) break;
      const std::size_t r = input[1], a = input[2];
      if (r >= p_.r() || a >= n) return std::nullopt;
      return a < half ? y_inv_[r](a) : z_inv_[r](a - half);
    }
    case 2: {
      if (input.size() != 4 || dir != Direction::kForward) break;
      const std::size_t r = input[1], a = input[2], s = input[3];
      if (r >= p_.r() || a >= n || s >= half) return std::nullopt;
      return a < half ? p_.y[r](s ^ 1u) : p_.z[r](s ^ 1u) + half;
    }
    default:
      break;
  }
  throw std::invalid_argument("RawPermutationOracle: malformed call");
}

// QueryAlgorithm --------------------------------------------------------------------

std::size_t QueryAlgorithm::add_register(std::string name, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("register of dimension 0");
  for (const auto& r : registers_)
    if (r.name == name) throw std::invalid_argument("duplicate register " + name);
  registers_.push_back({std::move(name), dim});
  return registers_.size() - 1;
}

std::size_t QueryAlgorithm::reg(const std::string& name) const {
  for (std::size_t i = 0; i < registers_.size(); ++i)
    if (registers_[i].name == name) return i;
  throw std::invalid_argument("unknown register " + name);
}

std::vector<std::size_t> QueryAlgorithm::dims() const {
  std::vector<std::size_t> d;
  for (const auto& r : registers_) d.push_back(r.dim);
  return d;
}

QueryAlgorithm& QueryAlgorithm::unitary(std::vector<std::size_t> regs, Eigen::MatrixXcd m) {
  steps_.push_back(UnitaryStep{std::move(regs), std::move(m)});
  return *this;
}
QueryAlgorithm& QueryAlgorithm::hadamard(std::size_t reg) {
  steps_.push_back(HadamardStep{reg});
  return *this;
}
QueryAlgorithm& QueryAlgorithm::fourier(std::size_t reg, bool inverse) {
  steps_.push_back(FourierStep{reg, inverse});
  return *this;
}
QueryAlgorithm& QueryAlgorithm::swap(std::size_t a, std::size_t b,
                                     std::optional<std::size_t> control) {
  steps_.push_back(SwapStep{a, b, control});
  return *this;
}
QueryAlgorithm& QueryAlgorithm::query(std::vector<std::size_t> inputs, std::size_t target,
                                      std::optional<std::size_t> control, Direction dir) {
  steps_.push_back(QueryStep{std::move(inputs), std::nullopt, target, control, dir});
  return *this;
}
QueryAlgorithm& QueryAlgorithm::tagged_query(std::size_t tag, std::vector<std::size_t> inputs,
                                             std::size_t target, Direction dir) {
  steps_.push_back(QueryStep{std::move(inputs), tag, target, std::nullopt, dir});
  return *this;
}

QueryAlgorithm& QueryAlgorithm::controlled_inplace(std::size_t control,
                                                   std::vector<std::size_t> prefix,
                                                   std::size_t x, std::size_t ancilla) {
  auto fwd = prefix;
  fwd.push_back(x);
  auto inv = std::move(prefix);
  inv.push_back(ancilla);
  query(fwd, ancilla, control, Direction::kForward);
  query(inv, x, control, Direction::kInverse);
  swap(x, ancilla, control);
  return *this;
}

QueryAlgorithm& QueryAlgorithm::accept(AcceptSpec spec) {
  accept_ = std::move(spec);
  return *this;
}

std::size_t QueryAlgorithm::query_count() const {
  return static_cast<std::size_t>(std::count_if(steps_.begin(), steps_.end(), [](const Step& s) {
    return std::holds_alternative<QueryStep>(s);
  }));
}

void QueryAlgorithm::validate() const {
  const std::size_t nreg = registers_.size();
  auto check = [&](std::size_t r) {
    if (r >= nreg) throw std::invalid_argument("step references unknown register");
  };
  for (const auto& step : steps_) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, UnitaryStep>) {
            std::size_t d = 1;
            for (auto r : s.regs) {
              check(r);
              d *= registers_[r].dim;
            }
            if (static_cast<std::size_t>(s.matrix.rows()) != d ||
                static_cast<std::size_t>(s.matrix.cols()) != d)
              throw std::invalid_argument("unitary size does not match registers");
            const auto eye = Eigen::MatrixXcd::Identity(s.matrix.rows(), s.matrix.cols());
            if ((s.matrix.adjoint() * s.matrix - eye).norm() > 1e-9)
              throw std::invalid_argument("matrix is not unitary");
          } else if constexpr (std::is_same_v<T, HadamardStep>) {
            check(s.reg);
            if (!is_power_of_two(registers_[s.reg].dim))
              throw std::invalid_argument("hadamard needs a power-of-two register");
          } else if constexpr (std::is_same_v<T, FourierStep>) {
            check(s.reg);
          } else if constexpr (std::is_same_v<T, SwapStep>) {
            check(s.a);
            check(s.b);
            if (s.a == s.b || registers_[s.a].dim != registers_[s.b].dim)
              throw std::invalid_argument("swap needs two distinct registers of equal size");
            if (s.control) {
              check(*s.control);
              if (*s.control == s.a || *s.control == s.b)
                throw std::invalid_argument("swap control overlaps its targets");
            }
          } else {
            check(s.target);
            for (auto r : s.inputs) {
              check(r);
              if (r == s.target) throw std::invalid_argument("query target is also an input");
            }
            if (s.control) check(*s.control);
            if (!is_power_of_two(registers_[s.target].dim))
              throw std::invalid_argument("query target must have power-of-two dimension");
          }
        },
        step);
  }
  for (auto r : accept_.regs) check(r);
  for (const auto& v : accept_.values) {
    if (v.size() != accept_.regs.size()) throw std::invalid_argument("accept value arity");
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k] >= registers_[accept_.regs[k]].dim)
        throw std::invalid_argument("accept value out of range");
  }
  if (query_count() > budget_) throw std::invalid_argument("algorithm exceeds its query budget");
}

// Gates ------------------------------------------------------------------------------

Eigen::MatrixXcd walsh_hadamard(std::size_t dim) {
  if (!is_power_of_two(dim)) throw std::invalid_argument("walsh_hadamard: dim not a power of two");
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd h(d, d);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      h(i, j) = (std::popcount(static_cast<std::uint64_t>(i & j)) % 2) ? -s : s;
  return h;
}

Eigen::MatrixXcd dft(std::size_t dim, bool inverse) {
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd f(d, d);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  const double sign = inverse ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((i * j) % d) /
                           static_cast<double>(dim);
      f(i, j) = std::polar(s, angle);
    }
  return f;
}

Eigen::MatrixXcd haar_unitary(std::size_t dim, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXcd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex(re, im);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    const double m = std::abs(rjj);
    if (m > 0) q.col(j) *= rjj / m;
  }
  return q;
}

Eigen::MatrixXcd controlled_permutation_matrix(const Permutation& pi) {
  const auto n = static_cast<Eigen::Index>(pi.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (Eigen::Index x = 0; x < n; ++x) {
    m(x, x) = 1.0;
    m(n + static_cast<Eigen::Index>(pi(static_cast<std::size_t>(x))), n + x) = 1.0;
  }
  return m;
}

// Evolution ---------------------------------------------------------------------------

namespace {

void apply_unitary(StateVector& state, const std::vector<std::size_t>& regs,
                   const Eigen::MatrixXcd& m) {
  const auto& dims = state.dims();
  std::vector<std::size_t> offsets{0};
  for (auto r : regs) {
    std::vector<std::size_t> next;
    next.reserve(offsets.size() * dims[r]);
    for (auto o : offsets)
      for (std::size_t v = 0; v < dims[r]; ++v) next.push_back(o + v * state.stride(r));
    offsets = std::move(next);
  }
  const auto d = static_cast<Eigen::Index>(offsets.size());
  Eigen::VectorXcd buf(d);
  auto& a = state.amplitudes();
  for (std::size_t base = 0; base < a.size(); ++base) {
    bool is_base = true;
    for (auto r : regs)
      if (state.value(base, r) != 0) {
        is_base = false;
        break;
      }
    if (!is_base) continue;
    for (Eigen::Index k = 0; k < d; ++k) buf(k) = a[base + offsets[static_cast<std::size_t>(k)]];
    const Eigen::VectorXcd out = m * buf;
    for (Eigen::Index k = 0; k < d; ++k) a[base + offsets[static_cast<std::size_t>(k)]] = out(k);
  }
}

void apply_swap(StateVector& state, const SwapStep& s) {
  auto& a = state.amplitudes();
  std::vector<Complex> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t j = i;
    if (!s.control || state.value(i, *s.control) == 1) {
      const std::size_t va = state.value(i, s.a), vb = state.value(i, s.b);
      j = i - va * state.stride(s.a) - vb * state.stride(s.b) + vb * state.stride(s.a) +
          va * state.stride(s.b);
    }
    out[j] = a[i];
  }
  a = std::move(out);
}

void apply_query(StateVector& state, const QueryStep& q, const QueryOracle& oracle,
                 std::vector<double>* weights) {
  const auto& dims = state.dims();
  const std::size_t tdim = dims[q.target];
  if (!is_power_of_two(tdim)) throw std::invalid_argument("query target must be a power of two");
  std::size_t in_size = 1;
  for (auto r : q.inputs) in_size *= dims[r];
  if (weights) weights->assign(in_size, 0.0);

  auto& a = state.amplitudes();
  std::vector<Complex> out(a.size(), 0.0);
  std::vector<std::size_t> input(q.inputs.size() + (q.tag ? 1 : 0));
  const std::size_t shift = q.tag ? 1 : 0;
  if (q.tag) input[0] = *q.tag;
  oracle.begin_call();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == Complex(0.0) || (q.control && state.value(i, *q.control) != 1)) {
      out[i] += a[i];
      continue;
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < q.inputs.size(); ++k) {
      input[k + shift] = state.value(i, q.inputs[k]);
      flat = flat * dims[q.inputs[k]] + input[k + shift];
    }
    if (weights) (*weights)[flat] += std::norm(a[i]);
    const auto y = oracle.evaluate(input, q.direction);
    if (!y) {
      out[i] += a[i];
      continue;
    }
    if (*y >= tdim) throw std::out_of_range("oracle output exceeds target register");
    const std::size_t t = state.value(i, q.target);
    const std::size_t nt = t ^ *y;
    out[i + (nt - t) * state.stride(q.target)] += a[i];
  }
  oracle.end_call();
  a = std::move(out);
}

}  // namespace

void apply_step(StateVector& state, const Step& step, const QueryOracle* oracle,
                std::vector<double>* weights) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UnitaryStep>) {
          apply_unitary(state, s.regs, s.matrix);
        } else if constexpr (std::is_same_v<T, HadamardStep>) {
          apply_unitary(state, {s.reg}, walsh_hadamard(state.dims()[s.reg]));
        } else if constexpr (std::is_same_v<T, FourierStep>) {
          apply_unitary(state, {s.reg}, dft(state.dims()[s.reg], s.inverse));
        } else if constexpr (std::is_same_v<T, SwapStep>) {
          apply_swap(state, s);
        } else {
          if (!oracle) throw std::invalid_argument("query step without an oracle");
          apply_query(state, s, *oracle, weights);
        }
      },
      step);
  state.check_normalized(1e-9);
}

double accept_probability(const StateVector& state, const AcceptSpec& spec) {
  if (spec.regs.empty()) return spec.complement ? 0.0 : 1.0;
  double p = 0.0;
  const auto& a = state.amplitudes();
  std::vector<std::size_t> v(spec.regs.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == Complex(0.0)) continue;
    for (std::size_t k = 0; k < spec.regs.size(); ++k) v[k] = state.value(i, spec.regs[k]);
    const bool hit = std::find(spec.values.begin(), spec.values.end(), v) != spec.values.end();
    if (hit != spec.complement) p += std::norm(a[i]);
  }
  return p;
}

RunResult run(const QueryAlgorithm& alg, const QueryOracle& oracle,
              const std::optional<StateVector>& initial, bool record_weights) {
  alg.validate();
  RunResult res;
  res.state = initial ? *initial : StateVector(alg.dims());
  if (res.state.dims() != alg.dims()) throw std::invalid_argument("run: initial state shape");
  res.state.check_normalized(1e-9);
  for (const auto& step : alg.steps()) {
    const bool is_query = std::holds_alternative<QueryStep>(step);
    std::vector<double> w;
    apply_step(res.state, step, &oracle, record_weights && is_query ? &w : nullptr);
    if (is_query) {
      ++res.queries;
      if (record_weights) res.weights.rows.push_back(std::move(w));
    }
  }
  res.accept_probability = accept_probability(res.state, alg.accept_spec());
  return res;
}

StateVector apply_oracle_query(const StateVector& state, const GraphOracle& f) {
  const auto& d = state.dims();
  if (d.size() != 3 || d[0] != f.r() || d[1] != f.n() || d[2] != f.n())
    throw std::invalid_argument("apply_oracle_query: registers must be (R, N, N)");
  if (!is_power_of_two(f.n())) throw std::invalid_argument("apply_oracle_query: N not a power of two");
  StateVector out = state;
  apply_step(out, QueryStep{{0, 1}, std::nullopt, 2, std::nullopt, Direction::kForward},
             std::make_unique<GraphQueryOracle>(f).get());
  return out;
}

QueryAlgorithm raw_query_algorithm(std::size_t n, std::size_t r) {
  if (n < 2 || n % 2 || !is_power_of_two(n))
    throw std::invalid_argument("raw_query_algorithm: N must be a power of two");
  QueryAlgorithm alg;
  const auto R = alg.add_register("R", r);
  const auto X = alg.add_register("X", n);
  const auto OUT = alg.add_register("OUT", n);
  const auto A = alg.add_register("A", n);
  const auto S = alg.add_register("S", n / 2);
  const auto V = alg.add_register("V", n);
  alg.tagged_query(0, {X}, A, Direction::kInverse)
      .tagged_query(1, {R, A}, S)
      .tagged_query(2, {R, A, S}, V)
      .tagged_query(0, {V}, OUT)
      .tagged_query(2, {R, A, S}, V)
      .tagged_query(1, {R, A}, S)
      .tagged_query(0, {X}, A, Direction::kInverse);
  return alg;
}

// JSON circuits -------------------------------------------------------------------------

QueryAlgorithm load_circuit(const std::string& json_text) {
  using nlohmann::json;
  const json j = json::parse(json_text);
  QueryAlgorithm alg;
  for (const auto& r : j.at("registers")) alg.add_register(r.at("name"), r.at("dim"));
  if (j.contains("budget")) alg.set_budget(j.at("budget"));
  auto reg = [&](const json& name) { return alg.reg(name.get<std::string>()); };
  auto regs = [&](const json& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) out.push_back(reg(n));
    return out;
  };
  for (const auto& s : j.value("steps", json::array())) {
    const std::string op = s.at("op");
    if (op == "hadamard") {
      alg.hadamard(reg(s.at("reg")));
    } else if (op == "fourier") {
      alg.fourier(reg(s.at("reg")), s.value("inverse", false));
    } else if (op == "unitary") {
      const auto rs = regs(s.at("regs"));
      const auto& rows = s.at("matrix");
      const auto d = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXcd m(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != d)
          throw std::invalid_argument("unitary matrix must be square");
        for (Eigen::Index k = 0; k < d; ++k) {
          const auto& e = row.at(static_cast<std::size_t>(k));
          m(i, k) = e.is_array() ? Complex(e.at(0), e.at(1)) : Complex(e.get<double>(), 0.0);
        }
      }
      alg.unitary(rs, m);
    } else if (op == "swap") {
      std::optional<std::size_t> c;
      if (s.contains("control")) c = reg(s.at("control"));
      alg.swap(reg(s.at("a")), reg(s.at("b")), c);
    } else if (op == "query") {
      std::optional<std::size_t> c;
      if (s.contains("control")) c = reg(s.at("control"));
      const std::string dir = s.value("direction", "forward");
      if (dir != "forward" && dir != "inverse") throw std::invalid_argument("bad query direction");
      alg.query(regs(s.at("inputs")), reg(s.at("target")), c,
                dir == "forward" ? Direction::kForward : Direction::kInverse);
    } else {
      throw std::invalid_argument("unknown circuit op " + op);
    }
  }
  if (j.contains("accept")) {
    const auto& a = j.at("accept");
    AcceptSpec spec;
    spec.regs = regs(a.at("regs"));
    for (const auto& v : a.at("values")) spec.values.push_back(v.get<std::vector<std::size_t>>());
    spec.complement = a.value("complement", false);
    alg.accept(std::move(spec));
  }
  alg.validate();
  return alg;
}

// Components verifier -------------------------------------------------------------------

StateVector canonical_witness(const std::vector<std::uint8_t>& side) {
  const double s = 1.0 / std::sqrt(static_cast<double>(side.size()));
  std::vector<Complex> a(side.size());
  for (std::size_t x = 0; x < side.size(); ++x) a[x] = side[x] ? s : -s;
  return StateVector({side.size()}, std::move(a));
}

StateVector uniform_witness(std::size_t n) {
  return StateVector({n}, std::vector<Complex>(n, 1.0 / std::sqrt(static_cast<double>(n))));
}

AcceptanceOperator acceptance_operator(const GraphOracle& f) {
  const auto n = static_cast<Eigen::Index>(f.n());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd lap = eye - adjacency(f).cast<double>() / static_cast<double>(f.r());
  return {0.5 * (eye - j) + 0.5 * (eye - 0.5 * lap), "components verifier, graph oracle"};
}

namespace {

void check_witness(const GraphOracle& f, const StateVector& w) {
  if (w.size() != f.n()) throw std::invalid_argument("witness must have N amplitudes");
  if (std::abs(w.norm_squared() - 1.0) > 1e-9) throw std::invalid_argument("witness not unit norm");
}

}  // namespace

double qma_accept_operator(const GraphOracle& f, const StateVector& witness) {
  check_witness(f, witness);
  const auto m = acceptance_operator(f).matrix;
  const auto& a = witness.amplitudes();
  Complex s = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x)
    for (std::size_t y = 0; y < a.size(); ++y)
      s += std::conj(a[x]) * m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) * a[y];
  return s.real();
}

double balancedness_circuit(const StateVector& witness) {
  const std::size_t n = witness.size();
  QueryAlgorithm alg;
  const auto x = alg.add_register("X", n);
  if (is_power_of_two(n)) {
    alg.hadamard(x);
  } else {
    alg.fourier(x);
  }
  alg.accept({{x}, {{0}}, true});
  TableOracle none({});
  return run(alg, none, StateVector({n}, witness.amplitudes())).accept_probability;
}

double invariance_circuit(const QueryOracle& oracle, std::size_t r_dim, std::size_t r,
                          const StateVector& witness, std::size_t* queries) {
  const std::size_t n = witness.size();
  const std::size_t npad = next_power_of_two(n);
  QueryAlgorithm alg;
  const auto c = alg.add_register("C", 2);
  const auto rr = alg.add_register("R", r_dim);
  const auto x = alg.add_register("X", npad);
  const auto anc = alg.add_register("A", npad);
  alg.hadamard(c).controlled_inplace(c, {rr}, x, anc).hadamard(c);
  alg.accept({{c}, {{0}}, false});

  StateVector init(alg.dims(), std::vector<Complex>(2 * r_dim * npad * npad, 0.0));
  for (std::size_t v = 0; v < n; ++v) init[init.index({0, r, v, 0})] = witness[v];
  const auto res = run(alg, oracle, init);
  if (queries) *queries = res.queries;
  return res.accept_probability;
}

QmaAcceptance qma_accept_prob(const GraphOracle& f, const StateVector& witness) {
  check_witness(f, witness);
  QmaAcceptance out;
  out.balancedness = balancedness_circuit(witness);
  GraphQueryOracle oracle(f);
  double inv = 0.0;
  for (std::size_t r = 0; r < f.r(); ++r)
    inv += invariance_circuit(oracle, f.r(), r, witness, &out.queries_per_invariance);
  out.invariance = inv / static_cast<double>(f.r());
  out.circuit = 0.5 * out.balancedness + 0.5 * out.invariance;
  out.operator_form = qma_accept_operator(f, witness);
  return out;
}

double qma_max_acceptance(const GraphOracle& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acceptance_operator(f).matrix,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// BBBV ---------------------------------------------------------------------------------

BbbvReport bbbv_check(const QueryAlgorithm& alg, const QueryOracle& f, const QueryOracle& g,
                      const std::optional<StateVector>& initial) {
  const auto rf = run(alg, f, initial, true);
  const auto rg = run(alg, g, initial, false);
  BbbvReport rep;
  rep.actual = rf.state.distance(rg.state);
  rep.queries = alg.query_count();
  const auto dims = alg.dims();
  std::size_t qi = 0;
  for (const auto& step : alg.steps()) {
    const auto* q = std::get_if<QueryStep>(&step);
    if (!q) continue;
    const auto& row = rf.weights.rows[qi++];
    std::vector<std::size_t> input(q->inputs.size() + (q->tag ? 1 : 0));
    const std::size_t shift = q->tag ? 1 : 0;
    if (q->tag) input[0] = *q->tag;
    for (std::size_t flat = 0; flat < row.size(); ++flat) {
      if (row[flat] == 0.0) continue;
      std::size_t rest = flat;
      for (std::size_t k = q->inputs.size(); k-- > 0;) {
        input[k + shift] = rest % dims[q->inputs[k]];
        rest /= dims[q->inputs[k]];
      }
      if (f.evaluate(input, q->direction) != g.evaluate(input, q->direction))
        rep.changed_weight += row[flat];
    }
  }
  rep.bound = std::sqrt(static_cast<double>(rep.queries) * rep.changed_weight);
  rep.tight_bound = 2.0 * rep.bound;
  return rep;
}

// Distinguisher ----------------------------------------------------------------------------

DistinguisherResult run_distinguisher(const QueryAlgorithm& alg, const OracleSampler& a,
                                      const OracleSampler& b, std::size_t trials, Rng& rng,
                                      double z) {
  if (trials == 0) throw std::invalid_argument("run_distinguisher: zero trials");
  DistinguisherResult res;
  res.trials = trials;
  double sa = 0.0, sb = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    sa += run(alg, *a(rng)).accept_probability;
    sb += run(alg, *b(rng)).accept_probability;
  }
  const double n = static_cast<double>(trials);
  res.p_a = sa / n;
  res.p_b = sb / n;
  res.bias = std::abs(res.p_a - res.p_b);
  res.interval_a = wilson_interval(sa, n, z);
  res.interval_b = wilson_interval(sb, n, z);
  const double lo = res.interval_a.lo - res.interval_b.hi;
  const double hi = res.interval_a.hi - res.interval_b.lo;
  if (lo <= 0.0 && hi >= 0.0) {
    res.bias_interval = {0.0, std::max(-lo, hi)};
  } else {
    res.bias_interval = {std::min(std::abs(lo), std::abs(hi)), std::max(std::abs(lo), std::abs(hi))};
  }
  return res;
}

QueryAlgorithm exact_parity_algorithm(std::size_t n) {
  if (n == 0 || n % 2) throw std::invalid_argument("exact_parity_algorithm: n must be even");
  QueryAlgorithm alg;
  const std::size_t m = n / 2;
  std::vector<std::size_t> qs;
  for (std::size_t k = 0; k < m; ++k) qs.push_back(alg.add_register("q" + std::to_string(k), n));
  const auto t = alg.add_register("t", 2);
  const double s = 1.0 / std::sqrt(2.0);

  Eigen::MatrixXcd minus(2, 2);
  minus << s, s, -s, s;
  alg.unitary({t}, minus);
  const auto dn = static_cast<Eigen::Index>(n);
  for (std::size_t k = 0; k < m; ++k) {
    const auto lo = static_cast<Eigen::Index>(2 * k), hi = lo + 1;
    // Householder reflection swapping |0> and (|2k> + |2k+1>)/sqrt 2.
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(dn);
    w(0) += 1.0;
    w(lo) -= s;
    w(hi) -= s;
    const Eigen::MatrixXcd prep =
        Eigen::MatrixXcd::Identity(dn, dn) - 2.0 * w * w.adjoint() / w.squaredNorm();
    Eigen::MatrixXcd pair = Eigen::MatrixXcd::Identity(dn, dn);
    pair(lo, lo) = s;
    pair(lo, hi) = s;
    pair(hi, lo) = s;
    pair(hi, hi) = -s;
    alg.unitary({qs[k]}, prep).query({qs[k]}, t).unitary({qs[k]}, pair);
  }
  AcceptSpec acc;
  acc.regs = qs;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    if (std::popcount(mask) % 2) continue;
    std::vector<std::size_t> v(m);
    for (std::size_t k = 0; k < m; ++k) v[k] = 2 * k + ((mask >> k) & 1u);
    acc.values.push_back(std::move(v));
  }
  alg.accept(std::move(acc));
  alg.set_budget(m);
  return alg;
}

QueryAlgorithm random_bit_query_circuit(std::size_t n, std::size_t t, Rng& rng) {
  QueryAlgorithm alg;
  const auto idx = alg.add_register("idx", n);
  const auto tgt = alg.add_register("tgt", 2);
  const auto work = alg.add_register("work", 2);
  for (std::size_t i = 0; i < t; ++i)
    alg.unitary({idx, tgt, work}, haar_unitary(4 * n, rng)).query({idx}, tgt);
  alg.unitary({idx, tgt, work}, haar_unitary(4 * n, rng));
  alg.accept({{work}, {{0}}, false});
  alg.set_budget(t);
  return alg;
}

}  // namespace qlab
