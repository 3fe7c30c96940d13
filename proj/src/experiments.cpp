#include "qlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qlab/entropy.hpp"
#include "qlab/game.hpp"
#include "qlab/oracle.hpp"
#include "qlab/perm.hpp"
#include "qlab/qsim.hpp"
#include "qlab/reduction.hpp"
#include "qlab/stats.hpp"

namespace qlab {

// Config -------------------------------------------------------------------------------

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  auto put = [&](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("n", n);
  put("r", r);
  put("t", t);
  put("delta", delta);
  put("epsilon", epsilon);
  put("trials", trials);
  put("witness_length", witness_length);
  put("c", c);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"experiment", "seed",   "n",      "r",
                                                 "t",          "delta",  "epsilon", "trials",
                                                 "witness_length", "c", "out",    "csv"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, v] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown config key: " + key);
  ExperimentConfig c;
  c.experiment = j.value("experiment", std::string{});
  c.seed = j.value("seed", std::uint64_t{1});
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<typename std::decay_t<decltype(field)>::value_type>();
  };
  get("n", c.n);
  get("r", c.r);
  get("t", c.t);
  get("delta", c.delta);
  get("epsilon", c.epsilon);
  get("trials", c.trials);
  get("witness_length", c.witness_length);
  get("c", c.c);
  c.out = j.value("out", std::string{});
  c.csv = j.value("csv", false);
  return c;
}

ExperimentConfig ExperimentConfig::merged_with(const ExperimentConfig& f, bool flags_set_csv) const {
  ExperimentConfig m = *this;
  if (!f.experiment.empty()) m.experiment = f.experiment;
  if (f.seed != 1 || !m.seed) m.seed = f.seed;
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(m.n, f.n);
  take(m.r, f.r);
  take(m.t, f.t);
  take(m.delta, f.delta);
  take(m.epsilon, f.epsilon);
  take(m.trials, f.trials);
  take(m.witness_length, f.witness_length);
  take(m.c, f.c);
  if (!f.out.empty()) m.out = f.out;
  if (flags_set_csv) m.csv = f.csv;
  return m;
}

// Records --------------------------------------------------------------------------------

namespace {

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::kLessEqual: return "<=";
    case Relation::kGreaterEqual: return ">=";
    case Relation::kEqual: return "==";
    case Relation::kNear: return "~=";
  }
  return "?";
}

}  // namespace

const Verdict& ResultRecord::check(std::string name, double value, Relation rel, double target, double tol) {
  Verdict v{std::move(name), value, rel, target, tol, false};
  switch (rel) {
    case Relation::kLessEqual: v.pass = value <= target + tol; break;
    case Relation::kGreaterEqual: v.pass = value >= target - tol; break;
    case Relation::kEqual: v.pass = value == target; break;
    case Relation::kNear: v.pass = std::abs(value - target) <= tol; break;
  }
  verdicts.push_back(v);
  return verdicts.back();
}

bool ResultRecord::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string ResultRecord::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["params"] = params;
  j["metrics"] = metrics;
  auto vs = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    vs.push_back({{"name", v.name},
                  {"value", v.value},
                  {"relation", relation_name(v.relation)},
                  {"target", v.target},
                  {"tolerance", v.tolerance},
                  {"pass", v.pass}});
  }
  j["verdicts"] = vs;
  j["artifacts"] = artifacts;
  j["pass"] = all_pass();
  return j.dump(2) + "\n";
}

std::string ResultRecord::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind,name,value,relation,target,tolerance,pass\n";
  for (const auto& [k, v] : metrics.items()) {
    if (v.is_number() || v.is_boolean())
      os << "metric," << k << ',' << (v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>())
         << ",,,,\n";
  }
  for (const auto& v : verdicts)
    os << "verdict," << v.name << ',' << v.value << ',' << relation_name(v.relation) << ',' << v.target
       << ',' << v.tolerance << ',' << (v.pass ? 1 : 0) << '\n';
  return os.str();
}

std::string render(const ResultRecord& record, bool csv) { return csv ? record.to_csv() : record.to_json(); }

// Experiments ---------------------------------------------------------------------------

namespace {

using Runner = std::function<void(const ExperimentConfig&, ResultRecord&)>;

std::size_t need_positive(const std::optional<std::size_t>& v, std::size_t fallback, const char* name) {
  const auto x = v.value_or(fallback);
  if (x == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  return x;
}

void write_artifact(const ExperimentConfig& cfg, ResultRecord& rec, const std::string& suffix,
                    const std::string& content) {
  if (cfg.out.empty()) return;
  const auto path = cfg.out + suffix;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << content;
  rec.artifacts.push_back(path);
}

std::vector<std::size_t> sizes_or(const std::optional<std::size_t>& n, std::vector<std::size_t> defaults) {
  if (n) return {*n};
  return defaults;
}

// qma-verify: completeness on yes instances and the soundness closed form.
void qma_verify(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng root(cfg.seed);
  const auto trials = need_positive(cfg.trials, 200, "trials");
  double worst_completeness = 0.0;
  std::size_t checked = 0;

  auto complete = [&](const GraphOracle& f, const std::vector<std::uint8_t>& side, bool circuit) {
    const auto w = canonical_witness(side);
    double acc = qma_accept_operator(f, w);
    worst_completeness = std::max(worst_completeness, std::abs(1.0 - acc));
    if (circuit) {
      acc = qma_accept_prob(f, w).circuit;
      worst_completeness = std::max(worst_completeness, std::abs(1.0 - acc));
    }
    ++checked;
  };

  for (auto n : sizes_or(cfg.n, {4, 8})) {
    if (n > 8) continue;
    const std::vector<std::size_t> rs = cfg.r ? std::vector<std::size_t>{*cfg.r} : std::vector<std::size_t>{1, 2, 3};
    for (auto r : rs)
      for (const auto& f : enumerate_yes(n, r)) complete(f, *balanced_partition(f), true);
  }
  Rng sampled = root.split(1);
  for (auto n : sizes_or(cfg.n, {16, 64, 256})) {
    if (n <= 8) continue;
    const auto r = cfg.r.value_or(3);
    for (std::size_t i = 0; i < trials; ++i) {
      const auto y = sample_yes(n, r, sampled);
      complete(y.oracle, y.side, n <= 64 || i < 5);
    }
  }
  rec.metrics["completeness_instances"] = checked;
  rec.metrics["completeness_max_deviation"] = worst_completeness;
  rec.check("completeness", 1.0 - worst_completeness, Relation::kNear, 1.0, 1e-12);

  Rng no_rng = root.split(2);
  double worst_closed_form = 0.0, worst_gapped = 0.0;
  std::size_t gapped = 0, sound_instances = 0;
  const auto sound_r = cfg.r.value_or(3);
  if (sound_r < 2) {
    // A single matching is never connected, so there are no no-instances.
    rec.metrics["soundness_instances"] = 0;
    return;
  }
  for (auto n : sizes_or(cfg.n, {4, 8, 16, 64})) {
    const auto r = sound_r;
    for (std::size_t i = 0; i < trials; ++i) {
      const auto f = sample_no(n, r, 1e-6, no_rng, 100000).oracle;
      const double gap = spectral_gap(f);
      const double max_acc = qma_max_acceptance(f);
      worst_closed_form = std::max(worst_closed_form, std::abs(max_acc - std::max(0.5, 1.0 - gap / 4.0)));
      if (gap >= 0.1) {
        ++gapped;
        worst_gapped = std::max(worst_gapped, max_acc);
      }
      ++sound_instances;
    }
  }
  rec.metrics["soundness_instances"] = sound_instances;
  rec.metrics["soundness_gapped_instances"] = gapped;
  rec.metrics["soundness_max_acceptance_when_gap_at_least_0.1"] = worst_gapped;
  rec.check("soundness_closed_form_deviation", worst_closed_form, Relation::kLessEqual, 0.0, 1e-9);
  if (gapped) rec.check("soundness_gapped_max_acceptance", worst_gapped, Relation::kLessEqual, 1.0 - 0.025);
}

// raw-uniformity: fibers of the F_P construction.
void raw_uniformity(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto r = cfg.r.value_or(1);
  if (!cfg.n || *cfg.n == 4) {
    std::map<GraphOracle, std::uint64_t> fibers;
    std::uint64_t total = 0;
    const auto halves = all_permutations(2);
    std::function<void(std::size_t, RawPermutations&)> rec_yz = [&](std::size_t c, RawPermutations& p) {
      if (c == r) {
        ++fibers[raw_to_oracle(p)];
        ++total;
        return;
      }
      for (const auto& y : halves)
        for (const auto& z : halves) {
          p.y[c] = y;
          p.z[c] = z;
          rec_yz(c + 1, p);
        }
    };
    for (const auto& x : all_permutations(4)) {
      RawPermutations p{x, std::vector<Permutation>(r), std::vector<Permutation>(r)};
      rec_yz(0, p);
    }
    std::vector<std::uint64_t> counts;
    for (const auto& [f, c] : fibers) counts.push_back(c);
    const auto yes = enumerate_yes(4, r);
    rec.metrics["n4_tuples"] = total;
    rec.metrics["n4_fiber_counts"] = counts;
    const bool equal = counts.size() == yes.size() &&
                       std::all_of(counts.begin(), counts.end(), [&](auto c) { return c == counts.front(); });
    rec.check("n4_fibers_equal", equal ? 1.0 : 0.0, Relation::kEqual, 1.0);
    if (r == 1) rec.check("n4_fiber_size", static_cast<double>(counts.front()), Relation::kEqual, 32.0);
  }
  const auto n = cfg.n.value_or(8);
  if (n != 4 || cfg.n) {
    if (n == 4 && cfg.n) return;
    const auto yes = enumerate_yes(n, r);
    std::map<GraphOracle, std::size_t> idx;
    for (std::size_t i = 0; i < yes.size(); ++i) idx[yes[i]] = i;
    Rng rng(cfg.seed);
    const auto trials = need_positive(cfg.trials, 50'000, "trials");
    std::vector<std::uint64_t> counts(yes.size(), 0);
    for (std::size_t i = 0; i < trials; ++i) ++counts.at(idx.at(raw_to_oracle(sample_raw(n, r, rng))));
    const auto cs = chi_square(counts, std::vector<double>(yes.size(), 1.0 / static_cast<double>(yes.size())));
    rec.metrics["sampled_n"] = n;
    rec.metrics["sampled_oracles"] = yes.size();
    rec.metrics["chi_square"] = cs.statistic;
    rec.metrics["dof"] = cs.dof;
    rec.check("sampled_p_value", cs.p_value, Relation::kGreaterEqual, 0.001);
  }
}

// spectral-survey: frequency of gap >= delta for unconditioned random matchings.
void spectral_survey(const ExperimentConfig& cfg, ResultRecord& rec) {
  const auto n = need_positive(cfg.n, 256, "n");
  const auto r = need_positive(cfg.r, 3, "r");
  const auto trials = need_positive(cfg.trials, 200, "trials");
  const double delta = cfg.delta.value_or(0.1);
  Rng rng(cfg.seed);
  std::size_t hits = 0, connected = 0;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto rep = spectral(sample_matchings(n, r, rng));
    gaps.push_back(rep.gap);
    connected += rep.connected;
    hits += rep.gap >= delta;
  }
  std::sort(gaps.begin(), gaps.end());
  double mean = 0.0;
  for (double g : gaps) mean += g / static_cast<double>(trials);
  rec.metrics["connected_fraction"] = static_cast<double>(connected) / static_cast<double>(trials);
  rec.metrics["gap_mean"] = mean;
  rec.metrics["gap_min"] = gaps.front();
  rec.metrics["gap_median"] = gaps[gaps.size() / 2];
  rec.metrics["gap_max"] = gaps.back();
  // Random R-regular graphs have lambda_2(A) near 2 sqrt(R - 1).
  rec.metrics["gap_ramanujan_reference"] = 1.0 - 2.0 * std::sqrt(static_cast<double>(r) - 1.0) / static_cast<double>(r);
  rec.check("fraction_gap_at_least_delta", static_cast<double>(hits) / static_cast<double>(trials),
            Relation::kGreaterEqual, 0.95);
}

// metagraph: planted-oracle law against L_yes^rho, plus phi regularity.
void metagraph(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const GraphFixingData empty_h{{0}, {1}, {}};
  const GraphFixingData one_edge{{0, 1}, {2}, {{0, 1, 0}}};

  const auto e4 = metagraph_test(empty_h, 4, 1, MetagraphMode::kExhaustive, rng);
  rec.metrics["n4_runs"] = e4.runs;
  rec.metrics["n4_support"] = e4.support_size;
  rec.check("n4_exact_equal", e4.exact_equal ? 1.0 : 0.0, Relation::kEqual, 1.0);

  const auto e8 = metagraph_test(one_edge, 8, 1, MetagraphMode::kExhaustive, rng);
  rec.metrics["n8_runs"] = e8.runs;
  rec.metrics["n8_support"] = e8.support_size;
  rec.metrics["n8_reference"] = e8.reference_size;
  rec.check("n8_exact_equal", e8.exact_equal ? 1.0 : 0.0, Relation::kEqual, 1.0);

  const auto samples = need_positive(cfg.trials, 1'000'000, "trials");
  const auto n = cfg.n.value_or(8);
  const auto r = cfg.r.value_or(2);
  Rng mc_rng = rng.split(7);
  const auto mc = metagraph_test(one_edge, n, r, MetagraphMode::kMonteCarlo, mc_rng, samples);
  rec.metrics["mc_samples"] = mc.runs;
  rec.metrics["mc_reference_size"] = mc.reference_size;
  rec.metrics["mc_support"] = mc.support_size;
  rec.metrics["mc_chi_square"] = mc.chi_square;
  rec.metrics["mc_set_uniform"] = mc.set_uniform;
  rec.check("mc_outside", static_cast<double>(mc.outside), Relation::kEqual, 0.0);
  rec.check("mc_p_value", mc.p_value, Relation::kGreaterEqual, 0.001);

  const auto reg = regularity_test(GraphFixingData{{0, 1}, {2}, {}}, {0, 1, 0}, 8, 1);
  rec.metrics["regularity_domain"] = reg.domain;
  rec.metrics["regularity_codomain"] = reg.codomain;
  rec.metrics["regularity_preimages"] = reg.min_preimages;
  rec.check("regularity", reg.regular ? 1.0 : 0.0, Relation::kEqual, 1.0);
  const auto reg2 = regularity_test(GraphFixingData{{0, 1}, {2, 3}, {{0, 1, 0}}}, {2, 3, 0}, 8, 1);
  rec.metrics["regularity_second_edge_preimages"] = reg2.min_preimages;
  rec.check("regularity_second_edge", reg2.regular ? 1.0 : 0.0, Relation::kEqual, 1.0);
}

// walk-mixing: exact TV against N Delta_eff^t, empirical histograms, and
// spaced walk targets against uniform sampling within a side.
void walk_mixing(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const auto trials = need_positive(cfg.trials, 5, "trials");
  const auto horizon = need_positive(cfg.t, 60, "t");
  const std::size_t walks = 100'000;

  auto exact_check = [&](const GraphOracle& f, const std::string& tag, std::size_t t_emp, std::size_t emp_walks) {
    const LazyChain chain(f);
    const double nd = static_cast<double>(f.n());
    double worst = -INFINITY;
    for (std::size_t t = 1; t <= horizon; ++t)
      for (std::uint32_t s = 0; s < f.n(); ++s)
        worst = std::max(worst, chain.endpoint_tv(s, t) - nd * std::pow(chain.slem(), static_cast<double>(t)));
    std::vector<std::uint64_t> counts(f.n(), 0);
    for (std::size_t i = 0; i < emp_walks; ++i) ++counts[lazy_walk(f, 0, t_emp, rng).vertices.back()];
    const auto cs = chi_square(counts, chain.endpoint_distribution(0, t_emp));
    rec.metrics[tag + "_slem"] = chain.slem();
    rec.metrics[tag + "_chi_square"] = cs.statistic;
    rec.metrics[tag + "_dof"] = cs.dof;
    return std::pair{worst, chi_square_within_sigma(cs)};
  };

  const GraphOracle k4(4, 3, {1, 0, 3, 2, 2, 3, 0, 1, 3, 2, 1, 0});
  const auto [k4_excess, k4_hist] = exact_check(k4, "k4", 3, walks);
  rec.check("k4_tv_minus_bound", k4_excess, Relation::kLessEqual, 0.0, 1e-12);
  rec.check("k4_histogram_within_3sigma", k4_hist ? 1.0 : 0.0, Relation::kEqual, 1.0);

  const auto n = cfg.n.value_or(32);
  double worst_excess = -INFINITY;
  std::size_t hist_ok = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto f = sample_no(n, cfg.r.value_or(3), 0.1, rng).oracle;
    const auto [excess, ok] = exact_check(f, "no" + std::to_string(i), 5, 20'000);
    worst_excess = std::max(worst_excess, excess);
    hist_ok += ok;
  }
  rec.check("no_instances_tv_minus_bound", worst_excess, Relation::kLessEqual, 0.0, 1e-12);
  rec.check("no_instances_histograms_within_3sigma", static_cast<double>(hist_ok), Relation::kEqual,
            static_cast<double>(trials));

  for (std::size_t m : {16u, 32u}) {
    YesInstance y;
    do {
      y = sample_yes(m, 3, rng);
    } while (component_count(y.oracle) != 2);
    const auto wc = walk_closeness(y, 1, 1, 20'000, rng);
    const auto tag = "closeness_n" + std::to_string(m);
    rec.metrics[tag + "_spacing"] = wc.spacing;
    rec.metrics[tag + "_tv"] = wc.empirical_tv;
    rec.metrics[tag + "_sigma"] = wc.sigma;
    rec.check(tag + "_tv_minus_bound", wc.empirical_tv - wc.bound, Relation::kLessEqual, 0.0, 3.0 * wc.sigma);
  }
}

// decompose: 20 constructed distributions over S_4 and S_4 x S_4.
std::vector<PermDistribution> constructed_distributions(Rng& rng, std::size_t count) {
  std::vector<PermDistribution> out;
  const auto s4 = all_permutations(4);
  for (std::size_t i = 0; i < count; ++i) {
    const bool pair = i % 2 == 1;
    const std::vector<std::size_t> sizes = pair ? std::vector<std::size_t>{4, 4} : std::vector<std::size_t>{4};
    std::vector<PermTuple> sup;
    std::vector<double> w;
    switch (i % 5) {
      case 0: {  // random sparse support
        std::vector<PermTuple> all;
        for (const auto& a : s4) {
          if (!pair) {
            all.push_back(PermTuple({a}));
            continue;
          }
          for (const auto& b : s4) all.push_back(PermTuple({a, b}));
        }
        for (const auto& p : all)
          if (rng.below(3) != 0) {
            sup.push_back(p);
            w.push_back(static_cast<double>(1 + rng.below(6)));
          }
        break;
      }
      case 1: {  // one pinned coordinate
        const auto x = rng.below(4), v = rng.below(4);
        const auto d = PermDistribution::uniform_where(sizes, [&](const PermTuple& p) { return p(0, x) == v; });
        sup = d.support();
        w = d.weights();
        break;
      }
      case 2: {  // mixture of two pinned conditionals and a uniform tail
        const auto x = rng.below(4);
        const auto a = PermDistribution::uniform_where(sizes, [&](const PermTuple& p) { return p(0, x) == 0; });
        const auto b = PermDistribution::uniform_where(sizes, [&](const PermTuple& p) { return p(0, x) == 1; });
        const auto u = PermDistribution::uniform(sizes);
        for (const auto* d : {&a, &b, &u}) {
          const double mass = d == &u ? 0.2 : 0.4;
          for (std::size_t k = 0; k < d->support().size(); ++k) {
            sup.push_back(d->support()[k]);
            w.push_back(mass * d->weights()[k]);
          }
        }
        break;
      }
      case 3: {  // point mass plus uniform
        std::vector<Permutation> comps;
        for (auto sz : sizes) comps.push_back(sample_uniform(sz, rng));
        const auto u = PermDistribution::uniform(sizes);
        sup = u.support();
        w = u.weights();
        for (auto& x : w) x *= 0.5;
        sup.push_back(PermTuple(comps));
        w.push_back(0.5);
        break;
      }
      default: {  // two pinned coordinates
        const auto d = PermDistribution::uniform_where(sizes, [&](const PermTuple& p) {
          return p(0, 0) == 2 && p(0, 1) == 3;
        });
        sup = d.support();
        w = d.weights();
        break;
      }
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    out.emplace_back(sizes, sup, w);
  }
  return out;
}

void decompose_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const double delta = cfg.delta.value_or(0.4);
  const double eps = cfg.epsilon.value_or(0.05);
  const auto count = need_positive(cfg.trials, 20, "trials");
  const auto dists = constructed_distributions(rng, count);
  std::size_t certified = 0, cardinality = 0, components = 0;
  double worst_tv = 0.0;
  for (const auto& d : dists) {
    const auto dec = decompose(d, delta, eps, d.reference());
    certified += dec.all_certified;
    cardinality += dec.cardinality_ok;
    components += dec.components.size();
    worst_tv = std::max(worst_tv, dec.mixture_tv);
  }
  rec.metrics["distributions"] = dists.size();
  rec.metrics["components"] = components;
  rec.check("certified_forward_and_inverse", static_cast<double>(certified), Relation::kEqual,
            static_cast<double>(dists.size()));
  rec.check("mixture_tv", worst_tv, Relation::kLessEqual, eps);
  rec.check("fixed_set_cardinality", static_cast<double>(cardinality), Relation::kEqual,
            static_cast<double>(dists.size()));
}

// density-report: the inverse-density counterexample and the coupling example.
void density_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  (void)cfg;
  const auto d = inverse_density_counterexample();
  const auto fwd = density_report(d, DensityDirection::kForward);
  const auto inv = density_report(d, DensityDirection::kInverse);
  rec.metrics["counterexample_support"] = d.support().size();
  rec.metrics["forward_witness"] = fwd.witness;
  rec.metrics["inverse_witness"] = inv.witness;
  rec.check("inverse_delta", inv.delta, Relation::kGreaterEqual, 0.4);
  rec.check("forward_delta", fwd.delta, Relation::kLessEqual, 0.2);

  const auto c = coupling_example(cfg.n.value_or(3));
  const auto joint = density_report(c);
  rec.metrics["coupling_delta"] = joint.delta;
  rec.metrics["coupling_k"] = joint.k;
}

// bias-experiment: even-parity diagnostics, the exact parity distinguisher,
// and random circuits against the bias bound.
void bias_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  double worst_delta = 0.0, worst_tv = 0.0;
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto dg = EvenParitySource(n).diagnostics();
    worst_delta = std::max(worst_delta, std::abs(dg.delta - 1.0 / static_cast<double>(n)));
    worst_tv = std::max(worst_tv, std::abs(dg.tv - 0.5));
  }
  rec.check("parity_delta_deviation", worst_delta, Relation::kLessEqual, 0.0, 1e-12);
  rec.check("parity_tv_deviation", worst_tv, Relation::kLessEqual, 0.0, 1e-12);

  const auto n = cfg.n.value_or(4);
  if (n % 2) throw std::invalid_argument("bias-experiment: n must be even");
  const auto trials = need_positive(cfg.trials, 10'000, "trials");
  auto bits_of = [n](std::uint64_t v) {
    std::vector<std::uint8_t> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>((v >> i) & 1u);
    return b;
  };
  const OracleSampler uniform = [&](Rng& r) { return std::make_unique<BitStringOracle>(bits_of(r.below(1ull << n))); };
  const EvenParitySource src(n);
  const OracleSampler even = [&](Rng& r) { return std::make_unique<BitStringOracle>(src.sample(r)); };
  Rng rng(cfg.seed);
  const auto res = run_distinguisher(exact_parity_algorithm(n), even, uniform, trials, rng);
  rec.metrics["distinguisher_p_even"] = res.p_a;
  rec.metrics["distinguisher_p_uniform"] = res.p_b;
  rec.check("distinguisher_bias", res.bias, Relation::kNear, 0.5, 0.02);

  std::size_t violations = 0, probes = 0;
  Rng probe_rng = rng.split(3);
  for (std::size_t pn : {4u, 6u, 8u})
    for (std::size_t t = 1; t <= cfg.t.value_or(3); ++t) {
      violations += bias_probe(pn, t, probe_rng).violated();
      ++probes;
    }
  rec.metrics["random_circuit_probes"] = probes;
  rec.metrics["random_circuit_bound_violations"] = violations;
}

// bbbv: random <= 3-query circuits against single-point changes.
void bbbv_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const auto n = need_positive(cfg.n, 8, "n");
  const auto trials = need_positive(cfg.trials, 100, "trials");
  const auto max_t = need_positive(cfg.t, 3, "t");
  std::size_t holds = 0, tight = 0;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto t = 1 + rng.below(max_t);
    const auto alg = random_bit_query_circuit(n, t, rng);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    auto other = bits;
    other[rng.below(n)] ^= 1u;
    const auto rep = bbbv_check(alg, BitStringOracle(bits), BitStringOracle(other));
    holds += rep.holds();
    tight += rep.actual <= rep.tight_bound + 1e-12;
    if (rep.bound > 0) worst_ratio = std::max(worst_ratio, rep.actual / rep.bound);
  }
  rec.metrics["worst_deviation_over_bound"] = worst_ratio;
  rec.metrics["within_doubled_bound"] = tight;
  rec.check("within_bound", static_cast<double>(holds), Relation::kEqual, static_cast<double>(trials));
}

// game-single: interactive completeness and the improper-challenge gap.
void game_single(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const auto trials = need_positive(cfg.trials, 100, "trials");
  const auto r = need_positive(cfg.r, 8, "r");
  double worst = 0.0;
  std::size_t rounds = 0;
  for (auto n : sizes_or(cfg.n, {8, 16, 32})) {
    double eps0 = INFINITY;
    for (std::size_t i = 0; i < trials; ++i) {
      const auto f = sample_game_oracle(n, r, rng);
      const auto w = canonical_witness(f.side);
      bool circuit_done = false;
      for (std::size_t rr = 0; rr < r; ++rr) {
        if (!f.proper[rr]) continue;
        // The dense operator covers every proper round; the circuit one per oracle.
        worst = std::max(worst, std::abs(1.0 - interactive_qma_verify(f, rr, w).operator_form));
        if (!circuit_done) {
          worst = std::max(worst, std::abs(1.0 - interactive_qma_verify(f, rr, w).circuit));
          circuit_done = true;
        }
        ++rounds;
      }
      if (i < 5)
        for (std::size_t rr = 0; rr < r; ++rr)
          if (!f.proper[rr]) eps0 = std::min(eps0, 1.0 - interactive_max_acceptance(f, rr));
    }
    rec.metrics["improper_gap_n" + std::to_string(n)] = eps0;
    rec.check("improper_gap_positive_n" + std::to_string(n), eps0, Relation::kGreaterEqual, 1e-9);
  }
  rec.metrics["proper_rounds"] = rounds;
  rec.check("proper_completeness", 1.0 - worst, Relation::kNear, 1.0, 1e-12);
}

// game-multi: sequential rounds against the toy adversaries.
void game_multi(const ExperimentConfig& cfg, ResultRecord& rec) {
  Rng rng(cfg.seed);
  const auto n = need_positive(cfg.n, 16, "n");
  const auto r = need_positive(cfg.r, 16, "r");
  const auto trials = need_positive(cfg.trials, 100'000, "trials");
  const std::vector<std::size_t> ks = cfg.t ? std::vector<std::size_t>{*cfg.t} : std::vector<std::size_t>{2, 5, 10};
  std::string transcripts;
  for (const char* name : {"coin-flip", "noisy-walker", "memory", "budget-exceeder"}) {
    auto adv = make_adversary(name, 0.5);
    for (auto k : ks) {
      Rng sub = rng.split(k * 16 + std::hash<std::string>{}(name) % 16);
      const auto st = multi_instance_trials(*adv, n, r, k, trials, sub);
      const auto tag = std::string(name) + "_k" + std::to_string(k);
      rec.metrics[tag + "_rate"] = st.rate;
      rec.metrics[tag + "_delta"] = st.delta;
      rec.check(tag + "_all_win_rate", st.rate, Relation::kLessEqual, st.bound, 3.0 * st.sigma);
      Rng show = rng.split(1000 + k);
      transcripts += run_multi_instance(*adv, n, r, k, show).to_json_lines();
    }
  }
  write_artifact(cfg, rec, ".transcripts.jsonl", transcripts);
}

// adversary-counts: brute-force relation for the single-instance bound.
void adversary_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  std::string csv;
  for (auto n : sizes_or(cfg.n, {4, 6, 8, 10})) {
    const auto c = adversary_counts(n);
    const auto body = c.to_csv();
    csv += csv.empty() ? body : body.substr(body.find('\n') + 1);
    const auto tag = "n" + std::to_string(n);
    rec.metrics[tag + "_m"] = c.m_min;
    rec.metrics[tag + "_m_prime"] = c.m_prime_min;
    rec.metrics[tag + "_m_prime_unordered"] = c.m_prime_unordered;
    rec.metrics[tag + "_l_max"] = c.l_max;
    rec.metrics[tag + "_bound"] = c.bound;
    rec.check(tag + "_m", static_cast<double>(c.m_min), Relation::kEqual, static_cast<double>((n / 2) * (n / 2)));
    rec.check(tag + "_m_prime", static_cast<double>(c.m_prime_min), Relation::kEqual, static_cast<double>(n));
    rec.check(tag + "_pattern_exact", c.matches_expected ? 1.0 : 0.0, Relation::kEqual, 1.0);
  }
  write_artifact(cfg, rec, ".counts.csv", csv);
}

// witness-bound: arithmetic for guessing a W-bit witness across k rounds.
void witness_experiment(const ExperimentConfig& cfg, ResultRecord& rec) {
  const double w = static_cast<double>(cfg.witness_length.value_or(10));
  const double k = static_cast<double>(cfg.t.value_or(10'000));
  const double n = static_cast<double>(cfg.n.value_or(std::size_t{1} << 20));
  const double c = cfg.c.value_or(1.0);
  const auto b = witness_guess_bound(w, k, n, c);
  rec.metrics["per_round"] = b.per_round;
  rec.metrics["cap"] = b.cap;
  rec.metrics["remainder"] = b.remainder;
  rec.metrics["flagged"] = b.flagged;
  const auto k_max = static_cast<std::size_t>(8.0 * std::sqrt(n * (w + 1.0))) + static_cast<std::size_t>(w) + 1;
  const auto turn = witness_turning_point(w, n, c, k_max);
  rec.metrics["turning_point_k"] = turn;
  rec.metrics["turning_point_cap"] = witness_guess_bound(w, static_cast<double>(turn), n, c).cap;
  rec.check("regime_valid", b.flagged ? 0.0 : 1.0, Relation::kEqual, 1.0);
  if (!b.flagged) rec.check("remainder_nonnegative", b.remainder, Relation::kGreaterEqual, 0.0);
  const auto zero = witness_guess_bound(0, k, n, c);
  rec.check("no_witness_cap", zero.cap, Relation::kNear, 0.5 + 1.0 / std::sqrt(n) + c * k / n, 1e-15);
}

const std::vector<std::pair<std::string, Runner>>& registry() {
  static const std::vector<std::pair<std::string, Runner>> r = {
      {"qma-verify", qma_verify},
      {"spectral-survey", spectral_survey},
      {"raw-uniformity", raw_uniformity},
      {"metagraph", metagraph},
      {"walk-mixing", walk_mixing},
      {"decompose", decompose_experiment},
      {"density-report", density_experiment},
      {"bias-experiment", bias_experiment},
      {"bbbv", bbbv_experiment},
      {"game-single", game_single},
      {"game-multi", game_multi},
      {"adversary-counts", adversary_experiment},
      {"witness-bound", witness_experiment},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : registry()) v.push_back(name);
    return v;
  }();
  return names;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  for (const auto& [name, fn] : registry()) {
    if (name != config.experiment) continue;
    ResultRecord rec;
    rec.experiment = name;
    rec.params = config.to_json();
    fn(config, rec);
    return rec;
  }
  throw std::invalid_argument("unknown experiment: " + config.experiment);
}

}  // namespace qlab
