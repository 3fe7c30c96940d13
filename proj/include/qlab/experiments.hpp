#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qlab {

// Flags and config keys are the same names. Unset numeric parameters fall back
// to per-experiment defaults, which are the desk-scale acceptance settings.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::optional<std::size_t> n;
  std::optional<std::size_t> r;
  std::optional<std::size_t> t;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> witness_length;
  std::optional<double> c;
  std::string out;  // empty: stdout
  bool csv = false;

  nlohmann::json to_json() const;
  // Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Fields set in `flags` win over this config.
  ExperimentConfig merged_with(const ExperimentConfig& flags, bool flags_set_csv) const;
};

enum class Relation { kLessEqual, kGreaterEqual, kEqual, kNear };

struct Verdict {
  std::string name;
  double value = 0.0;
  Relation relation = Relation::kNear;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ResultRecord {
  std::string experiment;
  nlohmann::json params;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::vector<Verdict> verdicts;
  std::vector<std::string> artifacts;
  double wall_clock_seconds = 0.0;  // not serialized, so outputs stay byte-identical

  // Records value against target; pass is decided here.
  const Verdict& check(std::string name, double value, Relation rel, double target, double tol = 0.0);
  bool all_pass() const;
  std::string to_json() const;
  std::string to_csv() const;
};

const std::vector<std::string>& experiment_names();

// Throws std::invalid_argument for unknown experiments or invalid parameters.
// Side files (transcripts, tables) are written next to config.out when set.
ResultRecord run_experiment(const ExperimentConfig& config);

// Writes the record to config.out (or returns it for stdout) in JSON or CSV.
std::string render(const ResultRecord& record, bool csv);

}  // namespace qlab
