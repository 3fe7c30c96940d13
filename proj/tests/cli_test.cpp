#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qlab/experiments.hpp"

namespace qlab {
namespace {

ExperimentConfig named(const std::string& name) {
  ExperimentConfig c;
  c.experiment = name;
  return c;
}

TEST(Registry, ThirteenExperiments) {
  const auto& names = experiment_names();
  EXPECT_EQ(names.size(), 13u);
  for (const char* n : {"qma-verify", "spectral-survey", "raw-uniformity", "metagraph", "walk-mixing",
                        "decompose", "density-report", "bias-experiment", "bbbv", "game-single", "game-multi",
                        "adversary-counts", "witness-bound"})
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
}

TEST(Registry, UnknownExperimentThrows) {
  EXPECT_THROW(run_experiment(named("no-such-experiment")), std::invalid_argument);
}

TEST(Experiments, RawUniformityFibersAtFour) {
  auto cfg = named("raw-uniformity");
  cfg.n = 4;
  cfg.r = 1;
  const auto rec = run_experiment(cfg);
  EXPECT_TRUE(rec.all_pass());
  EXPECT_EQ(rec.metrics.at("n4_fiber_counts"), nlohmann::ordered_json({32, 32, 32}));
  EXPECT_EQ(rec.metrics.at("n4_tuples"), 96);
  EXPECT_FALSE(rec.metrics.contains("chi_square"));
}

TEST(Experiments, QmaVerifySmallCase) {
  auto cfg = named("qma-verify");
  cfg.n = 4;
  cfg.r = 1;
  cfg.trials = 20;
  const auto rec = run_experiment(cfg);
  EXPECT_TRUE(rec.all_pass());
  EXPECT_EQ(rec.verdicts.front().name, "completeness");
  EXPECT_NEAR(rec.verdicts.front().value, 1.0, 1e-12);
}

TEST(Experiments, ZeroTrialsRejected) {
  auto cfg = named("bbbv");
  cfg.trials = 0;
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}

TEST(Experiments, WitnessBoundDefaults) {
  const auto rec = run_experiment(named("witness-bound"));
  EXPECT_TRUE(rec.all_pass());
  EXPECT_NEAR(rec.metrics.at("cap").get<double>(), 0.511023818969727, 1e-12);
  EXPECT_EQ(rec.metrics.at("flagged"), false);
}

TEST(Experiments, WitnessBoundFlagsLongWitness) {
  auto cfg = named("witness-bound");
  cfg.witness_length = 20;
  cfg.t = 10;
  const auto rec = run_experiment(cfg);
  EXPECT_EQ(rec.metrics.at("flagged"), true);
  EXPECT_FALSE(rec.all_pass());
}

TEST(Config, FlagsWinOverFile) {
  const auto file = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"experiment":"bbbv","seed":5,"n":8,"trials":50,"csv":true})"));
  ExperimentConfig flags;
  flags.trials = 7;
  const auto m = file.merged_with(flags, false);
  EXPECT_EQ(m.experiment, "bbbv");
  EXPECT_EQ(m.seed, 5u);
  EXPECT_EQ(m.n, 8u);
  EXPECT_EQ(m.trials, 7u);
  EXPECT_TRUE(m.csv);
  flags.seed = 9;
  EXPECT_EQ(file.merged_with(flags, true).seed, 9u);
  EXPECT_FALSE(file.merged_with(flags, true).csv);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"experiment":"bbbv","sed":3})")),
               std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse("[1]")), std::invalid_argument);
}

TEST(Config, JsonRoundTrip) {
  auto c = named("walk-mixing");
  c.seed = 11;
  c.n = 32;
  c.delta = 0.25;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Output, DeterministicJson) {
  auto cfg = named("bias-experiment");
  cfg.seed = 3;
  cfg.trials = 500;
  EXPECT_EQ(run_experiment(cfg).to_json(), run_experiment(cfg).to_json());
  cfg.seed = 4;
  const auto other = run_experiment(cfg).to_json();
  cfg.seed = 3;
  EXPECT_NE(run_experiment(cfg).to_json(), other);
}

TEST(Output, JsonShape) {
  const auto j = nlohmann::json::parse(run_experiment(named("density-report")).to_json());
  for (const char* k : {"experiment", "params", "metrics", "verdicts", "artifacts", "pass"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("pass"), false);  // forward delta of the counterexample is 1/2
}

TEST(Output, CsvRows) {
  auto cfg = named("adversary-counts");
  cfg.n = 4;
  const auto csv = run_experiment(cfg).to_csv();
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "kind,name,value,relation,target,tolerance,pass");
  EXPECT_NE(csv.find("metric,n4_bound,2,,,,"), std::string::npos);
  EXPECT_NE(csv.find("verdict,n4_m,4,==,4,0,1"), std::string::npos);
}

TEST(Output, ArtifactWritten) {
  const auto dir = std::filesystem::temp_directory_path() / "qlab_cli_test";
  std::filesystem::create_directories(dir);
  auto cfg = named("adversary-counts");
  cfg.n = 4;
  cfg.out = (dir / "counts").string();
  const auto rec = run_experiment(cfg);
  ASSERT_EQ(rec.artifacts.size(), 1u);
  std::ifstream is(rec.artifacts.front());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(row, "4,6,6,4,4,4,4,2,2,2,4,2,1");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace qlab
