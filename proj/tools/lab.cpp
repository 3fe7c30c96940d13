#include <chrono>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Run one qlab experiment and print its result record."};
  qlab::ExperimentConfig flags;
  std::string config_path;
  std::string experiment;

  std::string names;
  for (const auto& n : qlab::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("experiment", experiment, "One of: " + names);
  app.add_option("--seed", flags.seed, "Master seed");
  app.add_option("--n", flags.n, "Vertex count or bit-string length");
  app.add_option("--r", flags.r, "Number of colors or noise values");
  app.add_option("--t", flags.t, "Walk length, query count or round count");
  app.add_option("--delta", flags.delta, "Spectral gap or density threshold");
  app.add_option("--epsilon", flags.epsilon, "Mixture TV tolerance");
  app.add_option("--trials", flags.trials, "Sample count");
  app.add_option("--witness-length", flags.witness_length, "Witness length W in bits");
  app.add_option("--c", flags.c, "Constant c in the witness bound");
  app.add_option("--out", flags.out, "Output path; side files use it as prefix");
  auto* csv_flag = app.add_flag("--csv", flags.csv, "Emit CSV instead of JSON");
  app.add_option("--config", config_path, "JSON config; flags win");
  app.add_flag_callback("--list", [] {
    for (const auto& n : qlab::experiment_names()) std::cout << n << '\n';
    std::exit(0);
  }, "List experiments and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  flags.experiment = experiment;

  try {
    qlab::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw std::invalid_argument("cannot read config " + config_path);
      cfg = qlab::ExperimentConfig::from_json(nlohmann::json::parse(is));
    }
    cfg = cfg.merged_with(flags, csv_flag->count() > 0);
    if (cfg.experiment.empty()) throw std::invalid_argument("missing experiment name; try --list");

    const auto start = std::chrono::steady_clock::now();
    const auto record = qlab::run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto text = qlab::render(record, cfg.csv);
    if (cfg.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream os(cfg.out, std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + cfg.out);
      os << text;
    }
    std::cerr << record.experiment << ": " << (record.all_pass() ? "pass" : "fail") << " in " << secs << " s\n";
    return record.all_pass() ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << '\n';
    return 3;
  }
}
