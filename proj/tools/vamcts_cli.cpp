// Command-line front end: runs experiment configs, the numerical
// verification suite, and the selector overhead benchmark.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vamcts/vamcts.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& token : vamcts::detail::split(csv, ',')) {
    seeds.push_back(vamcts::detail::parse_uint(token));
  }
  if (seeds.empty()) {
    throw vamcts::ConfigError("--seeds: empty seed list");
  }
  return seeds;
}

std::vector<vamcts::SelectorRule> parse_selector_list(const std::string& csv) {
  std::vector<vamcts::SelectorRule> rules;
  for (const std::string& token : vamcts::detail::split(csv, ',')) {
    rules.push_back(vamcts::selector_rule_from_string(token));
  }
  if (rules.empty()) {
    throw vamcts::ConfigError("--selectors: empty selector list");
  }
  return rules;
}

int execute(const vamcts::ExperimentConfig& config) {
  const vamcts::ExperimentReport report = vamcts::run_experiment(config);
  std::cout << "wrote " << report.csv_path << "\n";
  std::cout << "wrote " << report.summary_path << "\n";
  if (config.kind == vamcts::ExperimentKind::RpoVerify) {
    for (const vamcts::CsvRow& row : report.rows) {
      std::cout << "  " << row.metric << " [" << row.selector
                << "] = " << vamcts::detail::format_value(row.value) << "\n";
    }
    std::cout << (report.passed ? "verification PASSED" : "verification FAILED") << "\n";
    return report.passed ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-aware MCTS benchmark driver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds_csv;
  std::string selectors_csv;
  std::string out_dir;
  int jobs = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment described by a config file");
  run->add_option("config", config_path, "path to the experiment config")->required();
  run->add_option("--seeds", seeds_csv, "comma-separated seed list (overrides config)");
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--jobs", jobs, "worker threads (overrides config)");

  std::int64_t verify_trials = 200;
  double verify_tol = 1e-7;
  CLI::App* verify = app.add_subcommand("verify", "run the numerical verification suite");
  verify->add_option("--trials", verify_trials, "random trials per invariant");
  verify->add_option("--tol", verify_tol, "solver convergence tolerance");
  verify->add_option("--seeds", seeds_csv, "comma-separated seed list (first seed is used)");
  verify->add_option("--out", out_dir, "output directory");

  std::int64_t overhead_sims = 400000;
  CLI::App* bench = app.add_subcommand("bench-overhead", "measure per-simulation selector cost");
  bench->add_option("--sims", overhead_sims, "simulations per selector");
  bench->add_option("--selectors", selectors_csv, "comma-separated selector list");
  bench->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    vamcts::ExperimentConfig config;
    if (run->parsed()) {
      config = vamcts::load_experiment_config(config_path);
    } else if (verify->parsed()) {
      config.kind = vamcts::ExperimentKind::RpoVerify;
      config.rpo.trials = verify_trials;
      config.rpo.tol = verify_tol;
    } else {
      config.kind = vamcts::ExperimentKind::Overhead;
      config.overhead.simulations_per_selector = overhead_sims;
      if (!selectors_csv.empty()) config.selectors = parse_selector_list(selectors_csv);
    }
    if (!seeds_csv.empty()) config.seeds = parse_seed_list(seeds_csv);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (jobs > 0) config.jobs = jobs;
    return execute(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
