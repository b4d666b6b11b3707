#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vamcts/bench.hpp"

using namespace vamcts;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::path("/tmp") / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

const char* kBanditConfig = R"(# tiny smoke config
[experiment]
kind = BANDIT_REGRET
selectors = UCT1,UCT_V
seeds = 1,2

[bandit]
arms = bernoulli:0.9,bernoulli:0.4
horizons = 2,5
)";

}  // namespace

TEST_CASE("config parsing applies values and defaults") {
  const ExperimentConfig config = parse_experiment_config_text(kBanditConfig, "inline");
  CHECK(config.kind == ExperimentKind::BanditRegret);
  REQUIRE(config.selectors.size() == 2);
  CHECK(config.selectors[0] == SelectorRule::Uct1);
  CHECK(config.selectors[1] == SelectorRule::UctV);
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2});
  REQUIRE(config.bandit.arms.size() == 2);
  CHECK(config.bandit.arms[0].mean() == Catch::Approx(0.9).epsilon(0));
  CHECK(config.horizons == std::vector<std::int64_t>{2, 5});
  // Untouched knobs keep library defaults.
  CHECK(config.search.num_simulations == 64);
  CHECK(config.search.gamma == Catch::Approx(0.99).epsilon(0));
  CHECK(config.base_params.c2 == Catch::Approx(3.0).epsilon(0));
  CHECK(config.jobs == 1);
}

TEST_CASE("config parsing reports precise errors") {
  // Unknown keys carry their line number.
  try {
    parse_experiment_config_text("[experiment]\nkind = OVERHEAD\nbogus = 1\n", "cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg:3") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  // Malformed numbers point at the offending key.
  try {
    parse_experiment_config_text("[experiment]\nkind = BANDIT_REGRET\n[search]\ngamma = fast\n",
                                 "cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cfg:4") != std::string::npos);
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_experiment_config_text("", "cfg"), ConfigError);  // missing kind
  CHECK_THROWS_AS(parse_experiment_config_text("kind = OVERHEAD\n", "cfg"),
                  ConfigError);  // key outside a section
  CHECK_THROWS_AS(parse_experiment_config_text("[experiment\nkind = OVERHEAD\n", "cfg"),
                  ConfigError);  // malformed header
  CHECK_THROWS_AS(
      parse_experiment_config_text("[experiment]\nkind = OVERHEAD\nkind = OVERHEAD\n", "cfg"),
      ConfigError);  // duplicate key
  CHECK_THROWS_AS(parse_experiment_config_text("[experiment]\nkind = TURBO\n", "cfg"),
                  ConfigError);  // unknown kind
  CHECK_THROWS_AS(parse_experiment_config_text(
                      "[experiment]\nkind = BANDIT_REGRET\n[bandit]\nhorizons = 5,2\n", "cfg"),
                  ConfigError);  // non-increasing horizons
}

TEST_CASE("bandit experiment writes schema-true CSV and summary") {
  TempDir dir("vamcts_bench_csv");
  ExperimentConfig config = parse_experiment_config_text(kBanditConfig, "inline");
  config.output_dir = dir.path.string();
  const ExperimentReport report = run_experiment(config);

  CHECK(report.passed);
  // selectors x seeds x horizons rows, in deterministic order.
  REQUIRE(report.rows.size() == 2 * 2 * 2);
  CHECK(report.rows[0].selector == "UCT1");
  CHECK(report.rows[0].seed == 1);
  CHECK(report.rows[0].checkpoint == 2);
  CHECK(report.rows[0].metric == "regret");

  const std::vector<std::string> lines = read_lines(report.csv_path);
  REQUIRE(lines.size() == 2 + 8);
  CHECK(lines[0].rfind("# generated:", 0) == 0);
  CHECK(lines[1] == "selector,seed,checkpoint,metric,value");
  CHECK(lines[2].rfind("UCT1,1,2,regret,", 0) == 0);

  const std::vector<std::string> summary = read_lines(report.summary_path);
  REQUIRE(!summary.empty());
  CHECK(summary[0] == "experiment: BANDIT_REGRET");
  bool has_band = false;
  for (const std::string& line : summary) {
    if (line.find("mean") != std::string::npos && line.find("min") != std::string::npos &&
        line.find("max") != std::string::npos) {
      has_band = true;
    }
  }
  CHECK(has_band);
}

TEST_CASE("deterministic experiments rerun byte-identically past the timestamp") {
  ExperimentConfig config = parse_experiment_config_text(kBanditConfig, "inline");
  TempDir dir_a("vamcts_bench_rerun_a");
  TempDir dir_b("vamcts_bench_rerun_b");
  config.output_dir = dir_a.path.string();
  const ExperimentReport first = run_experiment(config);
  config.output_dir = dir_b.path.string();
  config.jobs = 2;  // a parallel run must merge into the same order
  const ExperimentReport second = run_experiment(config);

  std::vector<std::string> a = read_lines(first.csv_path);
  std::vector<std::string> b = read_lines(second.csv_path);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 1; i < a.size(); ++i) {  // skip the timestamp comment
    CHECK(a[i] == b[i]);
  }
}

TEST_CASE("self-play experiment reports policy-head checkpoints") {
  ExperimentConfig config;
  config.kind = ExperimentKind::SelfPlay;
  config.selectors = {SelectorRule::Puct};
  config.seeds = {3};
  config.search.num_simulations = 16;
  config.gridworld.width = 2;
  config.gridworld.height = 2;
  config.gridworld.goals = {GoalSpec{1, 1, 1.0}};
  config.gridworld.slip = 0.0;
  config.gridworld.max_steps = 6;
  config.self_play.iterations = 3;
  config.self_play.batch = 2;
  config.self_play.eval_episodes = 2;
  config.self_play.eval_interval = 1;
  TempDir dir("vamcts_bench_selfplay");
  config.output_dir = dir.path.string();

  const ExperimentReport report = run_experiment(config);
  REQUIRE(report.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.rows[i].metric == "policy_head_return");
    CHECK(report.rows[i].checkpoint == static_cast<std::int64_t>(i + 1));
    CHECK(report.rows[i].value >= 0.0);
    CHECK(report.rows[i].value <= 1.0);
  }
}

TEST_CASE("rpo verify experiment passes and reports error metrics") {
  ExperimentConfig config;
  config.kind = ExperimentKind::RpoVerify;
  config.rpo.trials = 20;
  TempDir dir("vamcts_bench_rpo");
  config.output_dir = dir.path.string();

  const ExperimentReport report = run_experiment(config);
  CHECK(report.passed);
  bool has_factorization = false;
  bool has_marginal = false;
  bool has_solver = false;
  for (const CsvRow& row : report.rows) {
    has_factorization |= row.metric == "factorization_max_rel_err";
    has_marginal |= row.metric == "marginal_gain_max_abs_err";
    has_solver |= row.metric == "solver_max_suboptimality";
  }
  CHECK(has_factorization);
  CHECK(has_marginal);
  CHECK(has_solver);
}

TEST_CASE("overhead measurement returns positive per-simulation costs") {
  GridworldSpec spec = ExperimentConfig::default_gridworld();
  const auto env = gridworld_env(spec);
  SearchConfig config;
  config.num_simulations = 32;
  SelectorParams params;
  const std::vector<double> ns = measure_overhead(
      *env, config, params, {SelectorRule::Uct1, SelectorRule::Puct}, /*sims=*/2048,
      /*blocks=*/2, /*seed=*/1);
  REQUIRE(ns.size() == 2);
  CHECK(ns[0] > 0.0);
  CHECK(ns[1] > 0.0);
}

TEST_CASE("output directory resolution prefers config, then env, then default") {
  CHECK(resolve_output_dir("explicit") == "explicit");
  setenv("VAMCTS_OUT_DIR", "/tmp/vamcts_envdir", 1);
  CHECK(resolve_output_dir("") == "/tmp/vamcts_envdir");
  CHECK(resolve_output_dir("explicit") == "explicit");
  unsetenv("VAMCTS_OUT_DIR");
  CHECK(resolve_output_dir("") == "vamcts-out");
}

TEST_CASE("overhead configs must include the UCT1 baseline") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Overhead;
  config.selectors = {SelectorRule::Puct};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
