#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "vamcts/engine.hpp"
#include "vamcts/envs.hpp"
#include "vamcts/learner.hpp"
#include "vamcts/rpo.hpp"

namespace vamcts {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind { BanditRegret, SelfPlay, RpoVerify, Overhead };

inline const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BanditRegret: return "BANDIT_REGRET";
    case ExperimentKind::SelfPlay:     return "SELF_PLAY";
    case ExperimentKind::RpoVerify:    return "RPO_VERIFY";
    case ExperimentKind::Overhead:     return "OVERHEAD";
  }
  throw std::invalid_argument("unknown experiment kind");
}

inline ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "BANDIT_REGRET") return ExperimentKind::BanditRegret;
  if (name == "SELF_PLAY")     return ExperimentKind::SelfPlay;
  if (name == "RPO_VERIFY")    return ExperimentKind::RpoVerify;
  if (name == "OVERHEAD")      return ExperimentKind::Overhead;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

struct SelfPlaySettings {
  std::int64_t iterations = 20;
  std::int64_t batch = 8;
  double eta = 0.3;
  std::int64_t eval_episodes = 16;
  std::int64_t eval_interval = 5;
  double temperature = 1.0;
};

struct OverheadSettings {
  std::int64_t simulations_per_selector = 400000;
  std::int64_t blocks = 8;
};

struct RpoVerifySettings {
  double tol = 1e-7;
  std::int64_t trials = 200;
};

inline std::vector<SelectorRule> all_selector_rules() {
  return {SelectorRule::Uct1,  SelectorRule::Puct,  SelectorRule::UctP, SelectorRule::UctV,
          SelectorRule::UctVH, SelectorRule::UctVP, SelectorRule::PuctV};
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::BanditRegret;
  std::vector<SelectorRule> selectors = all_selector_rules();
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir;  // empty -> VAMCTS_OUT_DIR env var -> "vamcts-out"
  int jobs = 1;

  SearchConfig search;           // selector constants come from base_params
  SelectorParams base_params;    // rule field is overridden per task

  BanditSpec bandit;
  std::vector<std::int64_t> horizons = {100, 1000, 10000};
  GridworldSpec gridworld = default_gridworld();
  SelfPlaySettings self_play;
  OverheadSettings overhead;
  RpoVerifySettings rpo;

  static GridworldSpec default_gridworld() {
    GridworldSpec spec;
    spec.width = 3;
    spec.height = 3;
    spec.goals = {GoalSpec{2, 2, 1.0}};
    spec.slip = 0.2;
    spec.max_steps = 32;
    return spec;
  }

  void validate() const {
    if (selectors.empty()) {
      throw std::invalid_argument("ExperimentConfig: need at least one selector");
    }
    if (seeds.empty()) {
      throw std::invalid_argument("ExperimentConfig: need at least one seed");
    }
    if (jobs < 1) {
      throw std::invalid_argument("ExperimentConfig: jobs must be >= 1");
    }
    search.validate();
    base_params.validate();
    switch (kind) {
      case ExperimentKind::BanditRegret: {
        bandit.validate();
        if (horizons.empty()) {
          throw std::invalid_argument("ExperimentConfig: bandit run needs horizons");
        }
        for (std::size_t i = 0; i < horizons.size(); ++i) {
          if (horizons[i] < 1 || (i > 0 && horizons[i] <= horizons[i - 1])) {
            throw std::invalid_argument("ExperimentConfig: horizons must be increasing");
          }
        }
        break;
      }
      case ExperimentKind::SelfPlay: {
        gridworld.validate();
        if (self_play.iterations < 1 || self_play.batch < 1 || self_play.eval_episodes < 1 ||
            self_play.eval_interval < 1) {
          throw std::invalid_argument("ExperimentConfig: self-play counts must be >= 1");
        }
        if (!(self_play.eta >= 0.0 && self_play.eta <= 1.0)) {
          throw std::invalid_argument("ExperimentConfig: eta must lie in [0,1]");
        }
        break;
      }
      case ExperimentKind::Overhead: {
        gridworld.validate();
        if (overhead.simulations_per_selector < 1 || overhead.blocks < 1) {
          throw std::invalid_argument("ExperimentConfig: overhead counts must be >= 1");
        }
        bool has_uct1 = false;
        for (SelectorRule rule : selectors) has_uct1 |= rule == SelectorRule::Uct1;
        if (!has_uct1) {
          throw std::invalid_argument(
              "ExperimentConfig: OVERHEAD reports ratios against UCT1; include it");
        }
        break;
      }
      case ExperimentKind::RpoVerify: {
        if (!(rpo.tol > 0.0) || rpo.trials < 1) {
          throw std::invalid_argument("ExperimentConfig: rpo verify needs tol > 0, trials >= 1");
        }
        break;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Config file parsing (flat key-value with [section] headers)
// ---------------------------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct IniEntry {
  std::string value;
  int line = 0;
};

struct IniFile {
  std::string source;
  // section -> key -> entry
  std::map<std::string, std::map<std::string, IniEntry>> sections;
};

inline std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline IniFile parse_ini(const std::string& text, const std::string& source) {
  IniFile file;
  file.source = source;
  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": empty section name");
      }
      file.sections[section];  // register even if empty
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    }
    if (section.empty()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": key outside any [section]");
    }
    auto [it, inserted] = file.sections[section].emplace(key, IniEntry{value, line_no});
    if (!inserted) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "' in [" + section + "]");
    }
  }
  return file;
}

/// Typed reader over one parsed file; every get marks the key consumed so
/// unknown keys can be rejected afterwards with their line numbers.
class ConfigReader {
 public:
  explicit ConfigReader(IniFile file) : file_(std::move(file)) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto sec = file_.sections.find(section);
    return sec != file_.sections.end() && sec->second.count(key) != 0;
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const auto sec = file_.sections.find(section);
    if (sec == file_.sections.end()) return std::nullopt;
    const auto it = sec->second.find(key);
    if (it == sec->second.end()) return std::nullopt;
    consumed_.insert(section + "\n" + key);
    return it->second.value;
  }

  template <typename T, typename Parser>
  T get(const std::string& section, const std::string& key, T fallback, Parser parser) {
    const std::optional<std::string> value = raw(section, key);
    if (!value) return fallback;
    try {
      return parser(*value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(location(section, key) + ": " + e.what());
    }
  }

  std::string location(const std::string& section, const std::string& key) const {
    int line = 0;
    const auto sec = file_.sections.find(section);
    if (sec != file_.sections.end()) {
      const auto it = sec->second.find(key);
      if (it != sec->second.end()) line = it->second.line;
    }
    return file_.source + ":" + std::to_string(line) + ": [" + section + "] " + key;
  }

  void reject_unknown() const {
    static const std::set<std::string> known_sections = {
        "experiment", "search", "bandit", "gridworld", "selfplay", "overhead", "rpo"};
    for (const auto& [section, entries] : file_.sections) {
      if (known_sections.count(section) == 0) {
        throw ConfigError(file_.source + ": unknown section [" + section + "]");
      }
      for (const auto& [key, entry] : entries) {
        if (consumed_.count(section + "\n" + key) == 0) {
          throw ConfigError(file_.source + ":" + std::to_string(entry.line) + ": unknown key '" +
                            key + "' in [" + section + "]");
        }
      }
    }
  }

 private:
  IniFile file_;
  std::set<std::string> consumed_;
};

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters after number");
  return v;
}

inline std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters after integer");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size() || (!s.empty() && s[0] == '-')) {
    throw std::invalid_argument("expected a nonnegative integer");
  }
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::invalid_argument("expected true/false");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream stream(s);
  while (std::getline(stream, current, sep)) {
    const std::string token = trim(current);
    if (!token.empty()) parts.push_back(token);
  }
  return parts;
}

inline ArmSpec parse_arm(const std::string& token) {
  const std::vector<std::string> fields = split(token, ':');
  if (fields.empty()) throw std::invalid_argument("empty arm spec");
  if (fields[0] == "bernoulli") {
    if (fields.size() != 2) throw std::invalid_argument("bernoulli arm wants 'bernoulli:p'");
    return ArmSpec::bernoulli(parse_double(fields[1]));
  }
  if (fields[0] == "gaussian" || fields[0] == "truncated_gaussian") {
    if (fields.size() != 3) throw std::invalid_argument("gaussian arm wants 'gaussian:mu:sigma'");
    return ArmSpec::truncated_gaussian(parse_double(fields[1]), parse_double(fields[2]));
  }
  throw std::invalid_argument("unknown arm kind '" + fields[0] + "'");
}

inline GoalSpec parse_goal(const std::string& token) {
  // "x,y:reward" with the reward optional (default 1).
  const std::size_t colon = token.find(':');
  const std::string coords = colon == std::string::npos ? token : token.substr(0, colon);
  const std::vector<std::string> xy = split(coords, ',');
  if (xy.size() != 2) throw std::invalid_argument("goal wants 'x,y' or 'x,y:reward'");
  GoalSpec goal;
  goal.x = static_cast<int>(parse_int(xy[0]));
  goal.y = static_cast<int>(parse_int(xy[1]));
  goal.reward = colon == std::string::npos ? 1.0 : parse_double(token.substr(colon + 1));
  return goal;
}

}  // namespace detail

/// Parses the documented flat key-value format. `source` names the input in
/// error messages ("file:line: [section] key: what went wrong").
inline ExperimentConfig parse_experiment_config_text(const std::string& text,
                                                     const std::string& source) {
  detail::ConfigReader reader(detail::parse_ini(text, source));
  ExperimentConfig config;

  if (!reader.has("experiment", "kind")) {
    throw ConfigError(source + ": missing required [experiment] kind");
  }
  config.kind = reader.get<ExperimentKind>(
      "experiment", "kind", config.kind,
      [](const std::string& s) { return experiment_kind_from_string(s); });
  config.selectors = reader.get<std::vector<SelectorRule>>(
      "experiment", "selectors", config.selectors, [](const std::string& s) {
        std::vector<SelectorRule> rules;
        for (const std::string& token : detail::split(s, ',')) {
          rules.push_back(selector_rule_from_string(token));
        }
        if (rules.empty()) throw std::invalid_argument("empty selector list");
        return rules;
      });
  config.seeds = reader.get<std::vector<std::uint64_t>>(
      "experiment", "seeds", config.seeds, [](const std::string& s) {
        std::vector<std::uint64_t> seeds;
        for (const std::string& token : detail::split(s, ',')) {
          seeds.push_back(detail::parse_uint(token));
        }
        if (seeds.empty()) throw std::invalid_argument("empty seed list");
        return seeds;
      });
  config.output_dir =
      reader.get<std::string>("experiment", "output", config.output_dir,
                              [](const std::string& s) { return s; });
  config.jobs = static_cast<int>(reader.get<std::int64_t>("experiment", "jobs", config.jobs,
                                                          detail::parse_int));

  config.search.num_simulations = reader.get<std::int64_t>(
      "search", "num_simulations", config.search.num_simulations, detail::parse_int);
  config.search.gamma =
      reader.get<double>("search", "gamma", config.search.gamma, detail::parse_double);
  config.search.normalize_values = reader.get<bool>(
      "search", "normalize_values", config.search.normalize_values, detail::parse_bool);
  config.search.variance_source = reader.get<VarianceSource>(
      "search", "variance_source", config.search.variance_source, [](const std::string& s) {
        if (s == "RAW") return VarianceSource::Raw;
        if (s == "NORMALIZED") return VarianceSource::Normalized;
        throw std::invalid_argument("expected RAW or NORMALIZED");
      });
  config.base_params.c =
      reader.get<double>("search", "c", config.base_params.c, detail::parse_double);
  config.base_params.c1 =
      reader.get<double>("search", "c1", config.base_params.c1, detail::parse_double);
  config.base_params.c2 =
      reader.get<double>("search", "c2", config.base_params.c2, detail::parse_double);

  config.bandit.arms = reader.get<std::vector<ArmSpec>>(
      "bandit", "arms", config.bandit.arms, [](const std::string& s) {
        std::vector<ArmSpec> arms;
        for (const std::string& token : detail::split(s, ',')) {
          arms.push_back(detail::parse_arm(token));
        }
        return arms;
      });
  config.horizons = reader.get<std::vector<std::int64_t>>(
      "bandit", "horizons", config.horizons, [](const std::string& s) {
        std::vector<std::int64_t> horizons;
        for (const std::string& token : detail::split(s, ',')) {
          horizons.push_back(detail::parse_int(token));
        }
        return horizons;
      });

  config.gridworld.width = static_cast<int>(reader.get<std::int64_t>(
      "gridworld", "width", config.gridworld.width, detail::parse_int));
  config.gridworld.height = static_cast<int>(reader.get<std::int64_t>(
      "gridworld", "height", config.gridworld.height, detail::parse_int));
  config.gridworld.slip =
      reader.get<double>("gridworld", "slip", config.gridworld.slip, detail::parse_double);
  config.gridworld.max_steps = static_cast<int>(reader.get<std::int64_t>(
      "gridworld", "max_steps", config.gridworld.max_steps, detail::parse_int));
  config.gridworld.goals = reader.get<std::vector<GoalSpec>>(
      "gridworld", "goals", config.gridworld.goals, [](const std::string& s) {
        std::vector<GoalSpec> goals;
        for (const std::string& token : detail::split(s, ';')) {
          goals.push_back(detail::parse_goal(token));
        }
        return goals;
      });
  const auto start = reader.get<std::pair<int, int>>(
      "gridworld", "start", {config.gridworld.start_x, config.gridworld.start_y},
      [](const std::string& s) {
        const std::vector<std::string> xy = detail::split(s, ',');
        if (xy.size() != 2) throw std::invalid_argument("start wants 'x,y'");
        return std::pair<int, int>{static_cast<int>(detail::parse_int(xy[0])),
                                   static_cast<int>(detail::parse_int(xy[1]))};
      });
  config.gridworld.start_x = start.first;
  config.gridworld.start_y = start.second;

  config.self_play.iterations = reader.get<std::int64_t>(
      "selfplay", "iterations", config.self_play.iterations, detail::parse_int);
  config.self_play.batch =
      reader.get<std::int64_t>("selfplay", "batch", config.self_play.batch, detail::parse_int);
  config.self_play.eta =
      reader.get<double>("selfplay", "eta", config.self_play.eta, detail::parse_double);
  config.self_play.eval_episodes = reader.get<std::int64_t>(
      "selfplay", "eval_episodes", config.self_play.eval_episodes, detail::parse_int);
  config.self_play.eval_interval = reader.get<std::int64_t>(
      "selfplay", "eval_interval", config.self_play.eval_interval, detail::parse_int);
  config.self_play.temperature = reader.get<double>(
      "selfplay", "temperature", config.self_play.temperature, detail::parse_double);

  config.overhead.simulations_per_selector =
      reader.get<std::int64_t>("overhead", "simulations_per_selector",
                               config.overhead.simulations_per_selector, detail::parse_int);
  config.overhead.blocks = reader.get<std::int64_t>("overhead", "blocks",
                                                    config.overhead.blocks, detail::parse_int);

  config.rpo.tol = reader.get<double>("rpo", "tol", config.rpo.tol, detail::parse_double);
  config.rpo.trials =
      reader.get<std::int64_t>("rpo", "trials", config.rpo.trials, detail::parse_int);

  reader.reject_unknown();
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config_text(text.str(), path);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CsvRow {
  std::string selector;
  std::uint64_t seed = 0;
  std::int64_t checkpoint = 0;
  std::string metric;
  double value = 0.0;
};

struct ExperimentReport {
  bool passed = true;
  std::vector<CsvRow> rows;
  std::string csv_path;
  std::string summary_path;
};

namespace detail {

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << "# generated: " << iso_timestamp() << "\n";
  out << "selector,seed,checkpoint,metric,value\n";
  for (const CsvRow& row : rows) {
    out << row.selector << ',' << row.seed << ',' << row.checkpoint << ',' << row.metric << ','
        << format_value(row.value) << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

/// Per-selector mean and min-max band across seeds, grouped by metric and
/// checkpoint, in first-appearance order.
inline void write_summary(const std::string& path, ExperimentKind kind,
                          const std::vector<CsvRow>& rows) {
  struct Band {
    double sum = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::int64_t count = 0;
  };
  std::vector<std::tuple<std::string, std::int64_t, std::string>> order;  // metric, cp, selector
  std::map<std::tuple<std::string, std::int64_t, std::string>, Band> bands;
  for (const CsvRow& row : rows) {
    const auto key = std::make_tuple(row.metric, row.checkpoint, row.selector);
    auto [it, inserted] = bands.emplace(key, Band{});
    if (inserted) order.push_back(key);
    Band& band = it->second;
    if (band.count == 0) {
      band.min = band.max = row.value;
    } else {
      band.min = std::min(band.min, row.value);
      band.max = std::max(band.max, row.value);
    }
    band.sum += row.value;
    band.count += 1;
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out << "experiment: " << to_string(kind) << "\n";
  std::string last_group;
  for (const auto& key : order) {
    const Band& band = bands.at(key);
    const std::string group =
        std::get<0>(key) + " @ checkpoint " + std::to_string(std::get<1>(key));
    if (group != last_group) {
      out << group << "\n";
      last_group = group;
    }
    out << "  " << std::get<2>(key) << "  mean " << format_value(band.sum / band.count)
        << "  min " << format_value(band.min) << "  max " << format_value(band.max) << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

/// Fixed-size task pool: workers claim indices; results land by index so the
/// merge order never depends on scheduling.
inline std::vector<std::vector<CsvRow>> run_tasks(
    std::size_t count, int jobs, const std::function<std::vector<CsvRow>(std::size_t)>& task) {
  std::vector<std::vector<CsvRow>> results(count);
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = task(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          results[i] = task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& thread : threads) thread.join();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Overhead measurement
// ---------------------------------------------------------------------------

/// Raw wall-clock rates (ns per simulation), one row per rule, one column
/// per interleaved block. Identical workloads: the same searches (same
/// seeds, same environment) run for every rule, round-robin within each
/// block so slow machine drift hits all rules alike. Columns of the same
/// block are directly comparable (pairable) across rules.
inline std::vector<std::vector<double>> measure_overhead_blocks(
    const EnvironmentModel& env, const SearchConfig& base, const SelectorParams& params,
    const std::vector<SelectorRule>& rules, std::int64_t simulations_per_rule,
    std::int64_t blocks, std::uint64_t seed) {
  if (rules.empty() || simulations_per_rule < 1 || blocks < 1) {
    throw std::invalid_argument("measure_overhead: empty workload");
  }
  const StateId root = env.initial_state();
  const std::int64_t searches_per_block = std::max<std::int64_t>(
      1, simulations_per_rule / (blocks * std::max<std::int64_t>(1, base.num_simulations)));

  std::vector<SearchConfig> configs;
  for (SelectorRule rule : rules) {
    SearchConfig config = base;
    config.selector = params;
    config.selector.rule = rule;
    configs.push_back(config);
  }
  // Warmup: a quarter block per rule, untimed, to settle caches and clocks.
  const std::int64_t warmup = std::max<std::int64_t>(1, searches_per_block / 4);
  for (const SearchConfig& config : configs) {
    for (std::int64_t k = 0; k < warmup; ++k) {
      run_search(env, root, config, seed + static_cast<std::uint64_t>(k));
    }
  }

  std::vector<std::vector<double>> block_rates(rules.size());
  for (std::int64_t block = 0; block < blocks; ++block) {
    for (std::size_t slot = 0; slot < rules.size(); ++slot) {
      // Rotate which rule goes first in each block so position-in-block
      // effects (cache state, frequency ramps) average out across rules.
      const std::size_t r = (slot + static_cast<std::size_t>(block)) % rules.size();
      const auto begin = std::chrono::steady_clock::now();
      for (std::int64_t k = 0; k < searches_per_block; ++k) {
        // Same seed per (block, k) across rules: identical workloads.
        const std::uint64_t search_seed =
            seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(block * searches_per_block + k + 1);
        run_search(env, root, configs[r], search_seed);
      }
      const auto end = std::chrono::steady_clock::now();
      const double ns = std::chrono::duration<double, std::nano>(end - begin).count();
      block_rates[r].push_back(ns / static_cast<double>(searches_per_block *
                                                        base.num_simulations));
    }
  }
  return block_rates;
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

/// Per-rule median over the interleaved blocks.
inline std::vector<double> measure_overhead(const EnvironmentModel& env,
                                            const SearchConfig& base,
                                            const SelectorParams& params,
                                            const std::vector<SelectorRule>& rules,
                                            std::int64_t simulations_per_rule,
                                            std::int64_t blocks, std::uint64_t seed) {
  const std::vector<std::vector<double>> block_rates =
      measure_overhead_blocks(env, base, params, rules, simulations_per_rule, blocks, seed);
  std::vector<double> ns_per_sim(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    ns_per_sim[r] = median_of(block_rates[r]);
  }
  return ns_per_sim;
}

// ---------------------------------------------------------------------------
// RPO verification suite
// ---------------------------------------------------------------------------

namespace detail {

inline ChildStatsView random_small_view(std::mt19937_64& rng, std::size_t max_actions = 8,
                                        std::int64_t max_visits_per_action = 10) {
  const std::size_t num_actions =
      2 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_actions - 1));
  std::vector<double> q(num_actions), sigma(num_actions), prior(num_actions);
  std::vector<std::int64_t> n(num_actions);
  for (std::size_t a = 0; a < num_actions; ++a) {
    q[a] = uniform01(rng);
    n[a] = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(max_visits_per_action + 1));
    sigma[a] = 2.0 * uniform01(rng);
    prior[a] = 0.05 + uniform01(rng);
  }
  return make_view(std::move(q), std::move(n), std::move(sigma),
                   PriorDistribution(std::move(prior)));
}

}  // namespace detail

/// Runs the numerical invariant suite behind the `verify` subcommand:
/// factorization identities, generator-derivative identities, divergence
/// nonnegativity, marginal-gain agreement for all rules, and solver
/// optimality/concavity spot checks. Returns the measured error rows and
/// whether every bound held.
inline ExperimentReport run_rpo_verify_suite(const RpoVerifySettings& settings,
                                             const std::vector<SelectorRule>& rules,
                                             const SelectorParams& base_params,
                                             std::uint64_t seed) {
  ExperimentReport report;
  std::mt19937_64 rng(seed);
  bool passed = true;

  // 1) Exploration-bonus factorization, exact to floating-point accuracy.
  for (SelectorRule rule : rules) {
    double max_rel = 0.0;
    for (std::int64_t t = 0; t < settings.trials; ++t) {
      const std::size_t num_actions =
          2 + static_cast<std::size_t>(uniform01(rng) * 63.0);
      const std::int64_t total =
          static_cast<std::int64_t>(uniform01(rng) * 1.0e6);
      const std::int64_t n_a =
          static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(total + 1));
      const double sigma_a = 5.0 * uniform01(rng);
      const double prior_a = 0.05 + 0.9 * uniform01(rng);
      const FactorizeCheck check = factorize_check(rule, total, std::min(n_a, total),
                                                   num_actions, sigma_a, base_params, prior_a);
      const double rel = std::abs(check.bonus_direct - check.bonus_factored) /
                         std::max(1.0, std::abs(check.bonus_direct));
      max_rel = std::max(max_rel, rel);
    }
    passed &= max_rel <= 1e-12;
    report.rows.push_back({to_string(rule), seed, 0, "factorization_max_rel_err", max_rel});
  }

  // 2) Generator-derivative identity f' = -h by central differences.
  for (DivergenceKind kind :
       {DivergenceKind::Hellinger, DivergenceKind::Kl, DivergenceKind::VarianceWeightedHellinger,
        DivergenceKind::VarianceWeightedKl}) {
    double max_rel = 0.0;
    for (std::int64_t t = 0; t < settings.trials; ++t) {
      const double r = 0.01 + (100.0 - 0.01) * uniform01(rng);
      const double s = is_variance_weighted(kind) ? 0.1 + 4.9 * uniform01(rng) : 0.0;
      const double h = 1e-6 * std::max(1.0, r);
      const double diff =
          (generator_value(kind, r + h, s) - generator_value(kind, r - h, s)) / (2.0 * h);
      const double expected = -generator_shape(kind, r, s);
      const double rel = std::abs(diff - expected) / std::max(1.0, std::abs(expected));
      max_rel = std::max(max_rel, rel);
    }
    passed &= max_rel <= 1e-6;
    report.rows.push_back(
        {std::string("ALL"), seed, 0, std::string("generator_derivative_err_") + to_string(kind),
         max_rel});
  }

  // 3) Divergence nonnegativity and identity at y = prior.
  {
    double min_div = 0.0;
    double max_self = 0.0;
    for (std::int64_t t = 0; t < settings.trials; ++t) {
      const std::size_t num_actions = 2 + static_cast<std::size_t>(uniform01(rng) * 7.0);
      std::vector<double> p(num_actions), y(num_actions);
      for (std::size_t a = 0; a < num_actions; ++a) {
        p[a] = 0.01 + uniform01(rng);
        y[a] = 0.01 + uniform01(rng);
      }
      const PriorDistribution prior(p);
      const SimplexPoint point = make_simplex_point(y);
      for (DivergenceKind kind : {DivergenceKind::Hellinger, DivergenceKind::Kl}) {
        min_div = std::min(min_div, divergence(kind, prior, point.y));
        max_self = std::max(max_self, std::abs(divergence(kind, prior, prior.probs())));
      }
    }
    passed &= min_div >= -1e-12 && max_self <= 1e-12;
    report.rows.push_back({"ALL", seed, 0, "divergence_min_value", min_div});
    report.rows.push_back({"ALL", seed, 0, "divergence_max_self_value", max_self});
  }

  // 4) Marginal-gain agreement: closed-form scores vs objective derivatives.
  for (SelectorRule rule : rules) {
    double max_abs = 0.0;
    for (std::int64_t t = 0; t < settings.trials; ++t) {
      const ChildStatsView view = detail::random_small_view(rng);
      const std::size_t a = static_cast<std::size_t>(uniform01(rng) * view.size());
      const MarginalGainCheck check =
          marginal_gain_check(rule, view, base_params, std::min(a, view.size() - 1), 1e-6);
      max_abs = std::max(max_abs, std::abs(check.selector_score - check.rpo_marginal));
    }
    passed &= max_abs <= 1e-6;
    report.rows.push_back({to_string(rule), seed, 0, "marginal_gain_max_abs_err", max_abs});
  }

  // 5) Solver: returned points must dominate random feasible points, and the
  // objective must verify concave along random chords.
  {
    double max_subopt = 0.0;
    double max_concavity_violation = 0.0;
    const std::int64_t solves = std::min<std::int64_t>(settings.trials, 25);
    for (std::int64_t t = 0; t < solves; ++t) {
      const ChildStatsView view = detail::random_small_view(rng);
      const SelectorRule rule = rules[static_cast<std::size_t>(t) % rules.size()];
      const RpoObjective obj = rpo_objective_for(rule, view, base_params);
      const SimplexPoint solved = solve_rpo(obj, settings.tol);
      const double solved_value = objective_value(obj, solved);
      for (int probe = 0; probe < 32; ++probe) {
        std::vector<double> ya(view.size()), yb(view.size());
        for (std::size_t i = 0; i < view.size(); ++i) {
          ya[i] = 0.01 + uniform01(rng);
          yb[i] = 0.01 + uniform01(rng);
        }
        const SimplexPoint pa = make_simplex_point(ya);
        const SimplexPoint pb = make_simplex_point(yb);
        const double va = objective_value(obj, pa);
        const double vb = objective_value(obj, pb);
        max_subopt = std::max(max_subopt, std::max(va, vb) - solved_value);
        std::vector<double> mid(view.size());
        for (std::size_t i = 0; i < view.size(); ++i) mid[i] = 0.5 * (pa.y[i] + pb.y[i]);
        const double vm = objective_value(obj, SimplexPoint{std::move(mid)});
        max_concavity_violation =
            std::max(max_concavity_violation, 0.5 * (va + vb) - vm);
      }
    }
    passed &= max_subopt <= 1e-5 && max_concavity_violation <= 1e-9;
    report.rows.push_back({"ALL", seed, 0, "solver_max_suboptimality", max_subopt});
    report.rows.push_back({"ALL", seed, 0, "concavity_violation_max", max_concavity_violation});
  }

  report.passed = passed;
  return report;
}

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

inline std::string resolve_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("VAMCTS_OUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "vamcts-out";
}

inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path out_dir = resolve_output_dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " +
                             ec.message());
  }

  ExperimentReport report;
  switch (config.kind) {
    case ExperimentKind::BanditRegret: {
      const std::size_t task_count = config.selectors.size() * config.seeds.size();
      auto results = detail::run_tasks(task_count, config.jobs, [&](std::size_t index) {
        const SelectorRule rule = config.selectors[index / config.seeds.size()];
        const std::uint64_t seed = config.seeds[index % config.seeds.size()];
        SelectorParams params = config.base_params;
        params.rule = rule;
        const std::vector<double> curve =
            cumulative_regret_curve(config.bandit, params, config.horizons, seed);
        std::vector<CsvRow> rows;
        for (std::size_t i = 0; i < config.horizons.size(); ++i) {
          rows.push_back({to_string(rule), seed, config.horizons[i], "regret", curve[i]});
        }
        return rows;
      });
      for (auto& rows : results) {
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      }
      break;
    }
    case ExperimentKind::SelfPlay: {
      const std::size_t task_count = config.selectors.size() * config.seeds.size();
      auto results = detail::run_tasks(task_count, config.jobs, [&](std::size_t index) {
        const SelectorRule rule = config.selectors[index / config.seeds.size()];
        const std::uint64_t seed = config.seeds[index % config.seeds.size()];
        const auto env = gridworld_env(config.gridworld);
        TabularModel model(env->num_actions(), config.self_play.eta);
        SearchConfig search = config.search;
        search.selector = config.base_params;
        search.selector.rule = rule;
        std::mt19937_64 chain(seed);
        std::vector<CsvRow> rows;
        for (std::int64_t iteration = 1; iteration <= config.self_play.iterations; ++iteration) {
          self_play_iteration(*env, model, search, config.self_play.batch, chain(),
                              config.self_play.temperature);
          if (iteration % config.self_play.eval_interval == 0 ||
              iteration == config.self_play.iterations) {
            const double value = evaluate_policy_head(model, *env, config.self_play.eval_episodes,
                                                      chain(), search.gamma);
            rows.push_back({to_string(rule), seed, iteration, "policy_head_return", value});
          }
        }
        return rows;
      });
      for (auto& rows : results) {
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
      }
      break;
    }
    case ExperimentKind::Overhead: {
      const auto env = gridworld_env(config.gridworld);
      const std::vector<double> ns_per_sim = measure_overhead(
          *env, config.search, config.base_params, config.selectors,
          config.overhead.simulations_per_selector, config.overhead.blocks, config.seeds[0]);
      double baseline = 0.0;
      for (std::size_t r = 0; r < config.selectors.size(); ++r) {
        if (config.selectors[r] == SelectorRule::Uct1) baseline = ns_per_sim[r];
      }
      for (std::size_t r = 0; r < config.selectors.size(); ++r) {
        report.rows.push_back({to_string(config.selectors[r]), config.seeds[0], 0,
                               "ns_per_simulation", ns_per_sim[r]});
      }
      for (std::size_t r = 0; r < config.selectors.size(); ++r) {
        report.rows.push_back({to_string(config.selectors[r]), config.seeds[0], 0,
                               "ratio_vs_uct1", ns_per_sim[r] / baseline});
      }
      break;
    }
    case ExperimentKind::RpoVerify: {
      ExperimentReport verify = run_rpo_verify_suite(config.rpo, config.selectors,
                                                     config.base_params, config.seeds[0]);
      report.passed = verify.passed;
      report.rows = std::move(verify.rows);
      break;
    }
  }

  report.csv_path = (out_dir / "results.csv").string();
  report.summary_path = (out_dir / "summary.txt").string();
  detail::write_csv(report.csv_path, report.rows);
  detail::write_summary(report.summary_path, config.kind, report.rows);
  return report;
}

}  // namespace vamcts
