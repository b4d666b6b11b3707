#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vamcts/core.hpp"
#include "vamcts/engine.hpp"
#include "vamcts/env.hpp"

namespace vamcts {

/// Tabular stand-in for the value/policy network: one (value, prior) entry
/// per visited state, updated by exponential moving averages so eta plays
/// the learning-rate role.
class TabularModel {
 public:
  struct Entry {
    double value = 0.0;
    PriorDistribution prior;
  };

  explicit TabularModel(std::size_t num_actions, double learning_rate = 1e-3)
      : num_actions_(num_actions), learning_rate_(learning_rate) {
    if (num_actions_ == 0) {
      throw std::invalid_argument("TabularModel: empty action set");
    }
    if (!(learning_rate_ >= 0.0 && learning_rate_ <= 1.0)) {
      throw std::invalid_argument("TabularModel: learning rate must lie in [0,1]");
    }
  }

  std::size_t num_actions() const { return num_actions_; }
  double learning_rate() const { return learning_rate_; }
  std::size_t size() const { return table_.size(); }
  bool contains(StateId state) const { return table_.count(state) != 0; }

  double value(StateId state) const {
    const auto it = table_.find(state);
    return it == table_.end() ? 0.0 : it->second.value;
  }

  PriorDistribution prior(StateId state) const {
    const auto it = table_.find(state);
    return it == table_.end() ? PriorDistribution::uniform(num_actions_) : it->second.prior;
  }

  /// prior <- (1-eta)*prior + eta*visit_dist, value <- value + eta*(G - value).
  /// Unvisited states lazily initialize at (0, uniform).
  void update(StateId state, const std::vector<double>& visit_distribution,
              double return_target) {
    if (visit_distribution.size() != num_actions_) {
      throw std::invalid_argument("TabularModel: visit distribution length mismatch");
    }
    Entry& entry = lookup(state);
    std::vector<double> blended(num_actions_);
    for (std::size_t a = 0; a < num_actions_; ++a) {
      blended[a] = (1.0 - learning_rate_) * entry.prior[a] +
                   learning_rate_ * visit_distribution[a];
    }
    entry.prior = PriorDistribution(std::move(blended));
    entry.value += learning_rate_ * (return_target - entry.value);
  }

  /// Flat text checkpoint: header, then one line per state — state id,
  /// value, prior entries — at round-trip precision, sorted by state.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("TabularModel: cannot open for writing: " + path);
    }
    out << "vamcts-tabular-model 1\n";
    out << "num_actions " << num_actions_ << "\n";
    out << "learning_rate " << format(learning_rate_) << "\n";
    out << "states " << table_.size() << "\n";
    const std::map<StateId, Entry> sorted(table_.begin(), table_.end());
    for (const auto& [state, entry] : sorted) {
      out << state << ' ' << format(entry.value);
      for (std::size_t a = 0; a < num_actions_; ++a) out << ' ' << format(entry.prior[a]);
      out << "\n";
    }
    if (!out) {
      throw std::runtime_error("TabularModel: write failed: " + path);
    }
  }

  static TabularModel load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("TabularModel: cannot open for reading: " + path);
    }
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "vamcts-tabular-model" || version != 1) {
      throw std::runtime_error("TabularModel: unrecognized checkpoint header: " + path);
    }
    std::string key;
    std::size_t num_actions = 0;
    double learning_rate = 0.0;
    std::size_t num_states = 0;
    in >> key >> num_actions;
    if (!in || key != "num_actions") {
      throw std::runtime_error("TabularModel: malformed num_actions line: " + path);
    }
    in >> key >> learning_rate;
    if (!in || key != "learning_rate") {
      throw std::runtime_error("TabularModel: malformed learning_rate line: " + path);
    }
    in >> key >> num_states;
    if (!in || key != "states") {
      throw std::runtime_error("TabularModel: malformed states line: " + path);
    }
    TabularModel model(num_actions, learning_rate);
    for (std::size_t i = 0; i < num_states; ++i) {
      StateId state = 0;
      Entry entry;
      std::vector<double> probs(num_actions);
      in >> state >> entry.value;
      for (std::size_t a = 0; a < num_actions; ++a) in >> probs[a];
      if (!in) {
        throw std::runtime_error("TabularModel: truncated state table: " + path);
      }
      // Verbatim adoption: these values came out of save() normalized, and
      // renormalizing them again would cost an ulp of round-trip fidelity.
      entry.prior = PriorDistribution::from_normalized(std::move(probs));
      model.table_.emplace(state, std::move(entry));
    }
    return model;
  }

 private:
  Entry& lookup(StateId state) {
    const auto it = table_.find(state);
    if (it != table_.end()) return it->second;
    Entry fresh;
    fresh.prior = PriorDistribution::uniform(num_actions_);
    return table_.emplace(state, std::move(fresh)).first->second;
  }

  static std::string format(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
  }

  std::size_t num_actions_;
  double learning_rate_;
  std::unordered_map<StateId, Entry> table_;
};

/// Environment wrapper whose evaluator reads the tabular model, so searches
/// see learned values and priors while dynamics stay the base env's.
class ModelBackedEnv final : public EnvironmentModel {
 public:
  ModelBackedEnv(const EnvironmentModel& base, const TabularModel& model)
      : base_(base), model_(model) {
    if (model_.num_actions() != base_.num_actions()) {
      throw std::invalid_argument("ModelBackedEnv: model/env action-count mismatch");
    }
  }

  std::size_t num_actions() const override { return base_.num_actions(); }
  StateId initial_state() const override { return base_.initial_state(); }
  bool is_terminal(StateId state) const override { return base_.is_terminal(state); }
  StepOutcome step(StateId state, std::size_t action, std::mt19937_64& rng) const override {
    return base_.step(state, action, rng);
  }
  std::vector<std::size_t> legal_actions(StateId state) const override {
    return base_.legal_actions(state);
  }
  std::pair<double, double> reward_bounds() const override { return base_.reward_bounds(); }

  Evaluation evaluate(StateId state) const override {
    return {model_.value(state), model_.prior(state)};
  }

 private:
  const EnvironmentModel& base_;
  const TabularModel& model_;
};

struct TrajectoryStats {
  std::int64_t episodes = 0;
  std::int64_t total_moves = 0;
  double mean_return = 0.0;          // discounted return from the start state
  double mean_episode_length = 0.0;
};

/// One self-play iteration: plays `batch` episodes with a full search per
/// move (evaluator = current model snapshot), then applies all prior/value
/// updates in a single writer phase. Targets are Monte Carlo discounted
/// returns-to-go; moves are sampled at the given temperature.
inline TrajectoryStats self_play_iteration(const EnvironmentModel& env, TabularModel& model,
                                           const SearchConfig& config, std::int64_t batch,
                                           std::uint64_t seed, double temperature = 1.0) {
  if (batch < 1) {
    throw std::invalid_argument("self_play_iteration: batch must be >= 1");
  }
  const ModelBackedEnv wrapped(env, model);
  std::mt19937_64 rng(seed);

  struct Record {
    StateId state;
    std::vector<double> visit_distribution;
    double return_to_go;
  };
  std::vector<Record> records;
  TrajectoryStats stats;
  stats.episodes = batch;

  for (std::int64_t episode = 0; episode < batch; ++episode) {
    StateId state = env.initial_state();
    const std::size_t first_record = records.size();
    std::vector<double> rewards;
    while (!env.is_terminal(state)) {
      const SearchResult result = run_search(wrapped, state, config, rng());
      const std::size_t action = act(result.visit_distribution, temperature, rng);
      const StepOutcome out = env.step(state, action, rng);
      records.push_back(Record{state, result.visit_distribution, 0.0});
      rewards.push_back(out.reward);
      state = out.next_state;
    }
    double g = 0.0;
    for (std::size_t i = rewards.size(); i-- > 0;) {
      g = rewards[i] + config.gamma * g;
      records[first_record + i].return_to_go = g;
    }
    stats.total_moves += static_cast<std::int64_t>(rewards.size());
    stats.mean_return += rewards.empty() ? 0.0 : records[first_record].return_to_go;
    stats.mean_episode_length += static_cast<double>(rewards.size());
  }
  stats.mean_return /= static_cast<double>(batch);
  stats.mean_episode_length /= static_cast<double>(batch);

  // Single-writer phase: the searches above all saw the same snapshot.
  for (const Record& record : records) {
    model.update(record.state, record.visit_distribution, record.return_to_go);
  }
  return stats;
}

/// Greedy policy-head rollout: argmax of the model prior at every state, no
/// search (unvisited states fall back to the uniform prior, so the argmax
/// tie-break makes them a fixed choice). Returns the mean discounted return.
inline double evaluate_policy_head(const TabularModel& model, const EnvironmentModel& env,
                                   std::int64_t episodes, std::uint64_t seed,
                                   double gamma = 0.99) {
  if (episodes < 1) {
    throw std::invalid_argument("evaluate_policy_head: episodes must be >= 1");
  }
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (std::int64_t episode = 0; episode < episodes; ++episode) {
    StateId state = env.initial_state();
    double g = 0.0;
    double discount = 1.0;
    while (!env.is_terminal(state)) {
      const PriorDistribution prior = model.prior(state);
      std::size_t best = 0;
      for (std::size_t a = 1; a < prior.size(); ++a) {
        if (prior[a] > prior[best]) best = a;
      }
      const StepOutcome out = env.step(state, best, rng);
      g += discount * out.reward;
      discount *= gamma;
      state = out.next_state;
    }
    total += g;
  }
  return total / static_cast<double>(episodes);
}

}  // namespace vamcts
