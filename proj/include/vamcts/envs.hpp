#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "vamcts/backprop.hpp"
#include "vamcts/core.hpp"
#include "vamcts/env.hpp"
#include "vamcts/selectors.hpp"

namespace vamcts {

/// Portable uniform draw in [0,1): top 53 bits of the 64-bit stream, so
/// results do not depend on the standard library's distribution internals.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Bandits
// ---------------------------------------------------------------------------

enum class ArmKind { Bernoulli, TruncatedGaussian };

/// One bandit arm. Both kinds emit rewards in [0,1]: Bernoulli(p), or a
/// Gaussian(mu, sigma) sample clipped into the unit interval.
struct ArmSpec {
  ArmKind kind = ArmKind::Bernoulli;
  double p = 0.5;      // Bernoulli success probability
  double mu = 0.5;     // Gaussian location
  double sigma = 0.1;  // Gaussian scale

  static ArmSpec bernoulli(double p) {
    ArmSpec arm;
    arm.kind = ArmKind::Bernoulli;
    arm.p = p;
    return arm;
  }

  static ArmSpec truncated_gaussian(double mu, double sigma) {
    ArmSpec arm;
    arm.kind = ArmKind::TruncatedGaussian;
    arm.mu = mu;
    arm.sigma = sigma;
    return arm;
  }

  void validate() const {
    if (kind == ArmKind::Bernoulli) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("ArmSpec: Bernoulli p must lie in [0,1]");
      }
    } else {
      if (!std::isfinite(mu) || !(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("ArmSpec: Gaussian needs finite mu and sigma >= 0");
      }
    }
  }

  double sample(std::mt19937_64& rng) const {
    if (kind == ArmKind::Bernoulli) {
      return uniform01(rng) < p ? 1.0 : 0.0;
    }
    if (sigma == 0.0) {
      return std::clamp(mu, 0.0, 1.0);
    }
    // Box-Muller, one variate per call; u1 in (0,1] keeps the log finite.
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return std::clamp(mu + sigma * z, 0.0, 1.0);
  }

  /// True expected reward, accounting for the clipping: the regret runner
  /// scores pulls against exact means, not empirical ones.
  double mean() const {
    if (kind == ArmKind::Bernoulli) return p;
    if (sigma == 0.0) return std::clamp(mu, 0.0, 1.0);
    const auto cdf = [](double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); };
    const auto pdf = [](double x) { return std::exp(-0.5 * x * x) / 2.5066282746310002; };
    const double alpha = (0.0 - mu) / sigma;
    const double beta = (1.0 - mu) / sigma;
    // E[clip(X,0,1)] = mu*(Phi(b)-Phi(a)) - sigma*(phi(b)-phi(a)) + P(X > 1).
    return mu * (cdf(beta) - cdf(alpha)) - sigma * (pdf(beta) - pdf(alpha)) +
           (1.0 - cdf(beta));
  }
};

struct BanditSpec {
  std::vector<ArmSpec> arms;

  void validate() const {
    if (arms.size() < 2) {
      throw std::invalid_argument("BanditSpec: need at least 2 arms");
    }
    for (const ArmSpec& arm : arms) arm.validate();
  }

  double best_mean() const {
    double best = arms.front().mean();
    for (const ArmSpec& arm : arms) best = std::max(best, arm.mean());
    return best;
  }
};

namespace detail {

class BanditEnv final : public EnvironmentModel {
 public:
  BanditEnv(BanditSpec spec, std::optional<PriorDistribution> prior)
      : spec_(std::move(spec)), prior_(std::move(prior)) {
    spec_.validate();
    if (prior_ && prior_->size() != spec_.arms.size()) {
      throw std::invalid_argument("bandit_env: prior length != number of arms");
    }
  }

  std::size_t num_actions() const override { return spec_.arms.size(); }
  StateId initial_state() const override { return 0; }
  bool is_terminal(StateId state) const override { return state != 0; }

  StepOutcome step(StateId state, std::size_t action, std::mt19937_64& rng) const override {
    if (is_terminal(state)) {
      throw std::logic_error("bandit_env: step from terminal state");
    }
    if (action >= spec_.arms.size()) {
      throw std::out_of_range("bandit_env: arm index out of range");
    }
    return {1, spec_.arms[action].sample(rng), true};
  }

  Evaluation evaluate(StateId /*state*/) const override {
    return {0.0, prior_ ? *prior_ : PriorDistribution::uniform(spec_.arms.size())};
  }

 private:
  BanditSpec spec_;
  std::optional<PriorDistribution> prior_;
};

}  // namespace detail

/// One-step environment: every pull terminates with the sampled arm reward.
/// evaluate yields value 0 and a uniform prior unless one is supplied.
inline std::unique_ptr<EnvironmentModel> bandit_env(
    const BanditSpec& spec, std::optional<PriorDistribution> prior = std::nullopt) {
  return std::make_unique<detail::BanditEnv>(spec, std::move(prior));
}

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

struct GoalSpec {
  int x = 0;
  int y = 0;
  double reward = 1.0;
};

/// Four-action grid navigation with slip noise: with probability `slip` the
/// chosen move is replaced by a uniformly random one. Bumping the boundary
/// stays put. Entering a goal cell terminates with its reward; episodes cap
/// at max_steps.
struct GridworldSpec {
  int width = 4;
  int height = 4;
  std::vector<GoalSpec> goals;
  double slip = 0.0;
  int max_steps = 256;
  int start_x = 0;
  int start_y = 0;

  void validate() const {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("GridworldSpec: dimensions must be positive");
    }
    if (goals.empty()) {
      throw std::invalid_argument("GridworldSpec: need at least one goal");
    }
    if (!(slip >= 0.0 && slip < 1.0)) {
      throw std::invalid_argument("GridworldSpec: slip must lie in [0,1)");
    }
    if (max_steps < 1) {
      throw std::invalid_argument("GridworldSpec: max_steps must be positive");
    }
    if (start_x < 0 || start_x >= width || start_y < 0 || start_y >= height) {
      throw std::invalid_argument("GridworldSpec: start cell out of bounds");
    }
    for (const GoalSpec& goal : goals) {
      if (goal.x < 0 || goal.x >= width || goal.y < 0 || goal.y >= height) {
        throw std::invalid_argument("GridworldSpec: goal cell out of bounds");
      }
      if (!(goal.reward >= 0.0 && goal.reward <= 1.0)) {
        throw std::invalid_argument("GridworldSpec: goal rewards must lie in [0,1]");
      }
    }
  }

  bool is_goal(int x, int y) const {
    for (const GoalSpec& goal : goals) {
      if (goal.x == x && goal.y == y) return true;
    }
    return false;
  }

  double goal_reward(int x, int y) const {
    for (const GoalSpec& goal : goals) {
      if (goal.x == x && goal.y == y) return goal.reward;
    }
    return 0.0;
  }
};

// Moves indexed 0..3: north (+y), south (-y), west (-x), east (+x).
inline constexpr int kGridMoveDx[4] = {0, 0, -1, 1};
inline constexpr int kGridMoveDy[4] = {1, -1, 0, 0};

namespace detail {

class GridworldEnv final : public EnvironmentModel {
 public:
  explicit GridworldEnv(GridworldSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  std::size_t num_actions() const override { return 4; }

  StateId initial_state() const override {
    return encode(spec_.start_x, spec_.start_y, 0);
  }

  bool is_terminal(StateId state) const override {
    int x, y, steps;
    decode(state, x, y, steps);
    return spec_.is_goal(x, y) || steps >= spec_.max_steps;
  }

  StepOutcome step(StateId state, std::size_t action, std::mt19937_64& rng) const override {
    if (action >= 4) {
      throw std::out_of_range("gridworld_env: action out of range");
    }
    if (is_terminal(state)) {
      throw std::logic_error("gridworld_env: step from terminal state");
    }
    int x, y, steps;
    decode(state, x, y, steps);
    std::size_t move = action;
    if (spec_.slip > 0.0 && uniform01(rng) < spec_.slip) {
      move = static_cast<std::size_t>(uniform01(rng) * 4.0);
      if (move > 3) move = 3;
    }
    const int nx = x + kGridMoveDx[move];
    const int ny = y + kGridMoveDy[move];
    if (nx >= 0 && nx < spec_.width && ny >= 0 && ny < spec_.height) {
      x = nx;
      y = ny;
    }
    steps += 1;
    const bool at_goal = spec_.is_goal(x, y);
    const double reward = at_goal ? spec_.goal_reward(x, y) : 0.0;
    return {encode(x, y, steps), reward, at_goal || steps >= spec_.max_steps};
  }

  Evaluation evaluate(StateId /*state*/) const override {
    return {0.0, PriorDistribution::uniform(4)};
  }

  StateId encode(int x, int y, int steps) const {
    return (static_cast<StateId>(steps) * spec_.height + y) * spec_.width + x;
  }

  void decode(StateId state, int& x, int& y, int& steps) const {
    x = static_cast<int>(state % spec_.width);
    state /= spec_.width;
    y = static_cast<int>(state % spec_.height);
    steps = static_cast<int>(state / spec_.height);
  }

  const GridworldSpec& spec() const { return spec_; }

 private:
  GridworldSpec spec_;
};

}  // namespace detail

inline std::unique_ptr<EnvironmentModel> gridworld_env(const GridworldSpec& spec) {
  return std::make_unique<detail::GridworldEnv>(spec);
}

// ---------------------------------------------------------------------------
// Flat-bandit regret
// ---------------------------------------------------------------------------

/// Pseudo-regret of a selection rule run as a flat bandit policy: a depth-1
/// tree with Welford statistics per arm. Each arm is pulled once up front
/// (round-robin), then T - |A| pulls follow the rule; every pull is scored
/// against the true means. `checkpoints` must be increasing; the returned
/// vector holds the regret after that many total pulls.
inline std::vector<double> cumulative_regret_curve(const BanditSpec& spec,
                                                   const SelectorParams& params,
                                                   const std::vector<std::int64_t>& checkpoints,
                                                   std::uint64_t seed) {
  spec.validate();
  if (checkpoints.empty()) {
    throw std::invalid_argument("cumulative_regret: need at least one horizon");
  }
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
      throw std::invalid_argument("cumulative_regret: horizons must be increasing and >= 1");
    }
  }
  const std::size_t num_arms = spec.arms.size();
  std::vector<double> means(num_arms);
  for (std::size_t a = 0; a < num_arms; ++a) means[a] = spec.arms[a].mean();
  const double best = spec.best_mean();

  std::mt19937_64 rng(seed);
  std::vector<NodeStats> stats(num_arms);
  const PriorDistribution prior = PriorDistribution::uniform(num_arms);
  double regret = 0.0;
  std::vector<double> out;
  out.reserve(checkpoints.size());
  std::size_t next_checkpoint = 0;
  const std::int64_t horizon = checkpoints.back();

  for (std::int64_t t = 0; t < horizon; ++t) {
    std::size_t arm;
    if (t < static_cast<std::int64_t>(num_arms)) {
      arm = static_cast<std::size_t>(t);  // initialization round
    } else {
      std::vector<double> q(num_arms), sigma(num_arms);
      std::vector<std::int64_t> n(num_arms);
      for (std::size_t a = 0; a < num_arms; ++a) {
        q[a] = stats[a].mu;
        n[a] = stats[a].n;
        sigma[a] = std::sqrt(stats[a].var);
      }
      arm = select_action(make_view(std::move(q), std::move(n), std::move(sigma), prior),
                          params);
    }
    const double reward = spec.arms[arm].sample(rng);
    stats[arm] = welford_update(stats[arm], reward);
    regret += best - means[arm];
    while (next_checkpoint < checkpoints.size() && t + 1 == checkpoints[next_checkpoint]) {
      out.push_back(regret);
      ++next_checkpoint;
    }
  }
  return out;
}

inline double cumulative_regret(const BanditSpec& spec, const SelectorParams& params,
                                std::int64_t horizon, std::uint64_t seed) {
  return cumulative_regret_curve(spec, params, {horizon}, seed).front();
}

// ---------------------------------------------------------------------------
// Dynamic-programming oracle
// ---------------------------------------------------------------------------

struct GridworldPlan {
  std::vector<double> values;       // per cell, index y * width + x
  std::vector<std::size_t> policy;  // greedy action per cell
  double start_value = 0.0;
};

/// Value iteration on the stationary cell MDP (the step cap is ignored:
/// optimal policies on these grids reach a goal far inside it). Goal cells
/// are absorbing with value 0; their reward is collected on entry. Stops at
/// sup-norm change <= 1e-10.
inline GridworldPlan gridworld_value_iteration(const GridworldSpec& spec, double gamma) {
  spec.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gridworld_value_iteration: gamma must lie in [0,1)");
  }
  const int width = spec.width;
  const int height = spec.height;
  const std::size_t num_cells = static_cast<std::size_t>(width) * height;
  std::vector<double> values(num_cells, 0.0);
  std::vector<double> next(num_cells, 0.0);
  std::vector<std::size_t> policy(num_cells, 0);

  const auto cell = [width](int x, int y) { return static_cast<std::size_t>(y) * width + x; };
  for (int sweep = 0; sweep < 1000000; ++sweep) {
    double change = 0.0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (spec.is_goal(x, y)) {
          next[cell(x, y)] = 0.0;
          continue;
        }
        double best_q = -1.0;
        std::size_t best_a = 0;
        for (std::size_t a = 0; a < 4; ++a) {
          double q = 0.0;
          for (std::size_t m = 0; m < 4; ++m) {
            double prob = (m == a ? 1.0 - spec.slip : 0.0) + spec.slip / 4.0;
            if (prob == 0.0) continue;
            int nx = x + kGridMoveDx[m];
            int ny = y + kGridMoveDy[m];
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) {
              nx = x;
              ny = y;
            }
            const double immediate = spec.is_goal(nx, ny) ? spec.goal_reward(nx, ny) : 0.0;
            q += prob * (immediate + gamma * values[cell(nx, ny)]);
          }
          if (q > best_q) {
            best_q = q;
            best_a = a;
          }
        }
        next[cell(x, y)] = best_q;
        policy[cell(x, y)] = best_a;
        change = std::max(change, std::abs(best_q - values[cell(x, y)]));
      }
    }
    values.swap(next);
    if (change <= 1e-10) break;
  }

  GridworldPlan plan;
  plan.values = std::move(values);
  plan.policy = std::move(policy);
  plan.start_value = plan.values[cell(spec.start_x, spec.start_y)];
  return plan;
}

}  // namespace vamcts
