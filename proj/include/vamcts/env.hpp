#pragma once

#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "vamcts/core.hpp"

namespace vamcts {

struct StepOutcome {
  StateId next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Output of the evaluator: a value estimate and a policy prior over the
/// environment's full action set. Stands in for a learned network head.
struct Evaluation {
  double value = 0.0;
  PriorDistribution prior;
};

/// Abstract environment model driven by the search engine. Implementations
/// hold no mutable state: all randomness flows through the explicit stream
/// passed to step, so trajectories replay bit-identically from a seed.
class EnvironmentModel {
 public:
  virtual ~EnvironmentModel() = default;

  virtual std::size_t num_actions() const = 0;
  virtual StateId initial_state() const = 0;
  virtual bool is_terminal(StateId state) const = 0;
  virtual StepOutcome step(StateId state, std::size_t action, std::mt19937_64& rng) const = 0;
  virtual Evaluation evaluate(StateId state) const = 0;

  /// Environments where every action is always legal keep this default.
  virtual std::vector<std::size_t> legal_actions(StateId /*state*/) const {
    std::vector<std::size_t> all(num_actions());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }

  /// Declared reward range; the bounded-reward assumption behind the UCB
  /// constants. Everything shipped here emits rewards in [0, 1].
  virtual std::pair<double, double> reward_bounds() const { return {0.0, 1.0}; }
};

}  // namespace vamcts
