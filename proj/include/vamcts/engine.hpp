#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "vamcts/backprop.hpp"
#include "vamcts/core.hpp"
#include "vamcts/env.hpp"
#include "vamcts/selectors.hpp"
#include "vamcts/tree.hpp"

namespace vamcts {

/// Which values the selector's sigma-hat is measured over: the raw
/// backed-up discounted returns, or those returns after the tree's
/// min-max normalization (scale by 1/range).
enum class VarianceSource { Raw, Normalized };

struct SearchConfig {
  std::int64_t num_simulations = 64;
  double gamma = 0.99;
  SelectorParams selector;
  bool normalize_values = true;
  VarianceSource variance_source = VarianceSource::Normalized;

  void validate() const {
    if (num_simulations < 1) {
      throw std::invalid_argument("SearchConfig: num_simulations must be >= 1");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("SearchConfig: gamma must be in [0,1]");
    }
  }
};

struct SearchResult {
  SearchTree tree;
  std::vector<std::int64_t> visit_counts;      // indexed by environment action id
  std::vector<double> visit_distribution;      // visit_counts / num_simulations
};

namespace detail {

/// Snapshot of a node's children as the selector sees them. Raw stats live
/// in the tree; normalization is applied here, at read time, uniformly
/// across the children (so a c=0 argmax is unaffected by it).
inline ChildStatsView node_view(const SearchTree& tree, const Node& node,
                                const SearchConfig& config) {
  const std::size_t num_actions = node.num_actions();
  std::vector<double> q(num_actions);
  std::vector<std::int64_t> n(num_actions);
  std::vector<double> sigma(num_actions);
  const bool have_bounds = tree.has_bounds();
  const double lo = tree.seen_min();
  const double hi = tree.seen_max();
  for (std::size_t a = 0; a < num_actions; ++a) {
    const NodeStats& edge = node.edges[a];
    n[a] = edge.n;
    q[a] = (config.normalize_values && have_bounds) ? normalize_value(edge.mu, lo, hi) : edge.mu;
    const double raw_sigma = std::sqrt(edge.var);
    sigma[a] = (config.variance_source == VarianceSource::Normalized && have_bounds)
                   ? normalize_sigma(raw_sigma, lo, hi)
                   : raw_sigma;
  }
  return make_view(std::move(q), std::move(n), std::move(sigma), node.prior);
}

/// Queries the evaluator and fixes the node's legal action slots and prior.
inline void expand_from_evaluator(SearchTree& tree, const EnvironmentModel& env,
                                  NodeIndex index) {
  const StateId state = tree.at(index).state;
  std::vector<std::size_t> legal = env.legal_actions(state);
  if (legal.empty()) {
    throw std::logic_error("run_search: non-terminal state with no legal actions");
  }
  const Evaluation eval = env.evaluate(state);
  if (eval.prior.size() != env.num_actions()) {
    throw std::logic_error("run_search: evaluator prior size != num_actions");
  }
  std::vector<double> masked(legal.size());
  for (std::size_t i = 0; i < legal.size(); ++i) {
    masked[i] = eval.prior[legal[i]];
  }
  tree.expand(index, std::move(legal), PriorDistribution(std::move(masked)), eval.value);
}

}  // namespace detail

/// Runs the four-stage loop for exactly config.num_simulations simulations.
/// The root is expanded up front (not counted); each simulation selects a
/// path with the configured rule, expands at most one new node, evaluates
/// it (terminal nodes back up value 0 — the discount-to-zero convention),
/// and backpropagates with Welford updates along the path.
inline SearchResult run_search(const EnvironmentModel& env, StateId root_state,
                               const SearchConfig& config, std::uint64_t rng_seed) {
  config.validate();
  config.selector.validate();
  if (env.is_terminal(root_state)) {
    throw std::invalid_argument("run_search: root state is terminal");
  }
  std::mt19937_64 rng(rng_seed);
  SearchTree tree(root_state, /*root_terminal=*/false);
  detail::expand_from_evaluator(tree, env, tree.root());

  std::vector<BackpropStep> path;
  for (std::int64_t sim = 0; sim < config.num_simulations; ++sim) {
    path.clear();
    NodeIndex index = tree.root();
    double leaf_value = 0.0;
    for (;;) {
      if (tree.at(index).terminal) {
        // Revisited terminal leaf: no expansion, value 0 backs up so the
        // edge into it keeps folding the cached immediate reward.
        leaf_value = 0.0;
        break;
      }
      const std::size_t slot =
          select_action(detail::node_view(tree, tree.at(index), config), config.selector);
      {
        Node& node = tree.at(index);
        EdgeTransition& edge = node.transitions[slot];
        if (!edge.cached) {
          const StepOutcome out = env.step(node.state, node.actions[slot], rng);
          edge = EdgeTransition{true, out.next_state, out.reward, out.terminal};
        }
        path.push_back(BackpropStep{index, slot, edge.reward});
      }
      const EdgeTransition edge = tree.at(index).transitions[slot];
      NodeIndex child = tree.at(index).children[slot];
      if (child == kNoNode) {
        child = tree.add_child(index, slot, edge.next_state, edge.terminal);
        if (edge.terminal) {
          leaf_value = 0.0;
        } else {
          detail::expand_from_evaluator(tree, env, child);
          leaf_value = tree.at(child).value_estimate;
        }
        break;
      }
      index = child;
    }
    backpropagate(tree, path, leaf_value, config.gamma);
  }

  SearchResult result{std::move(tree), std::vector<std::int64_t>(env.num_actions(), 0),
                      std::vector<double>(env.num_actions(), 0.0)};
  const Node& root = result.tree.at(result.tree.root());
  for (std::size_t slot = 0; slot < root.num_actions(); ++slot) {
    result.visit_counts[root.actions[slot]] = root.edges[slot].n;
  }
  for (std::size_t a = 0; a < result.visit_counts.size(); ++a) {
    result.visit_distribution[a] = static_cast<double>(result.visit_counts[a]) /
                                   static_cast<double>(config.num_simulations);
  }
  return result;
}

/// Turns a root visit distribution into a move. Temperature 0 is the
/// lowest-index argmax; t > 0 samples proportionally to visits^(1/t).
inline std::size_t act(const std::vector<double>& visit_distribution, double temperature,
                       std::mt19937_64& rng) {
  if (visit_distribution.empty()) {
    throw std::invalid_argument("act: empty distribution");
  }
  if (temperature < 0.0) {
    throw std::invalid_argument("act: negative temperature");
  }
  for (double p : visit_distribution) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("act: distribution entries must be finite and nonnegative");
    }
  }
  if (temperature == 0.0) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < visit_distribution.size(); ++a) {
      if (visit_distribution[a] > visit_distribution[best]) best = a;
    }
    return best;
  }
  std::vector<double> weights(visit_distribution.size());
  double total = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    weights[a] = std::pow(visit_distribution[a], 1.0 / temperature);
    total += weights[a];
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("act: distribution has no mass");
  }
  // Portable uniform draw in [0,1): top 53 bits of the stream.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    cumulative += weights[a];
    if (u * total < cumulative) return a;
  }
  return weights.size() - 1;  // guard against rounding at u ~ 1
}

/// Structural audit of a finished search tree. Checks parent/child links
/// and the count identities: an expanded non-root node's edge-count sum is
/// its parent edge count minus the one visit spent expanding it, and the
/// root's edge counts sum to the simulation budget.
inline void validate_tree(const SearchTree& tree,
                          std::optional<std::int64_t> expected_root_visits = std::nullopt) {
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(tree.size()); ++i) {
    const Node& node = tree.at(i);
    if (i == tree.root()) {
      if (node.parent != kNoNode) throw std::logic_error("validate_tree: root has a parent");
    } else {
      const Node& parent = tree.at(node.parent);
      if (node.parent >= i) throw std::logic_error("validate_tree: links must point backwards");
      if (node.parent_action >= parent.num_actions() ||
          parent.children[node.parent_action] != i) {
        throw std::logic_error("validate_tree: broken parent-child link");
      }
    }
    if (node.terminal && node.expanded) {
      throw std::logic_error("validate_tree: terminal node marked expanded");
    }
    if (!node.expanded) {
      if (node.total_n != 0 || !node.edges.empty()) {
        throw std::logic_error("validate_tree: unexpanded node carries edges");
      }
      continue;
    }
    std::int64_t edge_sum = 0;
    for (std::size_t a = 0; a < node.num_actions(); ++a) {
      if (node.edges[a].n < 0) throw std::logic_error("validate_tree: negative count");
      if ((node.children[a] == kNoNode) != (node.edges[a].n == 0)) {
        throw std::logic_error("validate_tree: child materialization out of sync with counts");
      }
      edge_sum += node.edges[a].n;
    }
    if (edge_sum != node.total_n) {
      throw std::logic_error("validate_tree: cached total_n disagrees with edge sum");
    }
    if (i == tree.root()) {
      if (expected_root_visits && edge_sum != *expected_root_visits) {
        throw std::logic_error("validate_tree: root visit sum != simulation budget");
      }
    } else {
      const Node& parent = tree.at(node.parent);
      const std::int64_t inflow = parent.edges[node.parent_action].n;
      if (edge_sum != inflow - 1) {
        throw std::logic_error("validate_tree: node count inconsistent with parent edge");
      }
    }
  }
}

}  // namespace vamcts
