#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vamcts/core.hpp"
#include "vamcts/tree.hpp"

namespace vamcts {

/// One traversed edge on the root-to-leaf path: the node, the action slot
/// taken there, and the immediate reward the step produced.
struct BackpropStep {
  NodeIndex node = kNoNode;
  std::size_t action = 0;
  double reward = 0.0;
};

/// Single-node online update: folds one value into (n, mu, var) in O(1),
/// keeping var the population variance of everything folded so far.
inline NodeStats welford_update(const NodeStats& stats, double v) {
  if (stats.n < 0) {
    throw std::invalid_argument("welford_update: negative count");
  }
  NodeStats out;
  out.n = stats.n + 1;
  const double delta = v - stats.mu;
  out.mu = stats.mu + delta / static_cast<double>(out.n);
  const double delta2 = v - out.mu;
  out.var = (static_cast<double>(stats.n) * stats.var + delta * delta2) /
            static_cast<double>(out.n);
  if (out.var < 0.0) out.var = 0.0;  // floating-point drift only
  return out;
}

/// Walks the path leaf -> root maintaining v <- r + gamma * v and folds the
/// discounted value into each traversed edge. Every edge on the path gains
/// exactly one visit; no other edge is touched.
inline void backpropagate(SearchTree& tree, const std::vector<BackpropStep>& path,
                          double leaf_value, double gamma) {
  if (path.empty()) {
    throw std::invalid_argument("backpropagate: empty path");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("backpropagate: gamma must be in [0,1]");
  }
  // Validate the whole path before mutating anything.
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Node& node = tree.at(path[i].node);
    if (!node.expanded) {
      throw std::logic_error("backpropagate: path crosses an unexpanded node");
    }
    if (path[i].action >= node.num_actions()) {
      throw std::out_of_range("backpropagate: action slot out of range");
    }
    if (i + 1 < path.size() && node.children[path[i].action] != path[i + 1].node) {
      throw std::logic_error("backpropagate: path edges are not parent-child links");
    }
  }
  if (path.front().node != tree.root()) {
    throw std::logic_error("backpropagate: path must start at the root");
  }
  double v = leaf_value;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    v = it->reward + gamma * v;
    Node& node = tree.at(it->node);
    NodeStats& edge = node.edges[it->action];
    edge = welford_update(edge, v);
    node.total_n += 1;
    tree.observe_value(v);
  }
}

/// Min-max normalization against the tree's running value bounds. The
/// degenerate range maps to the neutral midpoint 0.5.
inline double normalize_value(double v, double seen_min, double seen_max) {
  if (seen_min > seen_max) {
    throw std::invalid_argument("normalize_value: min exceeds max");
  }
  if (seen_min == seen_max) return 0.5;
  return (v - seen_min) / (seen_max - seen_min);
}

/// Standard deviation under the same affine map: scales by 1/range, and a
/// degenerate range (all values equal) has deviation 0.
inline double normalize_sigma(double sigma, double seen_min, double seen_max) {
  if (seen_min > seen_max) {
    throw std::invalid_argument("normalize_sigma: min exceeds max");
  }
  if (seen_min == seen_max) return 0.0;
  return sigma / (seen_max - seen_min);
}

}  // namespace vamcts
