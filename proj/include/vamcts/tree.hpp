#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vamcts/core.hpp"

namespace vamcts {

using NodeIndex = std::int64_t;
inline constexpr NodeIndex kNoNode = -1;

/// First sampled outcome of taking an action from a node. Stochastic
/// environments are determinized per edge: the transition is sampled once
/// and replayed on every later traversal, which keeps searches replayable.
struct EdgeTransition {
  bool cached = false;
  StateId next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

struct Node {
  StateId state = 0;
  NodeIndex parent = kNoNode;
  std::size_t parent_action = 0;  // slot index into the parent's action list
  bool terminal = false;
  bool expanded = false;
  double value_estimate = 0.0;  // evaluator output at expansion, raw scale

  // Per-action-slot arrays, sized at expansion to the state's legal set.
  std::vector<std::size_t> actions;  // slot -> environment action id
  PriorDistribution prior;
  std::vector<NodeStats> edges;
  std::vector<EdgeTransition> transitions;
  std::vector<NodeIndex> children;
  std::int64_t total_n = 0;  // sum of edge visit counts

  std::size_t num_actions() const { return actions.size(); }
};

/// Indexed node arena. Index 0 is the root; links are parent/child indices
/// so the whole tree is relocatable and trivially copyable.
class SearchTree {
 public:
  explicit SearchTree(StateId root_state, bool root_terminal = false) {
    Node root;
    root.state = root_state;
    root.terminal = root_terminal;
    nodes_.push_back(std::move(root));
  }

  NodeIndex root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }

  Node& at(NodeIndex index) {
    check_index(index);
    return nodes_[static_cast<std::size_t>(index)];
  }
  const Node& at(NodeIndex index) const {
    check_index(index);
    return nodes_[static_cast<std::size_t>(index)];
  }

  /// Marks `index` expanded: fixes its legal action slots, prior, and the
  /// evaluator's value estimate, and allocates the per-action arrays.
  void expand(NodeIndex index, std::vector<std::size_t> actions, PriorDistribution prior,
              double value_estimate) {
    Node& node = at(index);
    if (node.expanded) {
      throw std::logic_error("expand: node already expanded");
    }
    if (node.terminal) {
      throw std::logic_error("expand: terminal nodes have no actions");
    }
    if (actions.empty() || prior.size() != actions.size()) {
      throw std::invalid_argument("expand: prior/action-set size mismatch");
    }
    node.actions = std::move(actions);
    node.prior = std::move(prior);
    node.value_estimate = value_estimate;
    const std::size_t num_actions = node.actions.size();
    node.edges.assign(num_actions, NodeStats{});
    node.transitions.assign(num_actions, EdgeTransition{});
    node.children.assign(num_actions, kNoNode);
    node.expanded = true;
  }

  NodeIndex add_child(NodeIndex parent, std::size_t action_slot, StateId state, bool terminal) {
    Node& parent_node = at(parent);
    if (!parent_node.expanded) {
      throw std::logic_error("add_child: parent not expanded");
    }
    if (action_slot >= parent_node.num_actions()) {
      throw std::out_of_range("add_child: action slot out of range");
    }
    if (parent_node.children[action_slot] != kNoNode) {
      throw std::logic_error("add_child: slot already has a child");
    }
    const NodeIndex index = static_cast<NodeIndex>(nodes_.size());
    Node child;
    child.state = state;
    child.parent = parent;
    child.parent_action = action_slot;
    child.terminal = terminal;
    nodes_.push_back(std::move(child));
    at(parent).children[action_slot] = index;  // re-fetch: push_back may reallocate
    return index;
  }

  /// Running bounds over every value backed up through the tree; selection
  /// reads them for min-max normalization.
  void observe_value(double v) {
    if (!has_bounds_) {
      seen_min_ = seen_max_ = v;
      has_bounds_ = true;
      return;
    }
    seen_min_ = std::min(seen_min_, v);
    seen_max_ = std::max(seen_max_, v);
  }
  bool has_bounds() const { return has_bounds_; }
  double seen_min() const { return seen_min_; }
  double seen_max() const { return seen_max_; }

 private:
  void check_index(NodeIndex index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= nodes_.size()) {
      throw std::out_of_range("SearchTree: node index out of range");
    }
  }

  std::vector<Node> nodes_;
  double seen_min_ = 0.0;
  double seen_max_ = 0.0;
  bool has_bounds_ = false;
};

}  // namespace vamcts
