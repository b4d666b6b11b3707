#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "vamcts/backprop.hpp"
#include "vamcts/tree.hpp"

using namespace vamcts;

TEST_CASE("welford worked examples") {
  NodeStats s;
  s.n = 2;
  s.mu = 1.0;
  s.var = 0.0;
  s = welford_update(s, 4.0);
  CHECK(s.n == 3);
  CHECK(s.mu == Catch::Approx(2.0).epsilon(0));
  CHECK(s.var == Catch::Approx(2.0).epsilon(1e-15));

  NodeStats t;
  for (double v : {1.0, 2.0, 3.0, 4.0}) t = welford_update(t, v);
  CHECK(t.n == 4);
  CHECK(t.mu == Catch::Approx(2.5).epsilon(1e-15));
  CHECK(t.var == Catch::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("welford matches two-pass on random streams") {
  std::mt19937_64 rng(12345);
  for (int stream = 0; stream < 50; ++stream) {
    const std::size_t length = 1 + static_cast<std::size_t>(oracles::uniform01(rng) * 2000.0);
    NodeStats s;
    std::vector<double> values;
    values.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
      const double v = 20.0 * oracles::uniform01(rng) - 10.0;
      values.push_back(v);
      s = welford_update(s, v);
    }
    const oracles::MeanVar ref = oracles::two_pass(values);
    CHECK(s.n == static_cast<std::int64_t>(length));
    CHECK(s.mu == Catch::Approx(ref.mean).margin(1e-10 * std::max(1.0, std::abs(ref.mean))));
    CHECK(s.var == Catch::Approx(ref.var).margin(1e-10 * std::max(1.0, ref.var)));
    CHECK(s.var >= 0.0);
  }
}

TEST_CASE("normalization helpers") {
  CHECK(normalize_value(0.5, 0.0, 1.0) == Catch::Approx(0.5).epsilon(0));
  CHECK(normalize_value(2.0, 1.0, 5.0) == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(normalize_value(3.0, 3.0, 3.0) == Catch::Approx(0.5).epsilon(0));  // degenerate range
  CHECK_THROWS_AS(normalize_value(0.0, 2.0, 1.0), std::invalid_argument);

  CHECK(normalize_sigma(0.2, 1.0, 5.0) == Catch::Approx(0.05).epsilon(1e-15));
  CHECK(normalize_sigma(0.2, 3.0, 3.0) == 0.0);
}

TEST_CASE("backpropagate discounts along the path") {
  SearchTree tree(/*root_state=*/0);
  tree.expand(tree.root(), {0, 1}, PriorDistribution::uniform(2), 0.0);
  const NodeIndex child = tree.add_child(tree.root(), 1, /*state=*/7, /*terminal=*/false);
  tree.expand(child, {0, 1}, PriorDistribution::uniform(2), 0.0);
  const NodeIndex grandchild = tree.add_child(child, 0, /*state=*/9, /*terminal=*/false);
  (void)grandchild;

  std::vector<BackpropStep> path = {{tree.root(), 1, 0.25}, {child, 0, 0.5}};
  backpropagate(tree, path, /*leaf_value=*/1.0, /*gamma=*/0.9);

  // Child edge sees 0.5 + 0.9 * 1.0; root edge sees 0.25 + 0.9 * that.
  CHECK(tree.at(child).edges[0].n == 1);
  CHECK(tree.at(child).edges[0].mu == Catch::Approx(1.4).epsilon(1e-15));
  CHECK(tree.at(tree.root()).edges[1].n == 1);
  CHECK(tree.at(tree.root()).edges[1].mu == Catch::Approx(0.25 + 0.9 * 1.4).epsilon(1e-15));
  CHECK(tree.at(tree.root()).total_n == 1);
  CHECK(tree.at(child).total_n == 1);

  // Both backed-up values entered the running bounds.
  CHECK(tree.has_bounds());
  CHECK(tree.seen_min() == Catch::Approx(1.4).epsilon(1e-15));
  CHECK(tree.seen_max() == Catch::Approx(0.25 + 0.9 * 1.4).epsilon(1e-15));

  // A second pass down the same edge accumulates variance.
  backpropagate(tree, path, /*leaf_value=*/0.0, /*gamma=*/0.9);
  CHECK(tree.at(child).edges[0].n == 2);
  CHECK(tree.at(child).edges[0].mu == Catch::Approx(0.95).epsilon(1e-15));
  CHECK(tree.at(child).edges[0].var == Catch::Approx(0.2025).epsilon(1e-12));
}

TEST_CASE("backpropagate input validation") {
  SearchTree tree(0);
  tree.expand(tree.root(), {0, 1}, PriorDistribution::uniform(2), 0.0);
  std::vector<BackpropStep> path = {{tree.root(), 0, 0.0}};
  CHECK_THROWS_AS(backpropagate(tree, {}, 0.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(backpropagate(tree, path, 0.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(backpropagate(tree, path, 0.0, -0.1), std::invalid_argument);
  std::vector<BackpropStep> bad_slot = {{tree.root(), 5, 0.0}};
  CHECK_THROWS_AS(backpropagate(tree, bad_slot, 0.0, 0.9), std::out_of_range);
}

TEST_CASE("tree expansion rules") {
  SearchTree tree(0);
  CHECK(tree.size() == 1);
  CHECK_FALSE(tree.at(tree.root()).expanded);
  tree.expand(tree.root(), {4, 5, 6}, PriorDistribution::uniform(3), 0.25);
  CHECK(tree.at(tree.root()).expanded);
  CHECK(tree.at(tree.root()).num_actions() == 3);
  CHECK(tree.at(tree.root()).value_estimate == 0.25);
  // Double expansion and size mismatches are rejected.
  CHECK_THROWS_AS(tree.expand(tree.root(), {4, 5, 6}, PriorDistribution::uniform(3), 0.0),
                  std::logic_error);
  const NodeIndex child = tree.add_child(tree.root(), 0, 4, /*terminal=*/true);
  CHECK(tree.at(child).terminal);
  CHECK_THROWS_AS(tree.expand(child, {1}, PriorDistribution::uniform(1), 0.0), std::logic_error);
  CHECK_THROWS_AS(tree.add_child(tree.root(), 0, 4, false), std::logic_error);  // slot taken
}
