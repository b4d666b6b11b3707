#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "vamcts/selectors.hpp"

using namespace vamcts;

namespace {

// Shared worked example: two actions, three backed-up simulations so far.
ChildStatsView example_view() {
  return make_view({0.5, 0.2}, {3, 0}, {0.1, 0.0}, PriorDistribution::uniform(2));
}

SelectorParams params_for(SelectorRule rule, double c = 1.0) {
  SelectorParams p;
  p.rule = rule;
  p.c = c;
  // Variance-aware rules read c1/c2; keep library defaults there.
  return p;
}

}  // namespace

TEST_CASE("UCT1 worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::Uct1);
  CHECK(score(view, p, 0) == Catch::Approx(1.0240735369841025).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(1.2481470739682049).epsilon(1e-15));
  CHECK(select_action(view, p) == 1);
}

TEST_CASE("PUCT worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::Puct);
  CHECK(score(view, p, 0) == Catch::Approx(0.71650635094610966).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(1.0660254037844386).epsilon(1e-15));
}

TEST_CASE("UCT-P worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::UctP);
  CHECK(score(view, p, 0) == Catch::Approx(0.87057595184187777).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(0.94115190368375554).epsilon(1e-15));
}

TEST_CASE("UCT-V worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::UctV);
  CHECK(score(view, p, 0) == Catch::Approx(1.3980744068694578).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(3.4958368660043291).epsilon(1e-15));
}

TEST_CASE("UCT-V-H worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::UctVH);
  CHECK(score(view, p, 0) == Catch::Approx(1.3851964600706617).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(3.4958368660043291).epsilon(1e-15));
}

TEST_CASE("UCT-V-P worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::UctVP);
  CHECK(score(view, p, 0) == Catch::Approx(0.96438696194895138).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(1.8479184330021645).epsilon(1e-15));
}

TEST_CASE("PUCT-V worked example") {
  const auto view = example_view();
  const auto p = params_for(SelectorRule::PuctV);
  CHECK(score(view, p, 0) == Catch::Approx(0.94259823003533086).epsilon(1e-15));
  CHECK(score(view, p, 1) == Catch::Approx(1.8479184330021645).epsilon(1e-15));
}

TEST_CASE("breakdown terms add up") {
  const auto view = example_view();
  for (SelectorRule rule : {SelectorRule::Uct1, SelectorRule::Puct, SelectorRule::UctP,
                            SelectorRule::UctV, SelectorRule::UctVH, SelectorRule::UctVP,
                            SelectorRule::PuctV}) {
    const auto p = params_for(rule);
    for (std::size_t a = 0; a < view.size(); ++a) {
      const SelectionScoreBreakdown b = score_breakdown(view, p, a);
      CHECK(b.total == Catch::Approx(b.q_term + b.exploration_term_1 + b.exploration_term_2)
                           .margin(1e-15));
      CHECK(b.q_term == view.q[a]);
      CHECK(b.total == score(view, p, a));
    }
  }
}

TEST_CASE("log guard zeroes bonuses for tiny trees") {
  // With N <= 1 the log factor is defined as zero, so UCT1 reduces to q.
  const auto view0 = make_view({0.3, 0.7}, {0, 0}, {0.0, 0.0}, PriorDistribution::uniform(2));
  const auto view1 = make_view({0.3, 0.7}, {1, 0}, {0.0, 0.0}, PriorDistribution::uniform(2));
  const auto p = params_for(SelectorRule::Uct1);
  for (const auto& view : {view0, view1}) {
    CHECK(score(view, p, 0) == view.q[0]);
    CHECK(score(view, p, 1) == view.q[1]);
  }
  // PUCT uses sqrt(N), not log N, so its bonus survives at N = 1.
  const auto pp = params_for(SelectorRule::Puct);
  CHECK(score(view1, pp, 1) > view1.q[1]);
}

TEST_CASE("select_action breaks ties toward the lowest index") {
  const auto view =
      make_view({0.5, 0.5, 0.5}, {2, 2, 2}, {0.1, 0.1, 0.1}, PriorDistribution::uniform(3));
  for (SelectorRule rule : {SelectorRule::Uct1, SelectorRule::Puct, SelectorRule::UctV,
                            SelectorRule::PuctV}) {
    CHECK(select_action(view, params_for(rule)) == 0);
  }
}

TEST_CASE("unvisited actions get an exploration boost") {
  // Equal q: the unvisited arm must win under every rule once N > 1.
  const auto view =
      make_view({0.5, 0.5}, {5, 0}, {0.3, 0.0}, PriorDistribution::uniform(2));
  for (SelectorRule rule : {SelectorRule::Uct1, SelectorRule::Puct, SelectorRule::UctP,
                            SelectorRule::UctV, SelectorRule::UctVH, SelectorRule::UctVP,
                            SelectorRule::PuctV}) {
    CHECK(select_action(view, params_for(rule)) == 1);
  }
}

TEST_CASE("variance scaling widens the variance arm's bonus") {
  const auto lo = make_view({0.5, 0.5}, {4, 4}, {0.1, 0.1}, PriorDistribution::uniform(2));
  const auto hi = make_view({0.5, 0.5}, {4, 4}, {0.1, 0.9}, PriorDistribution::uniform(2));
  for (SelectorRule rule :
       {SelectorRule::UctV, SelectorRule::UctVH, SelectorRule::UctVP, SelectorRule::PuctV}) {
    const auto p = params_for(rule);
    CHECK(score(hi, p, 1) > score(lo, p, 1));
    CHECK(select_action(hi, p) == 1);
  }
}

TEST_CASE("select_action rejects empty views") {
  ChildStatsView empty;
  CHECK_THROWS_AS(select_action(empty, params_for(SelectorRule::Uct1)), std::invalid_argument);
}
