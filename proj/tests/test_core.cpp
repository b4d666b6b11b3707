#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

#include "vamcts/core.hpp"

using namespace vamcts;

TEST_CASE("selector rule names round-trip") {
  const SelectorRule rules[] = {SelectorRule::Uct1,  SelectorRule::Puct, SelectorRule::UctP,
                                SelectorRule::UctV,  SelectorRule::UctVH,
                                SelectorRule::UctVP, SelectorRule::PuctV};
  const char* names[] = {"UCT1", "PUCT", "UCT_P", "UCT_V", "UCT_V_H", "UCT_V_P", "PUCT_V"};
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(std::string(to_string(rules[i])) == names[i]);
    CHECK(selector_rule_from_string(names[i]) == rules[i]);
  }
  CHECK_THROWS_AS(selector_rule_from_string("UCB"), std::invalid_argument);
}

TEST_CASE("rule capability predicates") {
  CHECK_FALSE(is_prior_based(SelectorRule::Uct1));
  CHECK(is_prior_based(SelectorRule::Puct));
  CHECK(is_prior_based(SelectorRule::UctP));
  CHECK_FALSE(is_prior_based(SelectorRule::UctV));
  CHECK_FALSE(is_prior_based(SelectorRule::UctVH));
  CHECK(is_prior_based(SelectorRule::UctVP));
  CHECK(is_prior_based(SelectorRule::PuctV));

  CHECK_FALSE(is_variance_aware(SelectorRule::Uct1));
  CHECK_FALSE(is_variance_aware(SelectorRule::Puct));
  CHECK_FALSE(is_variance_aware(SelectorRule::UctP));
  CHECK(is_variance_aware(SelectorRule::UctV));
  CHECK(is_variance_aware(SelectorRule::UctVH));
  CHECK(is_variance_aware(SelectorRule::UctVP));
  CHECK(is_variance_aware(SelectorRule::PuctV));
}

TEST_CASE("selector params validation") {
  SelectorParams params;
  CHECK(params.c == Catch::Approx(1.4142135623730951).epsilon(0));
  CHECK(params.c1 == Catch::Approx(1.4142135623730951).epsilon(0));
  CHECK(params.c2 == Catch::Approx(3.0).epsilon(0));
  CHECK_NOTHROW(params.validate());
  params.c = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params.c = 1.0;
  params.c2 = -1.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("guarded log") {
  CHECK(guarded_log(0) == 0.0);
  CHECK(guarded_log(1) == 0.0);
  CHECK(guarded_log(2) == Catch::Approx(0.69314718055994531).margin(1e-15));
  CHECK(guarded_log(100) == Catch::Approx(4.6051701859880914).margin(1e-14));
}

TEST_CASE("prior distribution normalizes and floors") {
  PriorDistribution p({2.0, 2.0, 4.0});
  REQUIRE(p.size() == 3);
  CHECK(p[0] == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(p[2] == Catch::Approx(0.5).epsilon(1e-15));

  // A zero coordinate gets floored but stays on the simplex.
  PriorDistribution q({1.0, 0.0});
  CHECK(q[1] >= PriorDistribution::kFloor * 0.5);
  CHECK(q[0] + q[1] == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(PriorDistribution(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(PriorDistribution({-1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(PriorDistribution({0.0, 0.0}), std::invalid_argument);

  const PriorDistribution u = PriorDistribution::uniform(4);
  for (std::size_t a = 0; a < 4; ++a) CHECK(u[a] == Catch::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("child stats view shape checks") {
  auto view = make_view({0.5, 0.2}, {3, 0}, {0.1, 0.0}, PriorDistribution::uniform(2));
  CHECK(view.size() == 2);
  CHECK(view.total_visits == 3);
  CHECK_THROWS_AS(make_view({0.5}, {3, 0}, {0.1, 0.0}, PriorDistribution::uniform(2)),
                  std::invalid_argument);
}

TEST_CASE("empirical policy") {
  // Worked examples: (n_a, N, |A|) -> (1 + n_a) / (|A| + N).
  CHECK(empirical_pi(0, 0, 2) == Catch::Approx(0.5).epsilon(0));
  CHECK(empirical_pi(3, 3, 2) == Catch::Approx(0.8).epsilon(0));
  CHECK(empirical_pi(0, 3, 2) == Catch::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(empirical_pi(-1, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(empirical_pi(4, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(empirical_pi(0, 3, 0), std::invalid_argument);
}
