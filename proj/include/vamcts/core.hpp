#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace vamcts {

/// Opaque environment state handle. Environments pack whatever they need
/// (coordinates, step counters, arm indices) into 64 bits.
using StateId = std::int64_t;

/// Per-(node,action) running statistics: visit count, running mean of
/// backed-up values, and running population variance.
struct NodeStats {
  std::int64_t n = 0;
  double mu = 0.0;
  double var = 0.0;
};

/// The seven tree policies.
enum class SelectorRule {
  Uct1,
  Puct,
  UctP,
  UctV,
  UctVH,
  UctVP,
  PuctV,
};

inline const char* to_string(SelectorRule rule) {
  switch (rule) {
    case SelectorRule::Uct1:  return "UCT1";
    case SelectorRule::Puct:  return "PUCT";
    case SelectorRule::UctP:  return "UCT_P";
    case SelectorRule::UctV:  return "UCT_V";
    case SelectorRule::UctVH: return "UCT_V_H";
    case SelectorRule::UctVP: return "UCT_V_P";
    case SelectorRule::PuctV: return "PUCT_V";
  }
  throw std::invalid_argument("unknown selector rule");
}

inline SelectorRule selector_rule_from_string(const std::string& name) {
  if (name == "UCT1")    return SelectorRule::Uct1;
  if (name == "PUCT")    return SelectorRule::Puct;
  if (name == "UCT_P")   return SelectorRule::UctP;
  if (name == "UCT_V")   return SelectorRule::UctV;
  if (name == "UCT_V_H") return SelectorRule::UctVH;
  if (name == "UCT_V_P") return SelectorRule::UctVP;
  if (name == "PUCT_V")  return SelectorRule::PuctV;
  throw std::invalid_argument("unknown selector rule: " + name);
}

inline bool is_prior_based(SelectorRule rule) {
  return rule == SelectorRule::Puct || rule == SelectorRule::UctP ||
         rule == SelectorRule::UctVP || rule == SelectorRule::PuctV;
}

inline bool is_variance_aware(SelectorRule rule) {
  return rule == SelectorRule::UctV || rule == SelectorRule::UctVH ||
         rule == SelectorRule::UctVP || rule == SelectorRule::PuctV;
}

/// Exploration constants. Single-constant rules read `c`; variance-aware
/// rules read `c1` (variance term) and `c2` (bias term).
struct SelectorParams {
  SelectorRule rule = SelectorRule::Uct1;
  double c = 1.4142135623730951;
  double c1 = 1.4142135623730951;  // sqrt(2)
  double c2 = 3.0;

  void validate() const {
    if (!(c > 0.0) || !(c1 > 0.0) || !(c2 > 0.0)) {
      throw std::invalid_argument("selector constants must be positive");
    }
  }
};

/// log N with the cold-start guard: log N := 0 for N <= 1, so exploration
/// bonuses start at zero instead of -inf at an empty node.
inline double guarded_log(double total_visits) {
  return total_visits <= 1.0 ? 0.0 : std::log(total_visits);
}

/// Probability vector over a node's action set. Entries are floored at
/// kFloor and renormalized on construction so that divergences dividing
/// by the prior stay finite.
class PriorDistribution {
 public:
  static constexpr double kFloor = 1e-12;

  PriorDistribution() = default;

  explicit PriorDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
      throw std::invalid_argument("prior over empty action set");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("prior entries must be finite and nonnegative");
      }
      sum += p;
    }
    if (!(sum > 0.0)) {
      throw std::invalid_argument("prior must have positive mass");
    }
    for (double& p : probs_) p /= sum;
    // Flooring perturbs the sum by at most |A| * kFloor; renormalize once more.
    sum = 0.0;
    for (double& p : probs_) {
      if (p < kFloor) p = kFloor;
      sum += p;
    }
    for (double& p : probs_) p /= sum;
  }

  static PriorDistribution uniform(std::size_t num_actions) {
    if (num_actions == 0) {
      throw std::invalid_argument("prior over empty action set");
    }
    return PriorDistribution(std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions)));
  }

  /// Adopts probabilities verbatim when the caller already holds normalized
  /// data (e.g. reloading a checkpoint this class wrote). Renormalizing such
  /// data would perturb it by an ulp; this path validates without dividing.
  static PriorDistribution from_normalized(std::vector<double> probs) {
    if (probs.empty()) {
      throw std::invalid_argument("prior over empty action set");
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("prior entries must be finite and nonnegative");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("prior is not normalized");
    }
    PriorDistribution out;
    out.probs_ = std::move(probs);
    return out;
  }

  double operator[](std::size_t a) const { return probs_[a]; }
  std::size_t size() const { return probs_.size(); }
  bool empty() const { return probs_.empty(); }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Snapshot of one node's per-child statistics, as consumed by the
/// selection rules: action values, visit counts, empirical standard
/// deviations, the policy prior, and the total visit count N.
struct ChildStatsView {
  std::vector<double> q;
  std::vector<std::int64_t> n;
  std::vector<double> sigma;
  PriorDistribution prior;
  std::int64_t total_visits = 0;  // N = sum of n

  std::size_t size() const { return q.size(); }
};

inline ChildStatsView make_view(std::vector<double> q, std::vector<std::int64_t> n,
                                std::vector<double> sigma, PriorDistribution prior) {
  ChildStatsView view;
  const std::size_t num_actions = q.size();
  if (num_actions == 0) {
    throw std::invalid_argument("view over empty action set");
  }
  if (n.size() != num_actions || sigma.size() != num_actions || prior.size() != num_actions) {
    throw std::invalid_argument("view vectors must share one length");
  }
  view.q = std::move(q);
  view.n = std::move(n);
  view.sigma = std::move(sigma);
  view.prior = std::move(prior);
  view.total_visits = std::accumulate(view.n.begin(), view.n.end(), std::int64_t{0});
  return view;
}

/// Smoothed empirical visit distribution: (1 + n_a) / (|A| + N).
/// Summed over a node's actions this is exactly 1.
inline double empirical_pi(std::int64_t n_a, std::int64_t total_visits, std::size_t num_actions) {
  if (num_actions == 0) {
    throw std::invalid_argument("empirical_pi: empty action set");
  }
  if (n_a < 0 || total_visits < n_a) {
    throw std::invalid_argument("empirical_pi: require 0 <= n_a <= N");
  }
  return (1.0 + static_cast<double>(n_a)) /
         (static_cast<double>(num_actions) + static_cast<double>(total_visits));
}

}  // namespace vamcts
