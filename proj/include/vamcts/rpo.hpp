#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vamcts/core.hpp"
#include "vamcts/selectors.hpp"

namespace vamcts {

// ---------------------------------------------------------------------------
// Convex generators
// ---------------------------------------------------------------------------

enum class DivergenceKind {
  Hellinger,
  Kl,
  VarianceWeightedHellinger,
  VarianceWeightedKl,
};

inline const char* to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::Hellinger:                 return "HELLINGER";
    case DivergenceKind::Kl:                        return "KL";
    case DivergenceKind::VarianceWeightedHellinger: return "VARIANCE_WEIGHTED_HELLINGER";
    case DivergenceKind::VarianceWeightedKl:        return "VARIANCE_WEIGHTED_KL";
  }
  throw std::invalid_argument("unknown divergence kind");
}

inline bool is_variance_weighted(DivergenceKind kind) {
  return kind == DivergenceKind::VarianceWeightedHellinger ||
         kind == DivergenceKind::VarianceWeightedKl;
}

/// Generator f(r) (with f(1) = 0, convex); sigma only enters the
/// variance-weighted kinds. KL uses the natural log throughout, matching
/// the log N in the regularizer weights.
inline double generator_value(DivergenceKind kind, double r, double sigma = 0.0) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("generator_value: ratio must be positive");
  }
  switch (kind) {
    case DivergenceKind::Hellinger:                 return 2.0 * (1.0 - std::sqrt(r));
    case DivergenceKind::Kl:                        return -std::log(r);
    case DivergenceKind::VarianceWeightedHellinger: return 2.0 * sigma * (1.0 - std::sqrt(r));
    case DivergenceKind::VarianceWeightedKl:        return -sigma * std::log(r);
  }
  throw std::invalid_argument("unknown divergence kind");
}

/// Shape function h(r, sigma) = -f'(r, sigma): the monotone-decreasing
/// factor each exploration bonus decomposes into.
inline double generator_shape(DivergenceKind kind, double r, double sigma = 0.0) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("generator_shape: ratio must be positive");
  }
  switch (kind) {
    case DivergenceKind::Hellinger:                 return 1.0 / std::sqrt(r);
    case DivergenceKind::Kl:                        return 1.0 / r;
    case DivergenceKind::VarianceWeightedHellinger: return sigma / std::sqrt(r);
    case DivergenceKind::VarianceWeightedKl:        return sigma / r;
  }
  throw std::invalid_argument("unknown divergence kind");
}

// ---------------------------------------------------------------------------
// Divergences
// ---------------------------------------------------------------------------

namespace detail {

inline void check_sigma(DivergenceKind kind, const std::vector<double>* sigma, std::size_t n) {
  if (is_variance_weighted(kind)) {
    if (sigma == nullptr) {
      throw std::invalid_argument("divergence: variance-weighted kind requires sigma");
    }
    if (sigma->size() != n) {
      throw std::invalid_argument("divergence: sigma length mismatch");
    }
    for (double s : *sigma) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("divergence: sigma entries must be finite and nonnegative");
      }
    }
  }
}

}  // namespace detail

/// Csiszar form D_f(pi, y) = sum_a pi(a) * f(y_a / pi(a)). y need not be on
/// the simplex (the marginal-gain check perturbs single coordinates), but
/// must be strictly positive.
inline double divergence(DivergenceKind kind, const PriorDistribution& prior,
                         const std::vector<double>& y,
                         const std::vector<double>* sigma = nullptr) {
  if (prior.size() != y.size()) {
    throw std::invalid_argument("divergence: prior/y length mismatch");
  }
  detail::check_sigma(kind, sigma, y.size());
  double total = 0.0;
  for (std::size_t a = 0; a < y.size(); ++a) {
    if (!(y[a] > 0.0)) {
      throw std::invalid_argument("divergence: y entries must be strictly positive");
    }
    const double s = sigma ? (*sigma)[a] : 0.0;
    total += prior[a] * generator_value(kind, y[a] / prior[a], s);
  }
  return total;
}

/// Separable prior-free form sum_a f(y_a): the regularizer behind the
/// prior-free rules, where the shape acts on the visit distribution itself.
inline double divergence_separable(DivergenceKind kind, const std::vector<double>& y,
                                   const std::vector<double>* sigma = nullptr) {
  detail::check_sigma(kind, sigma, y.size());
  double total = 0.0;
  for (std::size_t a = 0; a < y.size(); ++a) {
    if (!(y[a] > 0.0)) {
      throw std::invalid_argument("divergence: y entries must be strictly positive");
    }
    const double s = sigma ? (*sigma)[a] : 0.0;
    total += generator_value(kind, y[a], s);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Regularizer weights
// ---------------------------------------------------------------------------

struct LambdaWeights {
  double lambda1 = 0.0;
  std::optional<double> lambda2;  // present only for the dual-bonus rules
};

/// The per-rule regularizer weight(s) as functions of the total count N and
/// the action-set size A. Log-based weights vanish at N <= 1 (log-guard).
inline LambdaWeights lambda_weights(SelectorRule rule, std::int64_t total_visits,
                                    std::size_t num_actions, const SelectorParams& params) {
  if (num_actions == 0) {
    throw std::invalid_argument("lambda_weights: empty action set");
  }
  if (total_visits < 0) {
    throw std::invalid_argument("lambda_weights: negative count");
  }
  const double n = static_cast<double>(total_visits);
  const double denom = static_cast<double>(num_actions) + n;
  const double log_n = guarded_log(n);
  switch (rule) {
    case SelectorRule::Uct1:
    case SelectorRule::UctP:
      return {params.c * std::sqrt(log_n / denom), std::nullopt};
    case SelectorRule::Puct:
      return {params.c * std::sqrt(n) / denom, std::nullopt};
    case SelectorRule::UctV:
    case SelectorRule::UctVP:
      return {params.c1 * std::sqrt(log_n) / std::sqrt(denom),
              params.c2 * log_n / denom};
    case SelectorRule::UctVH:
    case SelectorRule::PuctV:
      return {params.c1 * std::sqrt(n) / denom, params.c2 * log_n / denom};
  }
  throw std::invalid_argument("unknown selector rule");
}

// ---------------------------------------------------------------------------
// Bonus factorization
// ---------------------------------------------------------------------------

/// One exploration-bonus component in factored form: a global scale phi(N)
/// and a decreasing shape h(r, sigma). Prior-free rules evaluate h at the
/// empirical visit share r = pi_hat(a); prior-based rules at the lifted
/// ratio r = pi_hat(a) / pi_theta(a).
struct FactorizedBonus {
  DivergenceKind kind = DivergenceKind::Hellinger;
  std::function<double(double)> phi;        // total count N -> weight
  std::function<double(double, double)> h;  // (ratio, sigma) -> shape value
  std::string label;
};

inline std::vector<FactorizedBonus> factorization(SelectorRule rule, const SelectorParams& params,
                                                  std::size_t num_actions) {
  auto weight = [params, num_actions, rule](int which) {
    return [params, num_actions, rule, which](double n) {
      const LambdaWeights w =
          lambda_weights(rule, static_cast<std::int64_t>(n), num_actions, params);
      return which == 0 ? w.lambda1 : w.lambda2.value();
    };
  };
  auto shape = [](DivergenceKind kind) {
    return [kind](double r, double sigma) { return generator_shape(kind, r, sigma); };
  };
  switch (rule) {
    case SelectorRule::Uct1:
    case SelectorRule::UctP:
      return {{DivergenceKind::Hellinger, weight(0), shape(DivergenceKind::Hellinger),
               "hellinger"}};
    case SelectorRule::Puct:
      return {{DivergenceKind::Kl, weight(0), shape(DivergenceKind::Kl), "kl"}};
    case SelectorRule::UctV:
    case SelectorRule::UctVP:
      return {{DivergenceKind::VarianceWeightedHellinger, weight(0),
               shape(DivergenceKind::VarianceWeightedHellinger), "variance_weighted_hellinger"},
              {DivergenceKind::Kl, weight(1), shape(DivergenceKind::Kl), "kl"}};
    case SelectorRule::UctVH:
    case SelectorRule::PuctV:
      return {{DivergenceKind::VarianceWeightedKl, weight(0),
               shape(DivergenceKind::VarianceWeightedKl), "variance_weighted_kl"},
              {DivergenceKind::Kl, weight(1), shape(DivergenceKind::Kl), "kl"}};
  }
  throw std::invalid_argument("unknown selector rule");
}

/// Evaluates one rule's exploration bonus both ways: directly through the
/// selector's closed form (score with q = 0) and through the factored
/// sum of phi(N) * h(ratio, sigma) components. The two must agree to
/// floating-point accuracy; the caller asserts it.
struct FactorizeCheck {
  double bonus_direct = 0.0;
  double bonus_factored = 0.0;
};

inline FactorizeCheck factorize_check(SelectorRule rule, std::int64_t total_visits,
                                      std::int64_t n_a, std::size_t num_actions, double sigma_a,
                                      const SelectorParams& params,
                                      std::optional<double> prior_a = std::nullopt) {
  if (num_actions == 0) {
    throw std::invalid_argument("factorize_check: empty action set");
  }
  if (n_a < 0 || total_visits < n_a) {
    throw std::invalid_argument("factorize_check: require 0 <= n_a <= N");
  }
  if (num_actions == 1 && n_a != total_visits) {
    throw std::invalid_argument("factorize_check: single action must hold all visits");
  }
  const double p_a = prior_a.value_or(1.0 / static_cast<double>(num_actions));
  if (!(p_a > 0.0) || !(p_a < 1.0 || num_actions == 1)) {
    throw std::invalid_argument("factorize_check: prior_a must lie in (0,1)");
  }

  // Synthesize a node snapshot holding the remaining visits and prior mass
  // on the other actions, and read the true selector's bonus off action 0.
  std::vector<double> q(num_actions, 0.0);
  std::vector<std::int64_t> n(num_actions, 0);
  std::vector<double> sigma(num_actions, 0.0);
  std::vector<double> prior_probs(num_actions, 0.0);
  n[0] = n_a;
  sigma[0] = sigma_a;
  prior_probs[0] = p_a;
  if (num_actions > 1) {
    n[num_actions - 1] = total_visits - n_a;
    const double rest = (1.0 - p_a) / static_cast<double>(num_actions - 1);
    for (std::size_t a = 1; a < num_actions; ++a) prior_probs[a] = rest;
  }
  const ChildStatsView view =
      make_view(std::move(q), std::move(n), std::move(sigma), PriorDistribution(prior_probs));
  SelectorParams scored = params;
  scored.rule = rule;
  const SelectionScoreBreakdown breakdown = score_breakdown(view, scored, 0);

  const double pi_hat = empirical_pi(n_a, total_visits, num_actions);
  const double ratio = is_prior_based(rule) ? pi_hat / view.prior[0] : pi_hat;
  double factored = 0.0;
  for (const FactorizedBonus& component : factorization(rule, params, num_actions)) {
    factored +=
        component.phi(static_cast<double>(total_visits)) * component.h(ratio, sigma_a);
  }
  return {breakdown.exploration_term_1 + breakdown.exploration_term_2, factored};
}

// ---------------------------------------------------------------------------
// RPO objectives over the simplex
// ---------------------------------------------------------------------------

/// One weighted regularizer. With a prior it is the Csiszar divergence
/// D_f(prior, y); without one it is the separable sum_a f(y_a) the
/// prior-free rules maximize against.
struct Regularizer {
  double weight = 0.0;
  DivergenceKind kind = DivergenceKind::Kl;
  std::optional<PriorDistribution> prior;
  std::optional<std::vector<double>> sigma;

  double value(const std::vector<double>& y) const {
    const std::vector<double>* s = sigma ? &*sigma : nullptr;
    return prior ? divergence(kind, *prior, y, s) : divergence_separable(kind, y, s);
  }

  /// d/dy_a of the (unweighted) regularizer: f'(ratio) = -h(ratio, sigma_a).
  double partial(const std::vector<double>& y, std::size_t a) const {
    const double ratio = prior ? y[a] / (*prior)[a] : y[a];
    const double s = sigma ? (*sigma)[a] : 0.0;
    return -generator_shape(kind, ratio, s);
  }
};

struct RpoObjective {
  std::vector<double> q;
  std::vector<Regularizer> regularizers;  // 1 or 2

  void validate() const {
    if (q.empty()) {
      throw std::invalid_argument("RpoObjective: empty payoff vector");
    }
    if (regularizers.empty() || regularizers.size() > 2) {
      throw std::invalid_argument("RpoObjective: expected 1 or 2 regularizers");
    }
    for (const Regularizer& reg : regularizers) {
      if (!(reg.weight >= 0.0) || !std::isfinite(reg.weight)) {
        throw std::invalid_argument("RpoObjective: weights must be finite and nonnegative");
      }
      if (reg.prior && reg.prior->size() != q.size()) {
        throw std::invalid_argument("RpoObjective: prior length mismatch");
      }
      if (is_variance_weighted(reg.kind)) {
        if (!reg.sigma) {
          throw std::invalid_argument("RpoObjective: variance-weighted kind requires sigma");
        }
      }
      if (reg.sigma && reg.sigma->size() != q.size()) {
        throw std::invalid_argument("RpoObjective: sigma length mismatch");
      }
    }
  }
};

struct SimplexPoint {
  std::vector<double> y;
};

inline constexpr double kSimplexFloor = PriorDistribution::kFloor;

/// Floors and renormalizes a nonnegative vector onto the interior simplex.
inline SimplexPoint make_simplex_point(std::vector<double> y) {
  if (y.empty()) {
    throw std::invalid_argument("make_simplex_point: empty vector");
  }
  double sum = 0.0;
  for (double v : y) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("make_simplex_point: entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (!(sum > 0.0)) {
    throw std::invalid_argument("make_simplex_point: no mass");
  }
  for (double& v : y) v /= sum;
  sum = 0.0;
  for (double& v : y) {
    if (v < kSimplexFloor) v = kSimplexFloor;
    sum += v;
  }
  for (double& v : y) v /= sum;
  return SimplexPoint{std::move(y)};
}

/// L(y) = q . y - sum_i lambda_i * D_i(y).
inline double objective_value(const RpoObjective& obj, const SimplexPoint& point) {
  obj.validate();
  if (point.y.size() != obj.q.size()) {
    throw std::invalid_argument("objective_value: dimension mismatch");
  }
  double value = 0.0;
  for (std::size_t a = 0; a < obj.q.size(); ++a) value += obj.q[a] * point.y[a];
  for (const Regularizer& reg : obj.regularizers) {
    if (reg.weight == 0.0) continue;
    value -= reg.weight * reg.value(point.y);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Simplex solver
// ---------------------------------------------------------------------------

class RpoNonConvergence : public std::runtime_error {
 public:
  RpoNonConvergence(const std::string& what, SimplexPoint best, double residual)
      : std::runtime_error(what), best_iterate(std::move(best)), residual(residual) {}

  SimplexPoint best_iterate;
  double residual;
};

namespace detail {

inline void rpo_gradient(const RpoObjective& obj, const std::vector<double>& y,
                         std::vector<double>& g) {
  g.assign(y.size(), 0.0);
  for (std::size_t a = 0; a < y.size(); ++a) g[a] = obj.q[a];
  for (const Regularizer& reg : obj.regularizers) {
    if (reg.weight == 0.0) continue;
    for (std::size_t a = 0; a < y.size(); ++a) {
      g[a] -= reg.weight * reg.partial(y, a);
    }
  }
}

/// First-order optimality on the simplex, floor-aware: interior entries
/// must share the common gradient value; floored entries may only fall
/// below it (pushing more mass there cannot help).
inline double kkt_residual(const std::vector<double>& y, const std::vector<double>& g) {
  double mean = 0.0;
  for (std::size_t a = 0; a < y.size(); ++a) mean += y[a] * g[a];
  double residual = 0.0;
  for (std::size_t a = 0; a < y.size(); ++a) {
    const bool floored = y[a] <= 10.0 * kSimplexFloor;
    const double gap = floored ? std::max(0.0, g[a] - mean) : std::abs(g[a] - mean);
    residual = std::max(residual, gap);
  }
  return residual;
}

}  // namespace detail

/// Maximizes the concave RPO objective over the interior simplex with
/// exponentiated-gradient ascent at a fixed step (retrying with smaller
/// steps on failure). Convergence is certified by the floor-aware
/// projected-gradient residual.
inline SimplexPoint solve_rpo(const RpoObjective& obj, double tol) {
  obj.validate();
  if (!(tol > 0.0)) {
    throw std::invalid_argument("solve_rpo: tolerance must be positive");
  }
  const std::size_t num_actions = obj.q.size();
  constexpr int kMaxIterations = 100000;
  constexpr int kAttempts = 5;

  SimplexPoint best = make_simplex_point(std::vector<double>(num_actions, 1.0));
  double best_value = objective_value(obj, best);
  double last_residual = std::numeric_limits<double>::infinity();

  std::vector<double> g;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    SimplexPoint point = make_simplex_point(std::vector<double>(num_actions, 1.0));
    detail::rpo_gradient(obj, point.y, g);
    double scale = 0.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    // Step small enough that exp() arguments stay tame; each retry shrinks it.
    const double eta = 1.0 / ((1.0 + scale) * std::pow(4.0, attempt));

    for (int iter = 0; iter < kMaxIterations; ++iter) {
      detail::rpo_gradient(obj, point.y, g);
      const double residual = detail::kkt_residual(point.y, g);
      last_residual = std::min(last_residual, residual);
      const double value = objective_value(obj, point);
      if (value > best_value) {
        best_value = value;
        best = point;
      }
      if (residual <= tol) return point;

      double max_g = g[0];
      for (double v : g) max_g = std::max(max_g, v);
      for (std::size_t a = 0; a < num_actions; ++a) {
        point.y[a] *= std::exp(eta * (g[a] - max_g));
      }
      point = make_simplex_point(std::move(point.y));
    }
  }
  throw RpoNonConvergence("solve_rpo: no convergence within iteration budget", best,
                          last_residual);
}

// ---------------------------------------------------------------------------
// Rule -> objective mapping and the marginal-gain verification
// ---------------------------------------------------------------------------

/// The RPO objective a selection rule maximizes, instantiated from a node
/// snapshot: payoff q, weights lambda(N, A), and the rule's regularizer(s).
/// Prior-free rules get separable regularizers; prior-based rules the
/// Csiszar lift around the node's prior.
inline RpoObjective rpo_objective_for(SelectorRule rule, const ChildStatsView& view,
                                      const SelectorParams& params) {
  const LambdaWeights weights =
      lambda_weights(rule, view.total_visits, view.size(), params);
  const std::vector<FactorizedBonus> components = factorization(rule, params, view.size());
  RpoObjective obj;
  obj.q = view.q;
  for (std::size_t i = 0; i < components.size(); ++i) {
    Regularizer reg;
    reg.kind = components[i].kind;
    reg.weight = i == 0 ? weights.lambda1 : weights.lambda2.value();
    if (is_prior_based(rule)) reg.prior = view.prior;
    if (is_variance_weighted(reg.kind)) reg.sigma = view.sigma;
    obj.regularizers.push_back(std::move(reg));
  }
  return obj;
}

struct MarginalGainCheck {
  double selector_score = 0.0;
  double rpo_marginal = 0.0;
};

/// Verifies one rule's score against its RPO objective: the closed-form
/// selector score for action a must equal q_a + sum_i lambda_i *
/// (-dD_i/dy_a) at y = pi_hat, with the divergence partials taken by
/// central finite differences (renormalization-free coordinate
/// perturbation). Agreement is O(eps^2); the caller asserts it.
inline MarginalGainCheck marginal_gain_check(SelectorRule rule, const ChildStatsView& view,
                                             const SelectorParams& params, std::size_t a,
                                             double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("marginal_gain_check: eps must be positive");
  }
  if (a >= view.size()) {
    throw std::out_of_range("marginal_gain_check: action out of range");
  }
  std::vector<double> pi_hat(view.size());
  for (std::size_t b = 0; b < view.size(); ++b) {
    pi_hat[b] = empirical_pi(view.n[b], view.total_visits, view.size());
  }
  if (eps >= 0.5 * pi_hat[a]) {
    throw std::invalid_argument("marginal_gain_check: eps too large for this view");
  }

  const RpoObjective obj = rpo_objective_for(rule, view, params);
  double marginal = view.q[a];
  std::vector<double> plus = pi_hat;
  std::vector<double> minus = pi_hat;
  plus[a] += eps;
  minus[a] -= eps;
  for (const Regularizer& reg : obj.regularizers) {
    const double partial = (reg.value(plus) - reg.value(minus)) / (2.0 * eps);
    marginal += reg.weight * (-partial);
  }

  SelectorParams scored = params;
  scored.rule = rule;
  return {score(view, scored, a), marginal};
}

}  // namespace vamcts
