#pragma once

#include <cmath>
#include <stdexcept>

#include "vamcts/core.hpp"

namespace vamcts {

/// Diagnostic decomposition of a selection score into its value term and
/// up to two exploration bonuses (the second is zero for single-bonus rules).
struct SelectionScoreBreakdown {
  double q_term = 0.0;
  double exploration_term_1 = 0.0;
  double exploration_term_2 = 0.0;
  double total = 0.0;
};

namespace detail {

inline SelectionScoreBreakdown finish(double q, double b1, double b2 = 0.0) {
  return SelectionScoreBreakdown{q, b1, b2, q + b1 + b2};
}

/// Per-node factors shared by every child of one node. select_action hoists
/// them out of its loop; the per-action entry points recompute them, which
/// yields bit-identical scores either way.
struct NodeScale {
  double log_n = 0.0;   // guarded: 0 for N <= 1
  double sqrt_n = 0.0;
};

inline NodeScale node_scale(const ChildStatsView& view) {
  const double n = static_cast<double>(view.total_visits);
  return {guarded_log(n), std::sqrt(n)};
}

}  // namespace detail

// Each rule scores action a from the node snapshot. N = view.total_visits,
// n_a = view.n[a]; log N carries the guard from core (0 for N <= 1).

/// UCT1: q_a + c * sqrt(log N / (1 + n_a)).
inline SelectionScoreBreakdown score_uct1_breakdown(const ChildStatsView& view,
                                                    const SelectorParams& params, std::size_t a,
                                                    const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  return detail::finish(view.q[a], params.c * std::sqrt(scale.log_n / denom));
}

/// PUCT: q_a + c * prior(a) * sqrt(N) / (1 + n_a).
inline SelectionScoreBreakdown score_puct_breakdown(const ChildStatsView& view,
                                                    const SelectorParams& params, std::size_t a,
                                                    const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  return detail::finish(view.q[a], params.c * view.prior[a] * scale.sqrt_n / denom);
}

/// UCT-P: q_a + c * sqrt(prior(a) * log N / (1 + n_a)).
inline SelectionScoreBreakdown score_uct_p_breakdown(const ChildStatsView& view,
                                                     const SelectorParams& params, std::size_t a,
                                                     const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  return detail::finish(view.q[a], params.c * std::sqrt(view.prior[a] * scale.log_n / denom));
}

/// UCT-V: q_a + c1 * sigma_a * sqrt(log N / (1 + n_a)) + c2 * log N / (1 + n_a).
inline SelectionScoreBreakdown score_uct_v_breakdown(const ChildStatsView& view,
                                                     const SelectorParams& params, std::size_t a,
                                                     const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  return detail::finish(view.q[a], params.c1 * view.sigma[a] * std::sqrt(scale.log_n / denom),
                        params.c2 * scale.log_n / denom);
}

/// UCT-V-H: the heuristic decay variant; sqrt(N) replaces sqrt(log N) in
/// the variance term.
inline SelectionScoreBreakdown score_uct_v_h_breakdown(const ChildStatsView& view,
                                                       const SelectorParams& params, std::size_t a,
                                                       const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  return detail::finish(view.q[a], params.c1 * view.sigma[a] * scale.sqrt_n / denom,
                        params.c2 * scale.log_n / denom);
}

/// UCT-V-P: q_a + c1 * sigma_a * sqrt(prior(a) * log N / (1 + n_a))
///              + c2 * prior(a) * log N / (1 + n_a).
inline SelectionScoreBreakdown score_uct_v_p_breakdown(const ChildStatsView& view,
                                                       const SelectorParams& params, std::size_t a,
                                                       const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  const double pi = view.prior[a];
  return detail::finish(view.q[a],
                        params.c1 * view.sigma[a] * std::sqrt(pi * scale.log_n / denom),
                        params.c2 * pi * scale.log_n / denom);
}

/// PUCT-V: q_a + c1 * prior(a) * sigma_a * sqrt(N) / (1 + n_a)
///             + c2 * prior(a) * log N / (1 + n_a).
inline SelectionScoreBreakdown score_puct_v_breakdown(const ChildStatsView& view,
                                                      const SelectorParams& params, std::size_t a,
                                                      const detail::NodeScale& scale) {
  const double denom = 1.0 + static_cast<double>(view.n[a]);
  const double pi = view.prior[a];
  return detail::finish(view.q[a], params.c1 * pi * view.sigma[a] * scale.sqrt_n / denom,
                        params.c2 * pi * scale.log_n / denom);
}

inline SelectionScoreBreakdown score_breakdown(const ChildStatsView& view,
                                               const SelectorParams& params, std::size_t a,
                                               const detail::NodeScale& scale) {
  switch (params.rule) {
    case SelectorRule::Uct1:  return score_uct1_breakdown(view, params, a, scale);
    case SelectorRule::Puct:  return score_puct_breakdown(view, params, a, scale);
    case SelectorRule::UctP:  return score_uct_p_breakdown(view, params, a, scale);
    case SelectorRule::UctV:  return score_uct_v_breakdown(view, params, a, scale);
    case SelectorRule::UctVH: return score_uct_v_h_breakdown(view, params, a, scale);
    case SelectorRule::UctVP: return score_uct_v_p_breakdown(view, params, a, scale);
    case SelectorRule::PuctV: return score_puct_v_breakdown(view, params, a, scale);
  }
  throw std::invalid_argument("unknown selector rule");
}

// Per-action convenience entry points (they recompute the node factors).

inline SelectionScoreBreakdown score_uct1_breakdown(const ChildStatsView& v,
                                                    const SelectorParams& p, std::size_t a) {
  return score_uct1_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_puct_breakdown(const ChildStatsView& v,
                                                    const SelectorParams& p, std::size_t a) {
  return score_puct_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_uct_p_breakdown(const ChildStatsView& v,
                                                     const SelectorParams& p, std::size_t a) {
  return score_uct_p_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_uct_v_breakdown(const ChildStatsView& v,
                                                     const SelectorParams& p, std::size_t a) {
  return score_uct_v_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_uct_v_h_breakdown(const ChildStatsView& v,
                                                       const SelectorParams& p, std::size_t a) {
  return score_uct_v_h_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_uct_v_p_breakdown(const ChildStatsView& v,
                                                       const SelectorParams& p, std::size_t a) {
  return score_uct_v_p_breakdown(v, p, a, detail::node_scale(v));
}
inline SelectionScoreBreakdown score_puct_v_breakdown(const ChildStatsView& v,
                                                      const SelectorParams& p, std::size_t a) {
  return score_puct_v_breakdown(v, p, a, detail::node_scale(v));
}

inline SelectionScoreBreakdown score_breakdown(const ChildStatsView& view,
                                               const SelectorParams& params, std::size_t a) {
  return score_breakdown(view, params, a, detail::node_scale(view));
}

inline double score_uct1(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_uct1_breakdown(v, p, a).total;
}
inline double score_puct(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_puct_breakdown(v, p, a).total;
}
inline double score_uct_p(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_uct_p_breakdown(v, p, a).total;
}
inline double score_uct_v(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_uct_v_breakdown(v, p, a).total;
}
inline double score_uct_v_h(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_uct_v_h_breakdown(v, p, a).total;
}
inline double score_uct_v_p(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_uct_v_p_breakdown(v, p, a).total;
}
inline double score_puct_v(const ChildStatsView& v, const SelectorParams& p, std::size_t a) {
  return score_puct_v_breakdown(v, p, a).total;
}

inline double score(const ChildStatsView& view, const SelectorParams& params, std::size_t a) {
  return score_breakdown(view, params, a).total;
}

/// Arg max of the configured rule's scores; ties resolve to the lowest
/// action index so cold starts are deterministic. The per-node factors are
/// computed once for the whole sweep.
inline std::size_t select_action(const ChildStatsView& view, const SelectorParams& params) {
  if (view.size() == 0) {
    throw std::invalid_argument("select_action: empty action set");
  }
  const detail::NodeScale scale = detail::node_scale(view);
  std::size_t best = 0;
  double best_score = score_breakdown(view, params, 0, scale).total;
  for (std::size_t a = 1; a < view.size(); ++a) {
    const double s = score_breakdown(view, params, a, scale).total;
    if (s > best_score) {
      best_score = s;
      best = a;
    }
  }
  return best;
}

}  // namespace vamcts
