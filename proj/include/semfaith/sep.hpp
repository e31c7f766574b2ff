#pragma once

#include "semfaith/sf.hpp"
#include "semfaith/types.hpp"

namespace semfaith {

/// Entropy-production lower bound and its thermodynamic decomposition.
/// All values are stored in nats; reporting layers convert.
struct SepResult {
    Scalar sep_total = 0;   // minimized forward/reverse path KL, >= 0
    Scalar s_system = 0;    // H[p_a] - H[p_c]
    Scalar s_medium = 0;    // sep_total - s_system (identity by construction)
    Scalar d_forward_reverse = 0;  // sum_ij p_c_i A_ij log(A_ij / A^R_ji)
    TransitionMatrix a_reverse;    // rows indexed by answer-side topic j
    Vec xi_star;  // context-side duals
    Vec nu_star;  // answer-side duals
    Scalar naive_sep = 0;        // 1/F_S - 1 (NaN when F_S unknown)
    Scalar first_order_sep = 0;  // NaN when the SF duals are unavailable
};

/// H[p_a] - H[p_c]; may be negative.
Scalar system_entropy_change(const TopicDistribution& p_c,
                             const TopicDistribution& p_a, Units units);

/// Lower bound on total entropy production: maximizes the dual
///   L_S(xi, nu) = sum_ij p_c_i A*_ij log(xi_i + nu_j)
///                 - sum_i p_c_i xi_i - sum_j p_a_j nu_j + 1
/// (the Q-step dual with the question marginal replaced by the answer
/// marginal) and recovers the feasible reverse matrix
///   A^R_ji = (p_c_i / p_a_j) * A*_ij / (xi_i + nu_j),
/// which satisfies both reverse constraints at the optimum.
///
/// naive_sep / first_order_sep are filled with NaN here; use the SfResult
/// overload when those fields are wanted.
SepResult solve_sep(const TransitionMatrix& a_star, const TopicDistribution& p_c,
                    const TopicDistribution& p_a, const SolverConfig& cfg);

/// Convenience overload that also fills naive_sep and first_order_sep from
/// the faithfulness solve.
SepResult solve_sep(const SfResult& sf, const QcaTriplet& t,
                    const SolverConfig& cfg);

/// 1/f_s - 1.
Scalar naive_sep(Scalar f_s);

/// First-order estimate (1/f_s - 1) + sum_j xi*_j (p_q_j - p_a_j), using the
/// converged Q-step marginal duals without re-optimization.
Scalar first_order_sep(const SfResult& sf, const TopicDistribution& p_q,
                       const TopicDistribution& p_a);

}  // namespace semfaith
