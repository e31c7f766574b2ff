#pragma once

#include <vector>

#include "semfaith/types.hpp"

namespace semfaith {

/// Outcome of the alternating minimization over the two constraint sets.
struct SfResult {
    Scalar d_min = 0;  // nats
    Scalar f_s = 1;    // 1 / (1 + d_min)
    TransitionMatrix q_star;
    TransitionMatrix a_star;
    int outer_iters = 0;
    std::vector<Scalar> objective_trace;  // one entry per outer iteration
    Scalar constraint_residual = 0;       // max absolute marginal violation
    Vec u_star;   // A-step scaling factors, u_j = exp(-lambda_j)
    Vec nu_star;  // Q-step row duals
    Vec xi_star;  // Q-step column duals (marginal constraint)
};

struct AStepResult {
    TransitionMatrix a;
    Vec u;
    int sweeps = 0;
};

struct QStepResult {
    TransitionMatrix q;
    Vec nu;
    Vec xi;
    int sweeps = 0;
};

/// Rank-one initializer Q0_ij = p_q_j: exactly row-stochastic and exactly
/// feasible for the marginal constraint p_c^T Q0 = p_q.
TransitionMatrix init_q_matrix(const TopicDistribution& p_c,
                               const TopicDistribution& p_q);

/// I-projection of Q onto the answer constraint set via the scaling
/// fixed point u_j = p_a_j / sum_i [p_c_i Q_ij / sum_k Q_ik u_k].
AStepResult a_step(const TransitionMatrix& q, const TopicDistribution& p_c,
                   const TopicDistribution& p_a, const SolverConfig& cfg);

/// Reverse I-projection of A onto the question constraint set. Duals
/// maximize the concave dual by coordinate-wise monotone root-finds;
/// Q_ij = A_ij / (nu_i + xi_j).
QStepResult q_step(const TransitionMatrix& a, const TopicDistribution& p_c,
                   const TopicDistribution& p_q, const SolverConfig& cfg);

SfResult solve_sf(const QcaTriplet& t, const SolverConfig& cfg);

/// Same alternation started from a caller-supplied feasible Q0 instead of the
/// rank-one initializer. The smoothed problem is solved either way; Q0 must
/// be feasible for the smoothed marginals.
SfResult solve_sf_from(const QcaTriplet& t, const SolverConfig& cfg,
                       const TransitionMatrix& q0);

namespace detail {

struct DualAscentResult {
    Vec row_duals;  // one per source topic
    Vec col_duals;  // one per destination topic
    int sweeps = 0;
};

/// Maximizes sum_ij p_c_i A_ij log(r_i + c_j) - sum_i p_c_i r_i
///           - sum_j target_j c_j + 1
/// by alternating exact 1-D root-finds. Shared by the Q-step (target = p_q)
/// and the entropy-production dual (target = p_a).
DualAscentResult dual_marginal_ascent(const Mat& a, const Vec& p_c,
                                      const Vec& target,
                                      const SolverConfig& cfg);

/// Column scalings toward the target marginal followed by exact row
/// renormalization, repeated until the residual is well inside the
/// feasibility tolerance. Scalings stay within the optimal solution family.
void marginal_polish(Mat& m, const Vec& weights, const Vec& target);

}  // namespace detail

}  // namespace semfaith
