#pragma once

#include "semfaith/types.hpp"

namespace semfaith::oracle {

/// Deliberately simple reference solvers used as ground truth for the main
/// solvers on small instances. Slow is fine; independent is the point.
struct OracleConfig {
    int grid_resolution = 1000;  // points per free parameter
    Scalar pgd_step = 1.0;       // base step, adapted by backtracking
    int pgd_iters = 2000;
    Scalar projection_tol = 1e-10;

    void validate() const;
};

/// Exhaustive N=2 search: after row-stochasticity and the marginal
/// constraint each matrix has one free parameter; the feasible product grid
/// is scanned and the best cell refined once.
Scalar grid_dmin_n2(const QcaTriplet& t, const OracleConfig& cfg);

/// Projected gradient descent on (A, Q) jointly, multi-start, Euclidean
/// projection by alternating row-simplex and marginal-affine projections.
Scalar pgd_dmin(const QcaTriplet& t, const OracleConfig& cfg);

/// Minimal total entropy production over feasible reverse matrices by the
/// same projected-gradient machinery.
Scalar pgd_sep(const TransitionMatrix& a_star, const TopicDistribution& p_c,
               const TopicDistribution& p_a, const OracleConfig& cfg);

}  // namespace semfaith::oracle
