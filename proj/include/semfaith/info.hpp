#pragma once

#include <cmath>
#include <vector>

#include "semfaith/types.hpp"

namespace semfaith {

/// -sum_i p_i log p_i with 0 log 0 := 0. Base 2 for bits, e for nats.
template <typename Derived>
Scalar shannon_entropy(const Eigen::MatrixBase<Derived>& p, Units units) {
    Scalar h = 0;
    for (Index i = 0; i < p.size(); ++i) {
        const Scalar pi = p(i);
        if (pi > Scalar(0)) {
            h -= units == Units::bits ? pi * std::log2(pi) : pi * std::log(pi);
        }
    }
    return h;
}

Scalar shannon_entropy(const TopicDistribution& p, Units units);

Scalar nats_to(Scalar x, Units units);

/// Conditional KL divergence sum_i p_c_i sum_j A_ij log(A_ij / Q_ij), nats.
/// Rows with p_c_i = 0 contribute nothing, even where A and Q disagree.
Scalar kl_conditional(const TransitionMatrix& a, const TransitionMatrix& q,
                      const TopicDistribution& p_c);

/// KL(p || q) between two plain distributions, nats. Closed-form route to
/// the joint minimum of the transition-matrix problem.
Scalar kl_divergence(const TopicDistribution& p, const TopicDistribution& q);

TopicDistribution from_cluster_counts(const std::vector<long long>& counts,
                                      Index n_topics);

}  // namespace semfaith
