#include "semfaith/info.hpp"
#include "semfaith/types.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace semfaith {

namespace {

constexpr Scalar kSumWindow = 1e-6;

void check_entries(const Vec& p) {
    for (Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) {
            std::ostringstream os;
            os << "non-finite probability entry at index " << i;
            throw InvalidInput(os.str());
        }
        if (p[i] < Scalar(0)) {
            std::ostringstream os;
            os << "negative probability entry " << p[i] << " at index " << i;
            throw InvalidInput(os.str());
        }
    }
}

}  // namespace

TopicDistribution::TopicDistribution(Vec probs) {
    if (probs.size() < 1) {
        throw InvalidInput("topic distribution needs at least one topic");
    }
    check_entries(probs);
    const Scalar sum = probs.sum();
    if (std::abs(sum - Scalar(1)) > kSumWindow) {
        std::ostringstream os;
        os << "probability mass sums to " << sum
           << ", outside the renormalization window of 1 +/- " << kSumWindow;
        throw InvalidInput(os.str());
    }
    probs_ = probs / sum;
}

TopicDistribution TopicDistribution::from_raw(Vec probs) {
    TopicDistribution d;
    d.probs_ = std::move(probs);
    return d;
}

TopicDistribution TopicDistribution::uniform(Index n) {
    return TopicDistribution(Vec::Constant(n, Scalar(1) / Scalar(n)));
}

TopicDistribution TopicDistribution::delta(Index n, Index i) {
    Vec v = Vec::Zero(n);
    v[i] = Scalar(1);
    return TopicDistribution(v);
}

TopicDistribution TopicDistribution::smoothed(Scalar eps) const {
    if (eps == Scalar(0)) return *this;
    Vec v = probs_.array() + eps;
    v /= v.sum();
    return TopicDistribution::from_raw(std::move(v));
}

TransitionMatrix::TransitionMatrix(Mat rows) {
    if (rows.rows() != rows.cols() || rows.rows() < 1) {
        throw InvalidInput("transition matrix must be square and non-empty");
    }
    for (Index i = 0; i < rows.rows(); ++i) {
        for (Index j = 0; j < rows.cols(); ++j) {
            if (!std::isfinite(rows(i, j)) || rows(i, j) < Scalar(0)) {
                std::ostringstream os;
                os << "invalid transition entry at (" << i << "," << j << ")";
                throw InvalidInput(os.str());
            }
        }
        const Scalar s = rows.row(i).sum();
        if (std::abs(s - Scalar(1)) > 1e-9) {
            std::ostringstream os;
            os << "row " << i << " sums to " << s << ", not 1 within 1e-9";
            throw InvalidInput(os.str());
        }
    }
    rows_ = std::move(rows);
}

TransitionMatrix TransitionMatrix::from_raw(Mat rows) {
    TransitionMatrix m;
    m.rows_ = std::move(rows);
    return m;
}

TransitionMatrix TransitionMatrix::rank_one(const TopicDistribution& row) {
    const Index n = row.size();
    Mat m(n, n);
    m.rowwise() = row.probs().transpose();
    return TransitionMatrix::from_raw(std::move(m));
}

TransitionMatrix TransitionMatrix::identity(Index n) {
    return TransitionMatrix::from_raw(Mat::Identity(n, n));
}

void SolverConfig::validate() const {
    if (tol_outer <= 0 || tol_inner <= 0) {
        throw InvalidInput("solver tolerances must be positive");
    }
    if (max_outer_iters < 1 || max_inner_iters < 1) {
        throw InvalidInput("iteration budgets must be positive");
    }
    if (epsilon_smooth < 0 || epsilon_smooth > 1e-6) {
        throw InvalidInput("epsilon_smooth must lie in [0, 1e-6]");
    }
}

std::vector<Finding> validate_triplet(const QcaTriplet& t) {
    std::vector<Finding> findings;
    const auto check_dist = [&](const char* name, const TopicDistribution& d) {
        if (d.size() < 1) {
            findings.push_back({name, "empty distribution"});
            return;
        }
        for (Index i = 0; i < d.size(); ++i) {
            if (!std::isfinite(d[i])) {
                std::ostringstream os;
                os << "non-finite entry at index " << i;
                findings.push_back({name, os.str()});
            } else if (d[i] < Scalar(0)) {
                std::ostringstream os;
                os << "negative entry " << d[i] << " at index " << i;
                findings.push_back({name, os.str()});
            }
        }
        const Scalar sum = d.probs().sum();
        if (std::isfinite(sum) && std::abs(sum - Scalar(1)) > kSumWindow) {
            std::ostringstream os;
            os << "mass sums to " << sum << " (expected 1 within " << kSumWindow
               << ")";
            findings.push_back({name, os.str()});
        }
    };
    check_dist("p_q", t.p_q);
    check_dist("p_c", t.p_c);
    check_dist("p_a", t.p_a);

    if (t.p_q.size() != t.p_c.size() || t.p_c.size() != t.p_a.size()) {
        std::ostringstream os;
        os << "dimension mismatch: p_q has " << t.p_q.size() << ", p_c has "
           << t.p_c.size() << ", p_a has " << t.p_a.size() << " topics";
        findings.push_back({"n_topics", os.str()});
    }
    return findings;
}

// ---------------------------------------------------------------------------
// Information primitives

Scalar shannon_entropy(const TopicDistribution& p, Units units) {
    return shannon_entropy(p.probs(), units);
}

Scalar nats_to(Scalar x, Units units) {
    return units == Units::nats ? x : x / std::numbers::ln2_v<Scalar>;
}

Scalar kl_conditional(const TransitionMatrix& a, const TransitionMatrix& q,
                      const TopicDistribution& p_c) {
    const Index n = p_c.size();
    if (a.size() != n || q.size() != n) {
        throw DimensionError("kl_conditional: A, Q and p_c must share N");
    }
    Scalar d = 0;
    for (Index i = 0; i < n; ++i) {
        const Scalar w = p_c[i];
        if (w == Scalar(0)) continue;
        for (Index j = 0; j < n; ++j) {
            const Scalar aij = a(i, j);
            if (aij == Scalar(0)) continue;
            const Scalar qij = q(i, j);
            if (qij == Scalar(0)) {
                std::ostringstream os;
                os << "Q is zero at (" << i << "," << j
                   << ") where p_c_i * A_ij > 0";
                throw AbsoluteContinuityViolation(os.str());
            }
            d += w * aij * std::log(aij / qij);
        }
    }
    // Rounding can leave a tiny negative residue on a quantity that is >= 0.
    if (d < Scalar(0) && d > Scalar(-1e-12)) d = 0;
    return d;
}

Scalar kl_divergence(const TopicDistribution& p, const TopicDistribution& q) {
    if (p.size() != q.size()) {
        throw DimensionError("kl_divergence: dimension mismatch");
    }
    Scalar d = 0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p[i] == Scalar(0)) continue;
        if (q[i] == Scalar(0)) {
            throw AbsoluteContinuityViolation("q is zero on the support of p");
        }
        d += p[i] * std::log(p[i] / q[i]);
    }
    if (d < Scalar(0) && d > Scalar(-1e-12)) d = 0;
    return d;
}

TopicDistribution from_cluster_counts(const std::vector<long long>& counts,
                                      Index n_topics) {
    if (static_cast<Index>(counts.size()) != n_topics) {
        throw DimensionError("cluster count vector length does not match N");
    }
    long long total = 0;
    for (long long c : counts) {
        if (c < 0) throw InvalidInput("cluster counts must be non-negative");
        total += c;
    }
    if (total == 0) {
        throw EmptyText("all cluster counts are zero");
    }
    Vec v(n_topics);
    for (Index i = 0; i < n_topics; ++i) {
        v[i] = static_cast<Scalar>(counts[static_cast<size_t>(i)]) /
               static_cast<Scalar>(total);
    }
    return TopicDistribution::from_raw(std::move(v));
}

}  // namespace semfaith
