#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace semfaith {

using Scalar = double;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

enum class Units { bits, nats };

// ---------------------------------------------------------------------------
// Errors

struct SemfaithError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : SemfaithError {
    using SemfaithError::SemfaithError;
};

struct DimensionError : SemfaithError {
    using SemfaithError::SemfaithError;
};

struct AbsoluteContinuityViolation : SemfaithError {
    using SemfaithError::SemfaithError;
};

// Raised when a cluster-count vector carries no mass at all.
struct EmptyText : SemfaithError {
    using SemfaithError::SemfaithError;
};

struct NonConvergence : SemfaithError {
    explicit NonConvergence(const std::string& what,
                            std::vector<Scalar> trace = {})
        : SemfaithError(what), partial_trace(std::move(trace)) {}
    std::vector<Scalar> partial_trace;
};

struct DualDomainViolation : SemfaithError {
    using SemfaithError::SemfaithError;
};

struct InfeasibleReverse : SemfaithError {
    using SemfaithError::SemfaithError;
};

struct DomainError : SemfaithError {
    using SemfaithError::SemfaithError;
};

// ---------------------------------------------------------------------------
// Domain types

/// Probability vector over N shared topics.
///
/// The checked constructor renormalizes inputs whose sum is within 1e-6 of
/// one and rejects anything else; `from_raw` skips validation so that I/O and
/// tests can carry malformed data to `validate_triplet`.
class TopicDistribution {
  public:
    TopicDistribution() = default;  // empty; fill via ctor or from_raw
    explicit TopicDistribution(Vec probs);

    static TopicDistribution from_raw(Vec probs);
    static TopicDistribution uniform(Index n);
    static TopicDistribution delta(Index n, Index i);

    const Vec& probs() const { return probs_; }
    Index size() const { return probs_.size(); }
    Scalar operator[](Index i) const { return probs_[i]; }

    /// Floors every entry at eps and renormalizes. eps == 0 is the identity.
    TopicDistribution smoothed(Scalar eps) const;

    bool full_support() const { return (probs_.array() > Scalar(0)).all(); }

  private:
    Vec probs_;
};

/// Row-stochastic N x N matrix; rows are source topics, columns destinations.
class TransitionMatrix {
  public:
    TransitionMatrix() = default;  // empty; fill via ctor or from_raw
    explicit TransitionMatrix(Mat rows);

    static TransitionMatrix from_raw(Mat rows);
    /// All rows equal to `row`; the canonical feasible point for a marginal
    /// constraint p_c^T M = row.
    static TransitionMatrix rank_one(const TopicDistribution& row);
    static TransitionMatrix identity(Index n);

    const Mat& rows() const { return rows_; }
    Index size() const { return rows_.rows(); }
    Scalar operator()(Index i, Index j) const { return rows_(i, j); }

  private:
    Mat rows_;
};

/// One scoring unit: question/context/answer topic distributions plus identity.
struct QcaTriplet {
    std::string id;
    TopicDistribution p_q;
    TopicDistribution p_c;
    TopicDistribution p_a;
    std::map<std::string, std::string> metadata;
};

struct SolverConfig {
    Scalar tol_outer = 1e-9;        // objective-change stop, nats
    Scalar tol_inner = 1e-12;       // fixed-point / dual-ascent stop
    int max_outer_iters = 500;
    int max_inner_iters = 10000;
    Scalar epsilon_smooth = 1e-12;  // probability floor applied before solving
    Units report_units = Units::bits;

    void validate() const;
};

/// Marginal-feasibility tolerance shared by solver postconditions and tests.
inline constexpr Scalar kFeasibilityTol = 1e-7;

struct Finding {
    std::string field;
    std::string message;
};

std::vector<Finding> validate_triplet(const QcaTriplet& t);

}  // namespace semfaith
