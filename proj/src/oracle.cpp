#include "semfaith/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

namespace semfaith::oracle {

namespace {

constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
constexpr Scalar kEntryFloor = 1e-12;  // gradient clamp, not a constraint
constexpr std::uint64_t kStartSeed = 0x5EEDC0FFEEULL;
constexpr int kStarts = 5;

// Euclidean projection of row i of m onto the probability simplex.
void project_row_simplex(Mat& m, Index i) {
    const Index n = m.cols();
    std::vector<Scalar> u(static_cast<size_t>(n));
    for (Index j = 0; j < n; ++j) u[static_cast<size_t>(j)] = m(i, j);
    std::sort(u.begin(), u.end(), std::greater<Scalar>());
    Scalar css = 0, theta = 0;
    for (Index k = 0; k < n; ++k) {
        css += u[static_cast<size_t>(k)];
        const Scalar t = (css - 1.0) / static_cast<Scalar>(k + 1);
        if (u[static_cast<size_t>(k)] > t) theta = t;
    }
    for (Index j = 0; j < n; ++j) m(i, j) = std::max(m(i, j) - theta, Scalar(0));
}

// Euclidean projection onto {rows on the simplex} intersected with
// {w^T X = target}, by Dykstra's scheme: the simplex product needs a
// correction term, the affine marginal set does not. Ends on an affine
// pass, so the marginal is near-exact and rows carry the residual.
Scalar project_feasible(Mat& x, const Vec& w, const Vec& target, Scalar tol) {
    const Scalar wsq = w.squaredNorm();
    Mat corr = Mat::Zero(x.rows(), x.cols());
    Scalar resid = 0;
    for (int sweep = 0; sweep < 2000; ++sweep) {
        Mat y = x + corr;
        for (Index i = 0; i < y.rows(); ++i) project_row_simplex(y, i);
        corr = x + corr - y;
        Vec gap = target - y.transpose() * w;
        x = y + w * gap.transpose() / wsq;
        const Scalar row_resid =
            (x.rowwise().sum().array() - 1).abs().maxCoeff();
        const Scalar neg = std::max(Scalar(0), -x.minCoeff());
        resid = std::max(row_resid, neg);
        if (resid <= tol) break;
    }
    // Final clean-up: rows exactly stochastic, marginal within tol.
    for (Index i = 0; i < x.rows(); ++i) project_row_simplex(x, i);
    const Scalar marg = (target - x.transpose() * w).cwiseAbs().maxCoeff();
    return std::max(marg, resid);
}

// Elementwise magnitude cap. Preserves component signs, so the capped
// direction still descends.
void clip_gradient(Mat& g, Scalar cap) {
    for (Index i = 0; i < g.rows(); ++i) {
        for (Index j = 0; j < g.cols(); ++j) {
            g(i, j) = std::clamp(g(i, j), -cap, cap);
        }
    }
}

Scalar uniform01(std::mt19937_64& eng) {
    return static_cast<Scalar>(eng() >> 11) * 0x1.0p-53;
}

Mat random_positive(Index n, std::mt19937_64& eng) {
    Mat m(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            m(i, j) = -std::log(1.0 - uniform01(eng));
        }
    }
    return m;
}

// Local guarded objective: conditional KL with 0 log 0 := 0, +inf where A
// keeps mass that Q cannot dominate. Kept independent of the solver path.
Scalar guarded_kl(const Mat& a, const Mat& q, const Vec& pc) {
    Scalar d = 0;
    for (Index i = 0; i < a.rows(); ++i) {
        if (pc[i] <= 0) continue;
        for (Index j = 0; j < a.cols(); ++j) {
            const Scalar aij = a(i, j);
            if (aij <= 0) continue;
            const Scalar qij = q(i, j);
            if (qij <= 0) return kInf;
            d += pc[i] * aij * std::log(aij / qij);
        }
    }
    return d;
}

}  // namespace

void OracleConfig::validate() const {
    if (grid_resolution < 2) throw InvalidInput("grid_resolution must be >= 2");
    if (pgd_step <= 0) throw InvalidInput("pgd_step must be positive");
    if (pgd_iters < 1) throw InvalidInput("pgd_iters must be positive");
    if (projection_tol <= 0) throw InvalidInput("projection_tol must be positive");
}

// ---------------------------------------------------------------------------
// N=2 exhaustive grid

namespace {

struct Interval {
    Scalar lo;
    Scalar hi;
};

// Feasible range of M_11 given row-stochasticity and p_c^T M = m.
Interval free_param_range(const Vec& pc, const Vec& m) {
    Interval iv;
    iv.lo = std::max(Scalar(0), (m[0] - pc[1]) / pc[0]);
    iv.hi = std::min(Scalar(1), m[0] / pc[0]);
    if (iv.lo > iv.hi) iv.hi = iv.lo;  // float guard; feasibility is assured
    return iv;
}

struct GridBest {
    Scalar value = kInf;
    Scalar x = 0;
    Scalar y = 0;
};

GridBest scan_grid(const Vec& pc, const Vec& pa, const Vec& pq, Interval ia,
                   Interval iq, int res) {
    const auto param_to_rows = [&](Scalar x, const Vec& m, Scalar out[4]) {
        const Scalar r2 = (m[0] - pc[0] * x) / pc[1];
        out[0] = x;
        out[1] = 1 - x;
        out[2] = r2;
        out[3] = 1 - r2;
    };
    const int na = ia.hi > ia.lo ? res : 1;
    const int nq = iq.hi > iq.lo ? res : 1;
    std::vector<std::array<Scalar, 4>> arows(static_cast<size_t>(na));
    std::vector<std::array<Scalar, 4>> qrows(static_cast<size_t>(nq));
    std::vector<Scalar> axs(static_cast<size_t>(na)), qys(static_cast<size_t>(nq));
    for (int k = 0; k < na; ++k) {
        const Scalar x =
            na == 1 ? ia.lo : ia.lo + (ia.hi - ia.lo) * k / Scalar(na - 1);
        axs[static_cast<size_t>(k)] = x;
        param_to_rows(x, pa, arows[static_cast<size_t>(k)].data());
    }
    for (int k = 0; k < nq; ++k) {
        const Scalar y =
            nq == 1 ? iq.lo : iq.lo + (iq.hi - iq.lo) * k / Scalar(nq - 1);
        qys[static_cast<size_t>(k)] = y;
        param_to_rows(y, pq, qrows[static_cast<size_t>(k)].data());
    }

    GridBest best;
    for (int ka = 0; ka < na; ++ka) {
        const auto& ar = arows[static_cast<size_t>(ka)];
        for (int kq = 0; kq < nq; ++kq) {
            const auto& qr = qrows[static_cast<size_t>(kq)];
            Scalar d = 0;
            bool ok = true;
            for (int e = 0; e < 4 && ok; ++e) {
                const Scalar av = ar[static_cast<size_t>(e)];
                if (av <= 0) continue;
                const Scalar qv = qr[static_cast<size_t>(e)];
                if (qv <= 0) {
                    ok = false;
                    break;
                }
                d += pc[e / 2] * av * std::log(av / qv);
            }
            if (ok && d < best.value) {
                best.value = d;
                best.x = axs[static_cast<size_t>(ka)];
                best.y = qys[static_cast<size_t>(kq)];
            }
        }
    }
    return best;
}

}  // namespace

Scalar grid_dmin_n2(const QcaTriplet& t, const OracleConfig& cfg) {
    cfg.validate();
    if (t.p_c.size() != 2 || t.p_q.size() != 2 || t.p_a.size() != 2) {
        throw DimensionError("grid_dmin_n2 handles N=2 only");
    }
    if (!t.p_c.full_support()) {
        throw InvalidInput("grid_dmin_n2 requires full-support p_c");
    }
    const Vec& pc = t.p_c.probs();
    const Vec& pa = t.p_a.probs();
    const Vec& pq = t.p_q.probs();

    const Interval ia = free_param_range(pc, pa);
    const Interval iq = free_param_range(pc, pq);

    GridBest coarse = scan_grid(pc, pa, pq, ia, iq, cfg.grid_resolution);
    // One local refinement around the best cell.
    const Scalar ha = (ia.hi - ia.lo) / Scalar(cfg.grid_resolution - 1);
    const Scalar hq = (iq.hi - iq.lo) / Scalar(cfg.grid_resolution - 1);
    Interval ia2{std::max(ia.lo, coarse.x - 2 * ha),
                 std::min(ia.hi, coarse.x + 2 * ha)};
    Interval iq2{std::max(iq.lo, coarse.y - 2 * hq),
                 std::min(iq.hi, coarse.y + 2 * hq)};
    GridBest fine = scan_grid(pc, pa, pq, ia2, iq2, cfg.grid_resolution);
    return std::min(coarse.value, fine.value);
}

// ---------------------------------------------------------------------------
// Projected gradient descent, joint (A, Q)

namespace {

// The projected-gradient oracles certify objectives only down to the
// feasibility tolerance; entries below this make the objective unboundedly
// sensitive to residual marginal violations.
constexpr Scalar kOracleMarginalFloor = 1e-6;

void require_certifiable(const Vec& v, const char* name) {
    if (v.minCoeff() < kOracleMarginalFloor) {
        std::ostringstream os;
        os << name << " has entries below " << kOracleMarginalFloor
           << "; the projected-gradient oracle cannot certify such instances";
        throw DomainError(os.str());
    }
}

}  // namespace

Scalar pgd_dmin(const QcaTriplet& t, const OracleConfig& cfg) {
    cfg.validate();
    const Index n = t.p_c.size();
    if (n < 2 || n > 5 || t.p_q.size() != n || t.p_a.size() != n) {
        throw DimensionError("pgd_dmin handles 2 <= N <= 5");
    }
    require_certifiable(t.p_q.probs(), "p_q");
    require_certifiable(t.p_a.probs(), "p_a");
    const Vec& pc = t.p_c.probs();
    const Vec& pa = t.p_a.probs();
    const Vec& pq = t.p_q.probs();

    Scalar best = kInf;
    for (int start = 0; start < kStarts; ++start) {
        std::mt19937_64 eng(kStartSeed + static_cast<std::uint64_t>(start));
        Mat a = random_positive(n, eng);
        Mat q = random_positive(n, eng);
        const Scalar feas_gate = 1e3 * cfg.projection_tol;
        Scalar fa = project_feasible(a, pc, pa, cfg.projection_tol);
        Scalar fq = project_feasible(q, pc, pq, cfg.projection_tol);
        // Mixing with the rank-one feasible point keeps the start interior;
        // projected corners can have mismatched supports and an infinite
        // objective that backtracking cannot escape.
        a = 0.5 * a + 0.5 * Mat(pa.transpose().replicate(n, 1));
        q = 0.5 * q + 0.5 * Mat(pq.transpose().replicate(n, 1));

        Scalar cur = (fa > feas_gate || fq > feas_gate) ? kInf
                                                        : guarded_kl(a, q, pc);
        const auto gradients = [&](const Mat& am, const Mat& qm, Mat& ga,
                                   Mat& gq) {
            for (Index i = 0; i < n; ++i) {
                for (Index j = 0; j < n; ++j) {
                    const Scalar av = std::max(am(i, j), kEntryFloor);
                    const Scalar qv = std::max(qm(i, j), kEntryFloor);
                    ga(i, j) = pc[i] * (std::log(av / qv) + 1);
                    gq(i, j) = -pc[i] * am(i, j) / qv;
                }
            }
            clip_gradient(ga, Scalar(1e4));
            clip_gradient(gq, Scalar(1e4));
        };

        // Phase 1: backtracking line search from an adaptive base step.
        Scalar eta = cfg.pgd_step;
        int stall = 0;
        Mat ga(n, n), gq(n, n);
        for (int it = 0; it < cfg.pgd_iters; ++it) {
            gradients(a, q, ga, gq);
            eta = std::min(eta * 2, Scalar(1e3));
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                Mat a2 = a - eta * ga;
                Mat q2 = q - eta * gq;
                fa = project_feasible(a2, pc, pa, cfg.projection_tol);
                fq = project_feasible(q2, pc, pq, cfg.projection_tol);
                const Scalar v = (fa > feas_gate || fq > feas_gate)
                                     ? kInf
                                     : guarded_kl(a2, q2, pc);
                if (v < cur - 1e-16) {
                    a = std::move(a2);
                    q = std::move(q2);
                    cur = v;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!accepted) {
                if (++stall > 3) break;
            } else {
                stall = 0;
            }
        }

        // Phase 2: diminishing steps from the incumbent; keeps the best
        // feasible value seen. Robust where the line search stalls.
        for (int it = 1; it <= cfg.pgd_iters / 2; ++it) {
            gradients(a, q, ga, gq);
            const Scalar step =
                cfg.pgd_step / (10.0 * std::sqrt(static_cast<Scalar>(it)));
            a -= step * ga;
            q -= step * gq;
            fa = project_feasible(a, pc, pa, cfg.projection_tol);
            fq = project_feasible(q, pc, pq, cfg.projection_tol);
            if (fa <= feas_gate && fq <= feas_gate) {
                cur = std::min(cur, guarded_kl(a, q, pc));
            }
        }
        best = std::min(best, cur);
    }
    if (!std::isfinite(best)) {
        throw NonConvergence("pgd_dmin found no finite feasible objective");
    }
    return best;
}

// ---------------------------------------------------------------------------
// Projected gradient descent over reverse matrices

Scalar pgd_sep(const TransitionMatrix& a_star, const TopicDistribution& p_c,
               const TopicDistribution& p_a, const OracleConfig& cfg) {
    cfg.validate();
    const Index n = a_star.size();
    if (n < 2 || n > 5 || p_c.size() != n || p_a.size() != n) {
        throw DimensionError("pgd_sep handles 2 <= N <= 5");
    }
    require_certifiable(p_c.probs(), "p_c");
    require_certifiable(p_a.probs(), "p_a");
    const Vec pc = p_c.probs();
    const Vec pa = p_a.probs();
    const Mat& am = a_star.rows();

    const auto objective = [&](const Mat& r) -> Scalar {
        Scalar s = 0;
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                const Scalar fwd = pc[i] * am(i, j);
                if (fwd <= 0) continue;
                const Scalar rev = pa[j] * r(j, i);
                if (rev <= 0) return kInf;
                s += fwd * std::log(fwd / rev);
            }
        }
        return s;
    };

    Scalar best = kInf;
    for (int start = 0; start < kStarts; ++start) {
        std::mt19937_64 eng(kStartSeed ^ (0x9E3779B97F4A7C15ULL +
                                          static_cast<std::uint64_t>(start)));
        Mat r = random_positive(n, eng);
        const Scalar feas_gate = 1e3 * cfg.projection_tol;
        Scalar fr = project_feasible(r, pa, pc, cfg.projection_tol);
        r = 0.5 * r + 0.5 * Mat(pc.transpose().replicate(n, 1));

        Scalar cur = fr > feas_gate ? kInf : objective(r);
        const auto gradient = [&](const Mat& rm, Mat& g) {
            for (Index j = 0; j < n; ++j) {
                for (Index i = 0; i < n; ++i) {
                    const Scalar rv = std::max(rm(j, i), kEntryFloor);
                    g(j, i) = -pc[i] * am(i, j) / rv;
                }
            }
            clip_gradient(g, Scalar(1e4));
        };

        Scalar eta = cfg.pgd_step;
        int stall = 0;
        Mat g(n, n);
        for (int it = 0; it < cfg.pgd_iters; ++it) {
            gradient(r, g);
            eta = std::min(eta * 2, Scalar(1e3));
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                Mat r2 = r - eta * g;
                fr = project_feasible(r2, pa, pc, cfg.projection_tol);
                const Scalar v = fr > feas_gate ? kInf : objective(r2);
                if (v < cur - 1e-16) {
                    r = std::move(r2);
                    cur = v;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!accepted) {
                if (++stall > 3) break;
            } else {
                stall = 0;
            }
        }

        for (int it = 1; it <= cfg.pgd_iters / 2; ++it) {
            gradient(r, g);
            const Scalar step =
                cfg.pgd_step / (10.0 * std::sqrt(static_cast<Scalar>(it)));
            r -= step * g;
            fr = project_feasible(r, pa, pc, cfg.projection_tol);
            if (fr <= feas_gate) {
                cur = std::min(cur, objective(r));
            }
        }
        best = std::min(best, cur);
    }
    if (!std::isfinite(best)) {
        throw NonConvergence("pgd_sep found no finite feasible objective");
    }
    return best;
}

}  // namespace semfaith::oracle
