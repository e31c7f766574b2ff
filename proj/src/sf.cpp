#include "semfaith/sf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "semfaith/info.hpp"

namespace semfaith {

namespace {

// Dual arguments nu_i + xi_j are kept at or above this floor on the support,
// so log arguments never touch the singularity.
constexpr Scalar kDualFloor = 1e-12;

// Root of F(x) = sum_k w_k / (x + off_k) = target on a bracket where F is
// strictly decreasing. Newton steps with bisection safeguard; the bracket
// endpoints already respect the dual-domain floor, so a clamped endpoint is
// returned as-is.
Scalar monotone_root(const std::vector<Scalar>& w, const std::vector<Scalar>& off,
                     Scalar target, Scalar lo, Scalar hi) {
    const auto eval = [&](Scalar x, Scalar& f, Scalar& fp) {
        f = -target;
        fp = 0;
        for (size_t k = 0; k < w.size(); ++k) {
            const Scalar denom = x + off[k];
            const Scalar term = w[k] / denom;
            f += term;
            fp -= term / denom;
        }
    };
    Scalar f, fp;
    eval(lo, f, fp);
    if (f <= 0) return lo;  // root at or below the (floored) bracket
    eval(hi, f, fp);
    if (f >= 0) return hi;

    const Scalar ftol = 1e-15 * std::max(Scalar(1), std::abs(target));
    Scalar x = 0.5 * (lo + hi);
    for (int it = 0; it < 128; ++it) {
        eval(x, f, fp);
        if (std::abs(f) <= ftol) return x;
        if (f > 0) lo = x; else hi = x;
        const Scalar span = hi - lo;
        if (span <= 4e-16 * std::max({Scalar(1), std::abs(lo), std::abs(hi)})) {
            return 0.5 * (lo + hi);
        }
        Scalar xn = x - f / fp;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

Scalar marginal_residual(const Mat& m, const Vec& p_c, const Vec& target) {
    return ((m.transpose() * p_c) - target).cwiseAbs().maxCoeff();
}

}  // namespace

namespace detail {

void marginal_polish(Mat& m, const Vec& weights, const Vec& target) {
    for (int sweep = 0; sweep < 200; ++sweep) {
        const Vec marg = m.transpose() * weights;
        if ((marg - target).cwiseAbs().maxCoeff() <= 0.2 * kFeasibilityTol) {
            return;
        }
        for (Index j = 0; j < m.cols(); ++j) {
            if (marg[j] > 0) {
                m.col(j) *= target[j] / marg[j];
            } else if (target[j] > 0) {
                return;  // column cannot be fixed by scaling
            }
        }
        for (Index i = 0; i < m.rows(); ++i) {
            const Scalar rs = m.row(i).sum();
            if (rs > 0) m.row(i) /= rs;
        }
    }
}

DualAscentResult dual_marginal_ascent(const Mat& a, const Vec& p_c,
                                      const Vec& target,
                                      const SolverConfig& cfg) {
    const Index n = a.rows();
    Vec r = Vec::Ones(n);
    Vec c = Vec::Zero(n);
    std::vector<Scalar> w, off;
    w.reserve(n);
    off.reserve(n);

    int sweeps = 0;
    for (; sweeps < cfg.max_inner_iters; ++sweeps) {
        Scalar change = 0;

        // Row duals: sum_j A_ij / (r_i + c_j) = 1.
        for (Index i = 0; i < n; ++i) {
            w.clear();
            off.clear();
            Scalar mass = 0, cmin = 0, cmax = 0;
            for (Index j = 0; j < n; ++j) {
                const Scalar aij = a(i, j);
                if (aij <= 0) continue;
                if (w.empty()) { cmin = cmax = c[j]; }
                cmin = std::min(cmin, c[j]);
                cmax = std::max(cmax, c[j]);
                w.push_back(aij);
                off.push_back(c[j]);
                mass += aij;
            }
            if (w.empty()) {
                throw DualDomainViolation("transition row without support");
            }
            const Scalar lo = std::max(mass - cmax, kDualFloor - cmin);
            const Scalar hi = std::max(mass - cmin, lo);
            const Scalar next = monotone_root(w, off, Scalar(1), lo, hi);
            change = std::max(change, std::abs(next - r[i]));
            r[i] = next;
        }

        // Column duals: sum_i p_c_i A_ij / (r_i + c_j) = target_j.
        for (Index j = 0; j < n; ++j) {
            w.clear();
            off.clear();
            Scalar mass = 0, rmin = 0, rmax = 0;
            for (Index i = 0; i < n; ++i) {
                const Scalar wij = p_c[i] * a(i, j);
                if (wij <= 0) continue;
                if (w.empty()) { rmin = rmax = r[i]; }
                rmin = std::min(rmin, r[i]);
                rmax = std::max(rmax, r[i]);
                w.push_back(wij);
                off.push_back(r[i]);
                mass += wij;
            }
            if (w.empty()) {
                if (target[j] > 0) {
                    std::ostringstream os;
                    os << "marginal demands mass " << target[j] << " in column "
                       << j << " where the weighted transition carries none";
                    throw DualDomainViolation(os.str());
                }
                continue;  // both sides empty: dual unconstrained, keep value
            }
            if (target[j] <= 0) {
                std::ostringstream os;
                os << "zero target marginal in column " << j
                   << " with positive transition mass";
                throw DualDomainViolation(os.str());
            }
            const Scalar ratio = mass / target[j];
            const Scalar lo = std::max(ratio - rmax, kDualFloor - rmin);
            const Scalar hi = std::max(ratio - rmin, lo);
            const Scalar next = monotone_root(w, off, target[j], lo, hi);
            change = std::max(change, std::abs(next - c[j]));
            c[j] = next;
        }

        if (change < cfg.tol_inner) {
            return {std::move(r), std::move(c), sweeps + 1};
        }
    }
    throw NonConvergence("dual ascent exhausted max_inner_iters sweeps");
}

}  // namespace detail

TransitionMatrix init_q_matrix(const TopicDistribution& p_c,
                               const TopicDistribution& p_q) {
    if (p_c.size() != p_q.size()) {
        throw DimensionError("init_q_matrix: p_c and p_q must share N");
    }
    return TransitionMatrix::rank_one(p_q);
}

AStepResult a_step(const TransitionMatrix& q, const TopicDistribution& p_c,
                   const TopicDistribution& p_a, const SolverConfig& cfg) {
    const Index n = q.size();
    if (p_c.size() != n || p_a.size() != n) {
        throw DimensionError("a_step: dimension mismatch");
    }
    const Mat& qm = q.rows();
    const Vec& pc = p_c.probs();
    const Vec& pa = p_a.probs();

    Vec u = Vec::Ones(n);
    Vec s(n), t(n), u_next(n);
    int sweeps = 0;
    bool converged = false;
    for (; sweeps < cfg.max_inner_iters; ++sweeps) {
        s.noalias() = qm * u;
        for (Index i = 0; i < n; ++i) {
            if (s[i] <= 0 && pc[i] > 0) {
                throw AbsoluteContinuityViolation(
                    "transition row has no mass on the answer support");
            }
        }
        t.setZero();
        for (Index i = 0; i < n; ++i) {
            if (pc[i] == 0) continue;
            t += (pc[i] / s[i]) * qm.row(i).transpose();
        }
        Scalar rel = 0;
        for (Index j = 0; j < n; ++j) {
            if (pa[j] == 0) {
                u_next[j] = 0;
                continue;
            }
            if (t[j] <= 0) {
                std::ostringstream os;
                os << "answer marginal " << pa[j] << " unreachable in column "
                   << j << " (no weighted transition mass)";
                throw AbsoluteContinuityViolation(os.str());
            }
            u_next[j] = pa[j] / t[j];
            rel = std::max(rel, std::abs(u_next[j] - u[j]) /
                                    std::max(u[j], Scalar(1e-300)));
        }
        u = u_next;
        if (rel < cfg.tol_inner) {
            converged = true;
            ++sweeps;
            break;
        }
    }
    if (!converged) {
        throw NonConvergence("a_step fixed point exhausted max_inner_iters");
    }

    s.noalias() = qm * u;
    Mat am(n, n);
    for (Index i = 0; i < n; ++i) {
        am.row(i) = qm.row(i).cwiseProduct(u.transpose()) /
                    std::max(s[i], Scalar(1e-300));
        const Scalar rs = am.row(i).sum();
        if (rs > 0) am.row(i) /= rs;
    }
    // Multiplicative scalings stay in the I-projection family; this drives
    // the marginal residual down when the scaling fixed point alone cannot.
    detail::marginal_polish(am, pc, pa);
    for (Index i = 0; i < n; ++i) {
        if (pc[i] == 0) {
            // Unconstrained by the objective; pinned for determinism.
            am.row(i) = pa.transpose();
        }
    }
    return {TransitionMatrix::from_raw(std::move(am)), std::move(u), sweeps};
}

QStepResult q_step(const TransitionMatrix& a, const TopicDistribution& p_c,
                   const TopicDistribution& p_q, const SolverConfig& cfg) {
    const Index n = a.size();
    if (p_c.size() != n || p_q.size() != n) {
        throw DimensionError("q_step: dimension mismatch");
    }
    const Mat& am = a.rows();
    const Vec& pc = p_c.probs();
    const Vec& pq = p_q.probs();

    auto duals = detail::dual_marginal_ascent(am, pc, pq, cfg);
    const Vec& nu = duals.row_duals;
    const Vec& xi = duals.col_duals;

    Mat qm(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            qm(i, j) = am(i, j) > 0 ? am(i, j) / (nu[i] + xi[j]) : Scalar(0);
        }
        const Scalar rs = qm.row(i).sum();
        if (rs > 0) qm.row(i) /= rs;
    }
    // The dual sums cannot express column amplifications finer than double
    // cancellation allows; the multiplicative polish can.
    detail::marginal_polish(qm, pc, pq);
    for (Index i = 0; i < n; ++i) {
        if (pc[i] == 0) qm.row(i) = pq.transpose();
    }
    return {TransitionMatrix::from_raw(std::move(qm)), duals.row_duals,
            duals.col_duals, duals.sweeps};
}

namespace {

SfResult run_alternation(const QcaTriplet& t, const SolverConfig& cfg,
                         TransitionMatrix q) {
    cfg.validate();
    if (auto findings = validate_triplet(t); !findings.empty()) {
        std::ostringstream os;
        os << "invalid triplet";
        if (!t.id.empty()) os << " '" << t.id << "'";
        os << ":";
        for (const auto& f : findings) os << " [" << f.field << "] " << f.message;
        throw InvalidInput(os.str());
    }

    const TopicDistribution pq = t.p_q.smoothed(cfg.epsilon_smooth);
    const TopicDistribution pc = t.p_c.smoothed(cfg.epsilon_smooth);
    const TopicDistribution pa = t.p_a.smoothed(cfg.epsilon_smooth);

    SfResult res;
    res.objective_trace.reserve(16);
    TransitionMatrix a = q;  // placeholder until the first A-step
    Vec u, nu, xi;

    bool converged = false;
    for (int k = 0; k < cfg.max_outer_iters; ++k) {
        auto astep = a_step(q, pc, pa, cfg);
        auto qstep = q_step(astep.a, pc, pq, cfg);
        a = std::move(astep.a);
        q = std::move(qstep.q);
        u = std::move(astep.u);
        nu = std::move(qstep.nu);
        xi = std::move(qstep.xi);

        const Scalar d = kl_conditional(a, q, pc);
        res.objective_trace.push_back(d);
        if (k >= 1) {
            const Scalar prev = res.objective_trace[k - 1];
            if (std::abs(d - prev) < cfg.tol_outer) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        throw NonConvergence("alternating minimization exhausted max_outer_iters",
                             res.objective_trace);
    }

    res.d_min = res.objective_trace.back();
    res.f_s = Scalar(1) / (Scalar(1) + res.d_min);
    res.outer_iters = static_cast<int>(res.objective_trace.size());
    res.constraint_residual =
        std::max(marginal_residual(a.rows(), pc.probs(), pa.probs()),
                 marginal_residual(q.rows(), pc.probs(), pq.probs()));
    res.a_star = std::move(a);
    res.q_star = std::move(q);
    res.u_star = std::move(u);
    res.nu_star = std::move(nu);
    res.xi_star = std::move(xi);
    return res;
}

}  // namespace

SfResult solve_sf(const QcaTriplet& t, const SolverConfig& cfg) {
    const TopicDistribution pq = t.p_q.smoothed(cfg.epsilon_smooth);
    const TopicDistribution pc = t.p_c.smoothed(cfg.epsilon_smooth);
    return run_alternation(t, cfg, init_q_matrix(pc, pq));
}

SfResult solve_sf_from(const QcaTriplet& t, const SolverConfig& cfg,
                       const TransitionMatrix& q0) {
    if (q0.size() != t.p_c.size()) {
        throw DimensionError("solve_sf_from: initializer dimension mismatch");
    }
    return run_alternation(t, cfg, q0);
}

}  // namespace semfaith
