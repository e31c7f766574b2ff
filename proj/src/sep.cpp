#include "semfaith/sep.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "semfaith/info.hpp"

namespace semfaith {

Scalar system_entropy_change(const TopicDistribution& p_c,
                             const TopicDistribution& p_a, Units units) {
    if (p_c.size() != p_a.size()) {
        throw DimensionError("system_entropy_change: dimension mismatch");
    }
    return shannon_entropy(p_a, units) - shannon_entropy(p_c, units);
}

SepResult solve_sep(const TransitionMatrix& a_star, const TopicDistribution& p_c,
                    const TopicDistribution& p_a, const SolverConfig& cfg) {
    cfg.validate();
    const Index n = a_star.size();
    if (p_c.size() != n || p_a.size() != n) {
        throw DimensionError("solve_sep: dimension mismatch");
    }

    const TopicDistribution pcs = p_c.smoothed(cfg.epsilon_smooth);
    const TopicDistribution pas = p_a.smoothed(cfg.epsilon_smooth);
    const Vec& pc = pcs.probs();
    const Vec& pa = pas.probs();
    const Mat& am = a_star.rows();

    // The bound presumes a_star transports p_c onto p_a.
    const Scalar input_resid = ((am.transpose() * pc) - pa).cwiseAbs().maxCoeff();
    if (input_resid > 1e-6) {
        std::ostringstream os;
        os << "a_star marginal deviates from p_a by " << input_resid
           << "; no consistent reverse matrix exists";
        throw InfeasibleReverse(os.str());
    }

    auto duals = detail::dual_marginal_ascent(am, pc, pa, cfg);
    const Vec& xi = duals.row_duals;
    const Vec& nu = duals.col_duals;

    // A^R rows are answer-side topics; row j redistributes answer mass back
    // over context topics.
    Mat ar(n, n);
    for (Index j = 0; j < n; ++j) {
        if (pa[j] == 0) continue;  // pinned below
        for (Index i = 0; i < n; ++i) {
            ar(j, i) = am(i, j) > 0
                           ? pc[i] * am(i, j) / (pa[j] * (xi[i] + nu[j]))
                           : Scalar(0);
        }
        const Scalar rs = ar.row(j).sum();
        if (rs <= 0) {
            std::ostringstream os;
            os << "reverse row " << j << " carries no mass";
            throw InfeasibleReverse(os.str());
        }
        ar.row(j) /= rs;
    }
    for (Index j = 0; j < n; ++j) {
        if (pa[j] == 0) ar.row(j) = pc.transpose();
    }
    detail::marginal_polish(ar, pa, pc);
    for (Index j = 0; j < n; ++j) {
        if (pa[j] == 0) ar.row(j) = pc.transpose();
    }

    SepResult res;
    // Joint forward measure p_c_i A_ij against joint reverse measure
    // p_a_j A^R_ji; both sum to one, so the divergence is non-negative.
    Scalar sep = 0, dfr = 0;
    for (Index i = 0; i < n; ++i) {
        if (pc[i] == 0) continue;
        for (Index j = 0; j < n; ++j) {
            const Scalar fwd = pc[i] * am(i, j);
            if (fwd == 0) continue;
            const Scalar rev = pa[j] * ar(j, i);
            if (rev <= 0) {
                throw InfeasibleReverse(
                    "reverse joint measure vanishes on the forward support");
            }
            sep += fwd * std::log(fwd / rev);
            dfr += fwd * std::log(am(i, j) / ar(j, i));
        }
    }
    if (sep < 0 && sep > -1e-12) sep = 0;

    res.sep_total = sep;
    res.s_system = shannon_entropy(pas, Units::nats) -
                   shannon_entropy(pcs, Units::nats);
    res.s_medium = res.sep_total - res.s_system;
    res.d_forward_reverse = dfr;
    res.a_reverse = TransitionMatrix::from_raw(std::move(ar));
    res.xi_star = duals.row_duals;
    res.nu_star = duals.col_duals;
    res.naive_sep = std::numeric_limits<Scalar>::quiet_NaN();
    res.first_order_sep = std::numeric_limits<Scalar>::quiet_NaN();
    return res;
}

SepResult solve_sep(const SfResult& sf, const QcaTriplet& t,
                    const SolverConfig& cfg) {
    SepResult res = solve_sep(sf.a_star, t.p_c, t.p_a, cfg);
    res.naive_sep = naive_sep(sf.f_s);
    res.first_order_sep = first_order_sep(sf, t.p_q, t.p_a);
    return res;
}

Scalar naive_sep(Scalar f_s) {
    if (!(f_s > 0)) {
        throw DomainError("naive_sep requires f_s in (0, 1]");
    }
    return Scalar(1) / f_s - Scalar(1);
}

Scalar first_order_sep(const SfResult& sf, const TopicDistribution& p_q,
                       const TopicDistribution& p_a) {
    if (p_q.size() != p_a.size() || sf.xi_star.size() != p_q.size()) {
        throw DimensionError("first_order_sep: dimension mismatch");
    }
    Scalar correction = 0;
    for (Index j = 0; j < p_q.size(); ++j) {
        correction += sf.xi_star[j] * (p_q[j] - p_a[j]);
    }
    return naive_sep(sf.f_s) + correction;
}

}  // namespace semfaith
