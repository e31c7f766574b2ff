#include "semfaith/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semfaith/info.hpp"
#include "semfaith/sep.hpp"
#include "semfaith/sf.hpp"

namespace semfaith::synth {

void SynthConfig::validate() const {
    if (n_topics < 1) throw InvalidInput("n_topics must be positive");
    if (n_triplets < 1) throw InvalidInput("n_triplets must be positive");
    if (alpha_q <= 0 || alpha_c <= 0 || alpha_a <= 0) {
        throw InvalidInput("Dirichlet concentrations must be positive");
    }
    if (context_coupling < 0 || context_coupling > 1) {
        throw InvalidInput("context_coupling must lie in [0, 1]");
    }
}

Scalar PortableRng::uniform() {
    // 53-bit mantissa mapping; identical on every conforming mt19937_64.
    return static_cast<Scalar>(eng_() >> 11) * 0x1.0p-53;
}

Scalar PortableRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    Scalar u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const Scalar u2 = uniform();
    const Scalar r = std::sqrt(-2 * std::log(u1));
    const Scalar theta = 2 * Scalar(3.14159265358979323846) * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

Scalar PortableRng::gamma(Scalar shape) {
    if (shape <= 0) throw InvalidInput("gamma shape must be positive");
    if (shape < 1) {
        // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
        const Scalar g = gamma(shape + 1);
        Scalar u = uniform();
        while (u <= 0) u = uniform();
        return g * std::pow(u, Scalar(1) / shape);
    }
    // Marsaglia-Tsang squeeze.
    const Scalar d = shape - Scalar(1) / 3;
    const Scalar c = Scalar(1) / std::sqrt(9 * d);
    for (;;) {
        Scalar x, v;
        do {
            x = normal();
            v = 1 + c * x;
        } while (v <= 0);
        v = v * v * v;
        Scalar u = uniform();
        while (u <= 0) u = uniform();
        const Scalar x2 = x * x;
        if (u < 1 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1 - v + std::log(v))) return d * v;
    }
}

Vec PortableRng::dirichlet(Scalar alpha, Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = gamma(alpha);
    const Scalar s = v.sum();
    if (s <= 0) {
        // Underflow corner for very small concentrations; fall back to a
        // one-hot draw, the distributional limit alpha -> 0.
        v.setZero();
        v[static_cast<Index>(uniform() * static_cast<Scalar>(n)) % n] = 1;
        return v;
    }
    return v / s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the combined words.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

QcaTriplet sample_qca(const SynthConfig& cfg, int index) {
    cfg.validate();
    PortableRng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
    const Index n = cfg.n_topics;

    Vec pq = rng.dirichlet(cfg.alpha_q, n);
    Vec pc = rng.dirichlet(cfg.alpha_c, n);
    Vec d = rng.dirichlet(cfg.alpha_a, n);

    // Answers draw selectively from the context: element-wise power coupling
    // then renormalization.
    Vec pa(n);
    for (Index i = 0; i < n; ++i) {
        pa[i] = std::pow(pc[i], cfg.context_coupling) * d[i];
    }
    const Scalar s = pa.sum();
    if (s > 0) {
        pa /= s;
    } else {
        pa = d;  // degenerate coupling; keep the raw draw
    }

    QcaTriplet t;
    std::ostringstream id;
    id << "synth-" << index;
    t.id = id.str();
    t.p_q = TopicDistribution::from_raw(std::move(pq));
    t.p_c = TopicDistribution::from_raw(std::move(pc));
    t.p_a = TopicDistribution::from_raw(std::move(pa));
    return t;
}

StudyReport run_study(const SynthConfig& cfg, const SolverConfig& solver_cfg) {
    cfg.validate();
    solver_cfg.validate();

    StudyReport report;
    report.records.reserve(static_cast<size_t>(cfg.n_triplets));
    for (int k = 0; k < cfg.n_triplets; ++k) {
        const QcaTriplet t = sample_qca(cfg, k);
        try {
            const SfResult sf = solve_sf(t, solver_cfg);
            const SepResult sep = solve_sep(sf, t, solver_cfg);
            StudyRecord rec;
            rec.index = k;
            rec.id = t.id;
            rec.f_s = sf.f_s;
            rec.sep_total = sep.sep_total;
            rec.s_system = sep.s_system;
            rec.s_medium = sep.s_medium;
            rec.h_q = shannon_entropy(t.p_q, Units::nats);
            rec.h_c = shannon_entropy(t.p_c, Units::nats);
            rec.h_a = shannon_entropy(t.p_a, Units::nats);
            rec.naive_sep = sep.naive_sep;
            rec.first_order_sep = sep.first_order_sep;
            rec.outer_iters = sf.outer_iters;
            rec.residual = sf.constraint_residual;
            report.records.push_back(std::move(rec));
        } catch (const SemfaithError& e) {
            report.failures.push_back({k, e.what()});
        }
    }

    std::vector<Scalar> fs, sep;
    fs.reserve(report.records.size());
    sep.reserve(report.records.size());
    for (const auto& r : report.records) {
        fs.push_back(r.f_s);
        sep.push_back(r.sep_total);
    }
    report.pearson_r = pearson(fs, sep);
    if (auto fit = ols_fit(fs, sep)) {
        report.ols_slope = fit->first;
        report.ols_intercept = fit->second;
    }

    if (!fs.empty()) {
        const auto [lo_it, hi_it] = std::minmax_element(fs.begin(), fs.end());
        const Scalar lo = *lo_it, hi = *hi_it;
        constexpr int kCurvePoints = 200;
        report.naive_curve_points.reserve(kCurvePoints);
        for (int k = 0; k < kCurvePoints; ++k) {
            const Scalar f =
                lo + (hi - lo) * static_cast<Scalar>(k) / (kCurvePoints - 1);
            if (f <= 0) continue;
            report.naive_curve_points.emplace_back(f, Scalar(1) / f - Scalar(1));
        }
    }
    return report;
}

std::optional<Scalar> pearson(const std::vector<Scalar>& xs,
                              const std::vector<Scalar>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    const Scalar n = static_cast<Scalar>(xs.size());
    Scalar mx = 0, my = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    Scalar sxy = 0, sxx = 0, syy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        const Scalar dx = xs[k] - mx, dy = ys[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    Scalar r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, Scalar(-1), Scalar(1));
    return r;
}

std::optional<std::pair<Scalar, Scalar>> ols_fit(const std::vector<Scalar>& xs,
                                                 const std::vector<Scalar>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    const Scalar n = static_cast<Scalar>(xs.size());
    Scalar mx = 0, my = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    Scalar sxy = 0, sxx = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    if (sxx <= 0) return std::nullopt;
    const Scalar slope = sxy / sxx;
    return std::make_pair(slope, my - slope * mx);
}

}  // namespace semfaith::synth
