#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semfaith/info.hpp"
#include "semfaith/oracle.hpp"
#include "semfaith/sep.hpp"
#include "semfaith/sf.hpp"
#include "semfaith/synthetic.hpp"
#include "testutil.hpp"

using namespace semfaith;
using testutil::dist;
using testutil::random_triplet;

namespace {
const SolverConfig kCfg;
}

TEST_CASE("system_entropy_change pinned examples") {
    const TopicDistribution u2 = TopicDistribution::uniform(2);
    const TopicDistribution d2 = dist({1, 0});
    CHECK(system_entropy_change(u2, u2, Units::bits) == 0.0);
    CHECK(system_entropy_change(u2, d2, Units::bits) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(system_entropy_change(d2, u2, Units::bits) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_sep N=1 is exactly zero") {
    const TopicDistribution one = dist({1.0});
    const SepResult r =
        solve_sep(TransitionMatrix::identity(1), one, one, kCfg);
    CHECK(r.sep_total == 0.0);
    CHECK(r.a_reverse(0, 0) == 1.0);
    CHECK(r.s_system == 0.0);
}

TEST_CASE("solve_sep identity chain is reversible") {
    const TopicDistribution pc = dist({0.3, 0.3, 0.4});
    const SepResult r =
        solve_sep(TransitionMatrix::identity(3), pc, pc, kCfg);
    CHECK(r.sep_total <= 1e-8);
    CHECK(r.sep_total >= -1e-9);
    // identity reverse is feasible and optimal
    for (Index i = 0; i < 3; ++i) {
        CHECK(r.a_reverse(i, i) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("solve_sep matches the projected-gradient oracle") {
    oracle::OracleConfig ocfg;
    for (std::uint64_t seed = 200; seed < 206; ++seed) {
        const QcaTriplet t = random_triplet(seed, 3);
        const SfResult sf = solve_sf(t, kCfg);
        const SepResult sep = solve_sep(sf.a_star, t.p_c, t.p_a, kCfg);
        const TopicDistribution pcs = t.p_c.smoothed(kCfg.epsilon_smooth);
        const TopicDistribution pas = t.p_a.smoothed(kCfg.epsilon_smooth);
        const Scalar ref = oracle::pgd_sep(sf.a_star, pcs, pas, ocfg);
        CHECK(std::abs(sep.sep_total - ref) <= 1e-3);
    }
}

TEST_CASE("solve_sep invariants on random instances") {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        const Index n = 2 + static_cast<Index>(seed % 4);
        const QcaTriplet t = random_triplet(seed, n);
        const SfResult sf = solve_sf(t, kCfg);
        const SepResult r = solve_sep(sf, t, kCfg);

        CHECK(r.sep_total >= -1e-9);
        CHECK(std::abs(r.sep_total - r.s_system - r.s_medium) <= 1e-12);

        // Reverse feasibility: rows stochastic, marginal maps p_a back to p_c.
        const TopicDistribution pcs = t.p_c.smoothed(kCfg.epsilon_smooth);
        const TopicDistribution pas = t.p_a.smoothed(kCfg.epsilon_smooth);
        const Mat& ar = r.a_reverse.rows();
        CHECK((ar.rowwise().sum().array() - 1).abs().maxCoeff() <= 1e-9);
        CHECK(((ar.transpose() * pas.probs()) - pcs.probs())
                  .cwiseAbs()
                  .maxCoeff() <= kFeasibilityTol);

        // d_forward_reverse evaluates the same decomposition directly.
        CHECK(r.d_forward_reverse ==
              doctest::Approx(r.s_medium).epsilon(1e-6));
    }
}

TEST_CASE("solve_sep rejects inconsistent forward matrices") {
    // a_star that does not transport p_c onto p_a
    const TopicDistribution pc = dist({0.5, 0.5});
    const TopicDistribution pa = dist({0.9, 0.1});
    const TransitionMatrix a = TransitionMatrix::rank_one(dist({0.5, 0.5}));
    CHECK_THROWS_AS(solve_sep(a, pc, pa, kCfg), InfeasibleReverse);
}

TEST_CASE("naive_sep examples and domain") {
    CHECK(naive_sep(1.0) == 0.0);
    CHECK(naive_sep(0.5) == 1.0);
    CHECK(naive_sep(0.25) == 3.0);
    CHECK_THROWS_AS(naive_sep(0.0), DomainError);
    CHECK_THROWS_AS(naive_sep(-0.5), DomainError);
}

TEST_CASE("first_order_sep reduces to naive when p_q equals p_a") {
    for (std::uint64_t seed = 400; seed < 404; ++seed) {
        synth::PortableRng rng(seed);
        QcaTriplet t;
        t.id = "fo";
        t.p_c = testutil::floored_dirichlet(rng, 4, 1.5);
        t.p_q = testutil::floored_dirichlet(rng, 4, 1.0);
        t.p_a = t.p_q;
        const SfResult sf = solve_sf(t, kCfg);
        CHECK(first_order_sep(sf, t.p_q, t.p_a) == naive_sep(sf.f_s));
    }
}

TEST_CASE("first_order_sep N=1 is zero") {
    QcaTriplet t;
    t.id = "one";
    t.p_q = dist({1.0});
    t.p_c = dist({1.0});
    t.p_a = dist({1.0});
    const SfResult sf = solve_sf(t, kCfg);
    CHECK(first_order_sep(sf, t.p_q, t.p_a) == 0.0);
}

TEST_CASE("first_order_sep tracks sep_total for small perturbations") {
    // p_a = p_q + O(delta): both the bound and its first-order estimate
    // vanish quadratically; compare with a relative/absolute hybrid.
    synth::PortableRng rng(55);
    for (int trial = 0; trial < 4; ++trial) {
        const Index n = 3;
        const TopicDistribution pq = testutil::floored_dirichlet(rng, n, 1.2);
        const TopicDistribution pc = testutil::floored_dirichlet(rng, n, 1.5);
        Vec pa = pq.probs();
        const Scalar delta = 1e-4;
        pa[0] += delta;
        pa[1] -= delta;
        QcaTriplet t;
        t.id = "pert";
        t.p_q = pq;
        t.p_c = pc;
        t.p_a = TopicDistribution(pa);

        const SfResult sf = solve_sf(t, kCfg);
        const SepResult sep = solve_sep(sf, t, kCfg);
        const Scalar fo = sep.first_order_sep;
        const Scalar tol = std::max(0.1 * std::abs(sep.sep_total), 1e-6);
        CHECK(std::abs(fo - sep.sep_total) <= tol);
    }
}

TEST_CASE("a synthetic-style instance exhibits negative dissipated entropy") {
    // Context more concentrated than the answer: H[p_a] > H[p_c], and the
    // bound sits at zero, so s_medium = -s_system < 0.
    QcaTriplet t;
    t.id = "negheat";
    t.p_c = dist({0.9, 0.05, 0.05});
    t.p_q = dist({0.3, 0.4, 0.3});
    t.p_a = dist({0.4, 0.3, 0.3});
    const SfResult sf = solve_sf(t, kCfg);
    const SepResult sep = solve_sep(sf, t, kCfg);
    CHECK(sep.s_system > 0);
    CHECK(sep.s_medium < 0);
}
