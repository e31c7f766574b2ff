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
using namespace semfaith::oracle;
using testutil::dist;
using testutil::random_triplet;

namespace {
const OracleConfig kOcfg;
const SolverConfig kScfg;
}  // namespace

TEST_CASE("grid_dmin_n2 near zero for identical marginals") {
    QcaTriplet t;
    t.id = "same";
    t.p_c = dist({0.5, 0.5});
    t.p_q = dist({0.35, 0.65});
    t.p_a = t.p_q;
    CHECK(grid_dmin_n2(t, kOcfg) <= 1e-6);
}

TEST_CASE("grid_dmin_n2 reference instance and refinement convergence") {
    QcaTriplet t;
    t.id = "ref";
    t.p_c = dist({0.5, 0.5});
    t.p_q = dist({0.6, 0.4});
    t.p_a = dist({0.7, 0.3});

    OracleConfig coarse = kOcfg;
    coarse.grid_resolution = 1000;
    OracleConfig fine = kOcfg;
    fine.grid_resolution = 2000;

    const Scalar g1 = grid_dmin_n2(t, coarse);
    const Scalar g2 = grid_dmin_n2(t, fine);
    CHECK(std::abs(g1 - g2) <= 1e-3);

    // Independent closed-form route: the joint minimum equals KL(p_a || p_q).
    CHECK(g1 == doctest::Approx(kl_divergence(t.p_a, t.p_q)).epsilon(1e-6));
}

TEST_CASE("grid_dmin_n2 handles a collapsed feasible set") {
    QcaTriplet t;
    t.id = "degenerate";
    t.p_c = dist({0.5, 0.5});
    t.p_q = dist({0.6, 0.4});
    t.p_a = dist({1.0, 0.0});
    // A is pinned to [[1,0],[1,0]]; the minimum is over Q alone.
    const Scalar g = grid_dmin_n2(t, kOcfg);
    CHECK(std::isfinite(g));
    CHECK(g == doctest::Approx(kl_divergence(t.p_a, t.p_q)).epsilon(1e-4));
}

TEST_CASE("grid_dmin_n2 input contract") {
    QcaTriplet t3 = random_triplet(1, 3);
    CHECK_THROWS_AS(grid_dmin_n2(t3, kOcfg), DimensionError);

    QcaTriplet t;
    t.id = "nosupport";
    t.p_c = testutil::dist_raw({1.0, 0.0});
    t.p_q = dist({0.6, 0.4});
    t.p_a = dist({0.7, 0.3});
    CHECK_THROWS_AS(grid_dmin_n2(t, kOcfg), InvalidInput);
}

TEST_CASE("pgd_dmin agrees with grid_dmin_n2 on N=2") {
    for (std::uint64_t seed = 900; seed < 906; ++seed) {
        const QcaTriplet t = random_triplet(seed, 2);
        const Scalar g = grid_dmin_n2(t, kOcfg);
        const Scalar p = pgd_dmin(t, kOcfg);
        CHECK(std::abs(g - p) <= 1e-4);
    }
}

TEST_CASE("pgd_dmin reaches zero when marginals coincide") {
    synth::PortableRng rng(31);
    QcaTriplet t;
    t.id = "zero4";
    t.p_c = testutil::floored_dirichlet(rng, 4, 1.5);
    t.p_q = testutil::floored_dirichlet(rng, 4, 1.0);
    t.p_a = t.p_q;
    CHECK(pgd_dmin(t, kOcfg) <= 1e-6);
}

TEST_CASE("pgd_dmin matches the alternating solver on N=3..5") {
    for (Index n = 3; n <= 5; ++n) {
        for (std::uint64_t s = 0; s < 2; ++s) {
            const QcaTriplet t = random_triplet(1000 + 10 * n + s, n);
            const Scalar p = pgd_dmin(t, kOcfg);
            const SfResult r = solve_sf(t, kScfg);
            CHECK(std::abs(p - r.d_min) <= 1e-3);
            // PGD bounds the minimum from above.
            CHECK(p >= r.d_min - 1e-6);
        }
    }
}

TEST_CASE("pgd_dmin dimension and certifiability contracts") {
    CHECK_THROWS_AS(pgd_dmin(random_triplet(2, 6), kOcfg), DimensionError);

    QcaTriplet t;
    t.id = "tiny-mass";
    t.p_c = dist({0.5, 0.5});
    t.p_q = testutil::dist_raw({1.0 - 1e-9, 1e-9});
    t.p_a = dist({0.7, 0.3});
    CHECK_THROWS_AS(pgd_dmin(t, kOcfg), DomainError);
}

TEST_CASE("pgd_sep zero for the reversible chain") {
    const TopicDistribution pc = dist({0.25, 0.35, 0.4});
    const Scalar v = pgd_sep(TransitionMatrix::identity(3), pc, pc, kOcfg);
    CHECK(v <= 1e-6);
    CHECK(v >= -1e-9);
}

TEST_CASE("pgd_sep N=2 reference against the dual solver") {
    for (std::uint64_t seed = 950; seed < 954; ++seed) {
        const QcaTriplet t = random_triplet(seed, 2);
        const SfResult sf = solve_sf(t, kScfg);
        const SepResult sep = solve_sep(sf.a_star, t.p_c, t.p_a, kScfg);
        const TopicDistribution pcs = t.p_c.smoothed(kScfg.epsilon_smooth);
        const TopicDistribution pas = t.p_a.smoothed(kScfg.epsilon_smooth);
        const Scalar v = pgd_sep(sf.a_star, pcs, pas, kOcfg);
        CHECK(std::abs(v - sep.sep_total) <= 1e-3);
    }
}

TEST_CASE("pgd_sep step halving never raises the minimum materially") {
    const QcaTriplet t = random_triplet(77, 3);
    const SfResult sf = solve_sf(t, kScfg);
    const TopicDistribution pcs = t.p_c.smoothed(kScfg.epsilon_smooth);
    const TopicDistribution pas = t.p_a.smoothed(kScfg.epsilon_smooth);
    OracleConfig half = kOcfg;
    half.pgd_step = kOcfg.pgd_step / 2;
    const Scalar v1 = pgd_sep(sf.a_star, pcs, pas, kOcfg);
    const Scalar v2 = pgd_sep(sf.a_star, pcs, pas, half);
    CHECK(v2 <= v1 + kOcfg.projection_tol);
}

TEST_CASE("oracle values never undercut the convex solvers beyond tolerance") {
    for (std::uint64_t seed = 860; seed < 864; ++seed) {
        const QcaTriplet t = random_triplet(seed, 2);
        const SfResult r = solve_sf(t, kScfg);
        const Scalar g = grid_dmin_n2(t, kOcfg);
        // Oracles bound from above: they may exceed the true minimum
        // slightly, never undercut it beyond numerical agreement.
        CHECK(g >= r.d_min - 1e-6);
    }
}

TEST_CASE("OracleConfig validation") {
    OracleConfig bad = kOcfg;
    bad.grid_resolution = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = kOcfg;
    bad.pgd_step = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}
