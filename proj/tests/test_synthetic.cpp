#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semfaith/info.hpp"
#include "semfaith/io.hpp"
#include "semfaith/synthetic.hpp"
#include "semfaith/types.hpp"

using namespace semfaith;
using namespace semfaith::synth;

TEST_CASE("sample_qca is a deterministic function of (seed, index)") {
    SynthConfig cfg;
    cfg.n_topics = 9;
    const QcaTriplet a = sample_qca(cfg, 4);
    const QcaTriplet b = sample_qca(cfg, 4);
    CHECK(a.p_q.probs() == b.p_q.probs());
    CHECK(a.p_c.probs() == b.p_c.probs());
    CHECK(a.p_a.probs() == b.p_a.probs());

    const QcaTriplet c = sample_qca(cfg, 5);
    CHECK(a.p_q.probs() != c.p_q.probs());

    SynthConfig other = cfg;
    other.seed = 43;
    const QcaTriplet d = sample_qca(other, 4);
    CHECK(a.p_q.probs() != d.p_q.probs());
}

TEST_CASE("huge concentration approaches the uniform distribution") {
    SynthConfig cfg;
    cfg.n_topics = 10;
    cfg.alpha_c = 1e6;
    const QcaTriplet t = sample_qca(cfg, 0);
    const Scalar dev =
        (t.p_c.probs().array() - 1.0 / cfg.n_topics).abs().maxCoeff();
    CHECK(dev <= 1e-2);
}

TEST_CASE("default sampling satisfies the sparsity ordering") {
    SynthConfig cfg;  // defaults: N=23, alphas 0.3/1.5/0.8, coupling 0.7
    Scalar hq = 0, ha = 0, hc = 0;
    const int n = 100;
    for (int k = 0; k < n; ++k) {
        const QcaTriplet t = sample_qca(cfg, k);
        hq += shannon_entropy(t.p_q, Units::nats);
        ha += shannon_entropy(t.p_a, Units::nats);
        hc += shannon_entropy(t.p_c, Units::nats);
        CHECK(validate_triplet(t).empty());
    }
    CHECK(hq / n < ha / n);
    CHECK(ha / n < hc / n);
}

TEST_CASE("pearson and ols match closed forms") {
    // y = -2x + 3 exactly
    const std::vector<Scalar> xs = {0.1, 0.4, 0.7, 0.9};
    std::vector<Scalar> ys;
    for (Scalar x : xs) ys.push_back(-2 * x + 3);
    const auto r = pearson(xs, ys);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(-1.0).epsilon(1e-12));
    const auto fit = ols_fit(xs, ys);
    REQUIRE(fit.has_value());
    CHECK(fit->first == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit->second == doctest::Approx(3.0).epsilon(1e-12));

    // hand-computed small set: x = (1,2,3), y = (2,2,5)
    const std::vector<Scalar> x2 = {1, 2, 3};
    const std::vector<Scalar> y2 = {2, 2, 5};
    // sxy = 3, sxx = 2, syy = 6 -> r = 3/sqrt(12), slope 1.5, intercept 0
    CHECK(*pearson(x2, y2) ==
          doctest::Approx(3.0 / std::sqrt(12.0)).epsilon(1e-12));
    const auto f2 = ols_fit(x2, y2);
    CHECK(f2->first == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f2->second == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("degenerate statistics are absent, not NaN") {
    CHECK_FALSE(pearson({1.0}, {2.0}).has_value());
    CHECK_FALSE(pearson({1.0, 1.0}, {1.0, 2.0}).has_value());  // zero x-variance
    CHECK_FALSE(ols_fit({2.0, 2.0}, {1.0, 5.0}).has_value());
}

TEST_CASE("run_study on collinear hand-built data recovers the line") {
    // Three triplets whose (f_s, sep) records are replaced is not possible
    // through the public surface; instead check the statistics helpers feed
    // through run_study on a tiny real study without failures.
    SynthConfig cfg;
    cfg.n_topics = 5;
    cfg.n_triplets = 6;
    SolverConfig scfg;
    const StudyReport rep = run_study(cfg, scfg);
    CHECK(rep.records.size() == 6);
    CHECK(rep.failures.empty());
    REQUIRE(rep.pearson_r.has_value());
    CHECK(*rep.pearson_r >= -1.0);
    CHECK(*rep.pearson_r <= 1.0);
    CHECK_FALSE(rep.naive_curve_points.empty());
    for (const auto& [f, v] : rep.naive_curve_points) {
        CHECK(v == doctest::Approx(1.0 / f - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("run_study single triplet reports absent correlation") {
    SynthConfig cfg;
    cfg.n_topics = 4;
    cfg.n_triplets = 1;
    const StudyReport rep = run_study(cfg, SolverConfig{});
    CHECK(rep.records.size() == 1);
    CHECK_FALSE(rep.pearson_r.has_value());
    CHECK_FALSE(rep.ols_slope.has_value());
}

TEST_CASE("run_study is bit-deterministic") {
    SynthConfig cfg;
    cfg.n_topics = 6;
    cfg.n_triplets = 10;
    const SolverConfig scfg;
    const StudyReport a = run_study(cfg, scfg);
    const StudyReport b = run_study(cfg, scfg);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].f_s == b.records[k].f_s);
        CHECK(a.records[k].sep_total == b.records[k].sep_total);
        CHECK(a.records[k].h_q == b.records[k].h_q);
    }
    // Serialized forms are byte-identical too.
    std::ostringstream sa, sb;
    io::write_study_scatter_csv(a, Units::bits, sa);
    io::write_study_scatter_csv(b, Units::bits, sb);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("every sampled triplet passes validation across configs") {
    SynthConfig cfg;
    cfg.n_topics = 3;
    cfg.alpha_q = 0.2;
    cfg.alpha_a = 0.4;
    for (int k = 0; k < 50; ++k) {
        CHECK(validate_triplet(sample_qca(cfg, k)).empty());
    }
}

TEST_CASE("SynthConfig validation") {
    SynthConfig bad;
    bad.alpha_q = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = SynthConfig{};
    bad.context_coupling = 1.5;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}
