#include <doctest.h>

#include <cmath>

#include "koblab/errors.hpp"
#include "koblab/geodesic.hpp"
#include "koblab/pinched.hpp"

using namespace koblab;

TEST_CASE("find_t0: flat models saturate the r0/2 constraint") {
    const std::vector<Vec> ps = {{0.0, 0.0}, {1.0, -0.5}};
    T0Config tc;
    tc.r0 = 0.5;
    const double t_eu = find_t0(make_euclidean(2), 0.05, 3, ps, tc);
    CHECK(t_eu > 0.2499);
    CHECK(t_eu < 0.25);
    const double t_torus = find_t0(make_flat_torus({6.3, 6.3}), 0.05, 3, ps, tc);
    CHECK(t_torus > 0.2499);
    CHECK(t_torus < 0.25);
}

TEST_CASE("find_t0: hyperbolic plane scale is positive and sample stable") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    T0Config tc;
    tc.r0 = 0.5;
    const std::vector<Vec> few = {{0.0, 0.0}, {0.3, 0.1}, {-0.2, 0.25}};
    const double t_few = find_t0(hyp, 0.05, 2, few, tc);
    CHECK(t_few > 0.0);
    CHECK(t_few < 0.25);
    std::vector<Vec> more = few;
    more.push_back({0.15, -0.3});
    more.push_back({-0.1, -0.05});
    more.push_back({0.05, 0.35});
    const double t_more = find_t0(hyp, 0.05, 2, more, tc);
    CHECK(std::fabs(t_more - t_few) <= 0.1 * std::max(t_few, t_more));
}

TEST_CASE("find_t0 is monotone in eps0") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    const std::vector<Vec> ps = {{0.0, 0.0}, {0.25, -0.15}};
    T0Config tc;
    tc.r0 = 0.5;
    double prev = 0.0;
    for (double eps0 : {0.02, 0.05, 0.1}) {
        const double t0 = find_t0(hyp, eps0, 2, ps, tc);
        CHECK(t0 >= prev - 1e-12);
        prev = t0;
    }
}

TEST_CASE("claim disc: constant metric gives the exact flat disc") {
    ChartedMetric eu = make_euclidean(2, 8.0);
    const ClaimResult res = claim_disc(eu, {2.0, 0.0}, {0.0, 0.5}, {});
    CHECK(res.alpha == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.report.converged);
    CHECK(res.report.tension_residual < 1e-10);
    CHECK(res.report.conformality_defect < 1e-10);
}

TEST_CASE("claim disc: hyperbolic rescaled chart keeps alpha near one") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    T0Config tc;
    tc.r0 = 0.5;
    const double t0 = find_t0(hyp, 0.05, 3, {{0.0, 0.0}, {0.2, -0.1}}, tc);
    const ChartedMetric hp = pullback_exp_metric(hyp, {0.0, 0.0}, 2.5 * t0, 64);
    const ChartedMetric hp_t = rescaled_metric(hp, t0);
    const ClaimResult res = claim_disc(hp_t, {1.0, 0.0}, {0.0, 1.0}, {});
    CHECK(res.alpha >= 0.9);
    CHECK(res.alpha <= 1.0 + 1e-6);
    CHECK(res.report.converged);
}

TEST_CASE("claim disc alpha approaches one as eps0 shrinks") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    T0Config tc;
    tc.r0 = 0.5;
    const std::vector<Vec> ps = {{0.0, 0.0}};
    double prev_alpha = 0.0;
    for (double eps0 : {0.1, 0.05, 0.01}) {
        const double t0 = find_t0(hyp, eps0, 2, ps, tc);
        const ChartedMetric hp = pullback_exp_metric(hyp, {0.0, 0.0}, 2.5 * t0, 64);
        const ChartedMetric hp_t = rescaled_metric(hp, t0);
        ClaimConfig cc;
        cc.eps0 = eps0;
        const ClaimResult res = claim_disc(hp_t, {1.0, 0.0}, {0.0, 1.0}, cc);
        CHECK(res.alpha >= 0.9);
        CHECK(res.alpha >= prev_alpha - 5e-3);
        prev_alpha = res.alpha;
    }
    CHECK(prev_alpha > 0.995); // eps0 = 0.01 pushes alpha to 1
}

TEST_CASE("claim disc rejects non-orthogonal directions") {
    ChartedMetric eu = make_euclidean(2, 8.0);
    CHECK_THROWS_AS(claim_disc(eu, {1.0, 0.0}, {0.5, 1.0}, {}), PreconditionFailed);
}

TEST_CASE("upper bound certificate formula and homogeneity") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    const double t0 = 0.19;
    const Vec v = {1.0, 0.0};           // |v|_h = 2 at the origin
    UpperCertConfig uc;
    const UpperCertResult res = upper_bound_certificate(hyp, {0.0, 0.0}, v, t0, uc);
    CHECK(res.bound == doctest::Approx(2.0 * 2.0 / t0).epsilon(1e-12));
    CHECK(res.ok);
    CHECK(res.composite_admissible);
    CHECK(res.measured_upper <= res.bound * 1.05);
    CHECK(res.alpha >= 0.5);

    const UpperCertResult res2 = upper_bound_certificate(hyp, {0.0, 0.0}, 2.0 * v, t0, uc);
    CHECK(res2.bound == doctest::Approx(2.0 * res.bound).epsilon(1e-12));

    CHECK_THROWS_AS(upper_bound_certificate(hyp, {0.0, 0.0}, v, 0.0, uc), NonpositiveScale);
}

TEST_CASE("bilipschitz certificate on the hyperbolic plane") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    T0Config tc;
    tc.r0 = 0.5;
    const double t0 = find_t0(hyp, 0.05, 3, {{0.0, 0.0}, {0.2, -0.1}}, tc);
    BiLipschitzConfig bc;
    bc.point_samples = 3;
    bc.dirs_per_point = 2;
    const BiLipschitzCertificate cert = bilipschitz_verify(hyp, 1.0, t0, bc);
    CHECK(cert.pass);
    CHECK(cert.rows.size() == 6);
    CHECK(cert.lower_const == doctest::Approx(std::sqrt(1.0 / 8.0)));
    CHECK(cert.upper_const == doctest::Approx(2.0 / t0));
    CHECK(cert.lower_const <= cert.upper_const); // nonempty bracket
    CHECK(cert.big_c == doctest::Approx(std::max(2.0 / t0, std::sqrt(8.0))));
    for (const BiLipschitzRow& r : cert.rows) {
        CHECK(r.ok);
        CHECK(r.lower <= r.upper * 1.1);
        CHECK(r.upper <= r.cert_bound * 1.1);
    }
}

TEST_CASE("bilipschitz certificate on the poincare disc") {
    const ChartedMetric poin = make_poincare_disc();
    T0Config tc;
    tc.r0 = 0.5;
    const double t0 = find_t0(poin, 0.05, 2, {{0.0, 0.0}, {0.3, 0.0}}, tc);
    BiLipschitzConfig bc;
    bc.point_samples = 2;
    bc.dirs_per_point = 2;
    const BiLipschitzCertificate cert = bilipschitz_verify(poin, 4.0, t0, bc);
    CHECK(cert.pass);
    CHECK(cert.lower_const == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("bilipschitz refuses unpinched models") {
    BiLipschitzConfig bc;
    bc.point_samples = 1;
    bc.dirs_per_point = 1;
    CHECK_THROWS_AS(bilipschitz_verify(make_euclidean(2), 1.0, 0.1, bc), PinchNotCertified);
}

TEST_CASE("certificate constants are homogeneous across base points") {
    // upper estimates normalized by |v|_h agree at the origin and elsewhere
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    SearchBudget budget;
    budget.resolution = 33;
    budget.max_iter = 6000;
    const Vec v = {1.0, 0.0};
    auto normalized_upper = [&](const Vec& p) {
        const double u = kobayashi_royden_upper(hyp, p, v, budget).upper;
        return u / norm_g(hyp.metric_at(p), v);
    };
    const double at0 = normalized_upper({0.0, 0.0});
    const double at1 = normalized_upper({0.35, -0.2});
    CHECK(std::fabs(at0 - at1) <= 0.1 * std::max(at0, at1));
}

TEST_CASE("certificate json and summary emit") {
    BiLipschitzCertificate cert;
    cert.model = "hyperbolic_ball";
    cert.c = 1.0;
    cert.t0 = 0.2;
    cert.lower_const = std::sqrt(1.0 / 8.0);
    cert.upper_const = 10.0;
    cert.big_c = 10.0;
    cert.pass = true;
    BiLipschitzRow row;
    row.p = {0.0, 0.0};
    row.v = {1.0, 0.0};
    row.lower = 0.7;
    row.upper = 1.0;
    row.cert_bound = 20.0;
    row.ok = true;
    cert.rows.push_back(row);
    const std::string json = certificate_to_json(cert);
    CHECK(json.find("\"model\":\"hyperbolic_ball\"") != std::string::npos);
    CHECK(json.find("\"rows\":[{") != std::string::npos);
    const std::string summary = certificate_summary(cert);
    CHECK(summary.find("pass: yes") != std::string::npos);
}
