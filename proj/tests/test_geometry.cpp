#include <doctest.h>

#include <cmath>
#include <random>

#include "koblab/curvature.hpp"
#include "koblab/errors.hpp"
#include "koblab/geodesic.hpp"
#include "koblab/metric.hpp"
#include "oracles.hpp"

using namespace koblab;

namespace {

Vec random_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

} // namespace

TEST_CASE("metric invariants hold on the model library") {
    for (const ChartedMetric& m :
         {make_euclidean(3), make_poincare_disc(), make_hyperbolic_ball(3),
          make_flat_torus({6.28, 6.28}), make_warped_product("cosh(x1)", 0.5, 2.0)}) {
        const MetricCheckReport rep = check_metric(m, 40, 7, 1e-4, 0.2);
        INFO(m.name);
        CHECK(rep.symmetric);
        CHECK(rep.positive_definite);
        CHECK(rep.dg_consistent);
    }
}

TEST_CASE("expression metric evaluates and differentiates") {
    const ChartedMetric m = make_expression_metric(
        2, {{"1 + x2^2", "x1*x2/4"}, {"x1*x2/4", "1 + x1^2"}},
        Domain::box({0.0, 0.0}, {0.8, 0.8}));
    const MetricCheckReport rep = check_metric(m, 30, 11, 1e-6, 0.1);
    CHECK(rep.symmetric);
    CHECK(rep.positive_definite);
    CHECK(rep.dg_consistent);
}

TEST_CASE("christoffel: flat charts vanish exactly") {
    const ChartedMetric eu = make_euclidean(3);
    const ChristoffelTable t = christoffel(eu, {0.4, -1.2, 2.0});
    for (double v : t.c) CHECK(v == 0.0);
    const ChartedMetric torus = make_flat_torus({6.28, 6.28});
    const ChristoffelTable tt = christoffel(torus, {9.0, -2.0}); // wraps
    for (double v : tt.c) CHECK(v == 0.0);
}

TEST_CASE("christoffel: poincare disc at the origin and against the oracle") {
    const ChartedMetric poin = make_poincare_disc();
    const ChristoffelTable at0 = christoffel(poin, {0.0, 0.0});
    for (double v : at0.c) CHECK(std::fabs(v) < 1e-14);

    // closed form at (0.5, 0): nonzero entries are +-4/3
    const ChristoffelTable t = christoffel(poin, {0.5, 0.0});
    CHECK(t.at(0, 0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(t.at(0, 1, 1) == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
    CHECK(t.at(1, 0, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(std::fabs(t.at(1, 0, 0)) < 1e-12);

    // dual-number oracle at a generic point, agreement within 1e-8
    const Vec x = {0.31, -0.44};
    const ChristoffelTable lib = christoffel(poin, x);
    const auto orc = oracles::conformal_christoffel_ad(
        [](const std::vector<oracles::Dual>& xd) { return oracles::poincare_lambda(xd); }, x);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK(lib.at(k, i, j) ==
                      doctest::Approx(orc[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]
                                         [static_cast<std::size_t>(j)])
                          .epsilon(1e-8));
    CHECK(lib.at(0, 0, 1) == lib.at(0, 1, 0)); // symmetry in (i, j)
}

TEST_CASE("christoffel chart and singularity errors") {
    const ChartedMetric poin = make_poincare_disc();
    CHECK_THROWS_AS(christoffel(poin, {1.5, 0.0}), OutOfChart);
    const ChartedMetric sing = make_expression_metric(
        2, {{"x1", "0"}, {"0", "x1"}}, Domain::box({0.0, 0.0}, {0.5, 0.5}));
    CHECK_THROWS_AS(christoffel(sing, {0.0, 0.0}), SingularMetric);
}

TEST_CASE("sectional curvature of the model spaces") {
    const ChartedMetric eu = make_euclidean(3);
    CHECK(std::fabs(sectional_curvature(eu, {1.0, 2.0, -1.0}, {1.0, 0.3, 0.0},
                                        {0.0, 1.0, -0.5})) < 1e-8);

    const ChartedMetric poin = make_poincare_disc();
    CHECK(sectional_curvature(poin, {0.2, 0.35}, {1.0, 0.0}, {0.0, 1.0}) ==
          doctest::Approx(-4.0).epsilon(1e-5));

    const ChartedMetric hyp = make_hyperbolic_ball(3);
    std::mt19937_64 rng(3);
    for (int s = 0; s < 5; ++s) {
        const Vec x = sample_point(hyp, rng, 0.3);
        CHECK(sectional_curvature(hyp, x, random_vec(rng, 3), random_vec(rng, 3)) ==
              doctest::Approx(-1.0).epsilon(1e-5));
    }
    CHECK_THROWS_AS(sectional_curvature(eu, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}),
                    DegeneratePlane);
}

TEST_CASE("sectional curvature is basis independent") {
    const ChartedMetric hyp = make_hyperbolic_ball(3);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec x = sample_point(hyp, rng, 0.3);
        const Vec v = random_vec(rng, 3), w = random_vec(rng, 3);
        double a, b, c, d;
        do {
            a = unif(rng); b = unif(rng); c = unif(rng); d = unif(rng);
        } while (std::fabs(a * d - b * c) < 0.1);
        const Vec v2 = a * v + b * w, w2 = c * v + d * w;
        const CurvatureReport rep = curvature_report(hyp, x);
        CHECK(std::fabs(rep.sectional(v, w) - rep.sectional(v2, w2)) < 1e-6);
    }
}

TEST_CASE("riemann tensor symmetries within tolerance") {
    std::mt19937_64 rng(23);
    for (const ChartedMetric& m :
         {make_poincare_disc(), make_hyperbolic_ball(3),
          make_warped_product("cosh(x1)", 0.5, 2.0)}) {
        const Vec x = sample_point(m, rng, 0.25);
        const RiemannTable r = riemann_lowered(m, x);
        const int n = m.dim;
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        worst = std::max(worst, std::fabs(r.at(i, j, k, l) + r.at(j, i, k, l)));
                        worst = std::max(worst, std::fabs(r.at(i, j, k, l) + r.at(i, j, l, k)));
                        worst = std::max(worst, std::fabs(r.at(i, j, k, l) - r.at(k, l, i, j)));
                    }
        INFO(m.name);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("curvature bounds scan") {
    const CurvatureBounds hyp = curvature_bounds_scan(make_hyperbolic_ball(3), 60, 5);
    CHECK(hyp.k_min == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(hyp.k_max == doctest::Approx(-1.0).epsilon(1e-4));

    const CurvatureBounds torus = curvature_bounds_scan(make_flat_torus({6.28, 6.28}), 30, 5);
    CHECK(std::fabs(torus.k_min) < 1e-8);
    CHECK(std::fabs(torus.k_max) < 1e-8);

    const CurvatureBounds eu = curvature_bounds_scan(make_euclidean(2), 30, 5);
    CHECK(std::fabs(eu.k_min) < 1e-8);
    CHECK(std::fabs(eu.k_max) < 1e-8);

    // determinism under a fixed seed
    const CurvatureBounds again = curvature_bounds_scan(make_hyperbolic_ball(3), 60, 5);
    CHECK(again.k_min == hyp.k_min);
    CHECK(again.k_max == hyp.k_max);
}

TEST_CASE("geodesic exponential map") {
    const ChartedMetric eu = make_euclidean(3);
    const Vec p = {1.0, -2.0, 0.5}, v = {0.3, 0.4, -0.2};
    const Vec q = geodesic_exp(eu, p, v);
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(q[i] - (p[i] + v[i])) < 1e-12);

    const ChartedMetric poin = make_poincare_disc();
    const Vec e = geodesic_exp(poin, {0.0, 0.0}, {0.8, 0.0});
    CHECK(e[0] == doctest::Approx(std::tanh(0.8)).epsilon(1e-6));
    CHECK(std::fabs(e[1]) < 1e-12);

    const ChartedMetric torus = make_flat_torus({2.0, 3.0});
    const Vec w = geodesic_exp(torus, {0.4, 0.5}, {2.5, 3.2});
    CHECK(w[0] == doctest::Approx(std::remainder(0.4 + 2.5, 2.0)).epsilon(1e-10));
    CHECK(w[1] == doctest::Approx(std::remainder(0.5 + 3.2, 3.0)).epsilon(1e-10));

    CHECK_THROWS_AS(geodesic_exp(make_euclidean(2, 1.0), {0.0, 0.0}, {5.0, 0.0}), LeftChart);
}

TEST_CASE("geodesics preserve speed") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    const GeodesicPath path = geodesic_path(hyp, {0.2, -0.1}, {0.35, 0.2}, 128);
    const double speed0 = norm_g(hyp.metric_at(path.points.front()), path.velocities.front());
    for (std::size_t s = 0; s < path.points.size(); s += 16) {
        const double speed = norm_g(hyp.metric_at(path.points[s]), path.velocities[s]);
        CHECK(speed == doctest::Approx(speed0).epsilon(1e-6));
    }
}

TEST_CASE("pullback metric: euclidean chart is the identity") {
    const ChartedMetric eu = make_euclidean(2);
    const ChartedMetric hp = pullback_exp_metric(eu, {0.7, -0.4}, 1.0);
    for (const Vec& x : {Vec{0.0, 0.0}, Vec{0.3, 0.2}, Vec{-0.5, 0.1}}) {
        const Mat g = hp.g(x);
        CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(g(1, 1) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::fabs(g(0, 1)) < 1e-8);
    }
}

TEST_CASE("pullback metric: hyperbolic normal form and h_p(0) = h(p)") {
    // raw tangent coordinates at p = 0 carry h(p) = 4 delta, so the
    // closed-form normal metric enters at x -> 2x with a factor 4
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    const ChartedMetric hp = pullback_exp_metric(hyp, {0.0, 0.0}, 1.2);
    for (const Vec& x : {Vec{0.15, 0.0}, Vec{0.1, 0.2}, Vec{-0.17, 0.12}}) {
        const Mat g = hp.g(x);
        const Mat expect = oracles::hyperbolic_normal_metric(2.0 * x);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK(g(i, j) == doctest::Approx(4.0 * expect(i, j)).epsilon(1e-4));
    }

    std::mt19937_64 rng(77);
    for (const ChartedMetric& m : {make_poincare_disc(), make_hyperbolic_ball(2)}) {
        for (int s = 0; s < 5; ++s) {
            const Vec p = sample_point(m, rng, 0.45);
            const Mat gp = m.metric_at(p);
            const ChartedMetric pb = pullback_exp_metric(m, p, 0.4);
            const Mat at0 = pb.g({0.0, 0.0});
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    CHECK(std::fabs(at0(i, j) - gp(i, j)) < 1e-8 * std::max(1.0, std::fabs(gp(i, j))));
        }
    }
}

TEST_CASE("pullback metric satisfies the Gauss lemma numerically") {
    // radial directions keep unit h_p-norm in normal coordinates
    for (const ChartedMetric& m : {make_poincare_disc(), make_hyperbolic_ball(2)}) {
        const Vec p = {0.15, -0.1};
        const ChartedMetric hp = pullback_exp_metric(m, p, 1.0);
        const Mat gp = m.metric_at(p);
        const std::vector<Vec> frame = orthonormal_frame(gp);
        for (double r : {0.2, 0.5, 0.8}) {
            for (int dir = 0; dir < 4; ++dir) {
                const double th = 0.25 + 1.57 * dir;
                Vec radial(2);
                for (int i = 0; i < 2; ++i)
                    radial[i] = std::cos(th) * frame[0][i] + std::sin(th) * frame[1][i];
                const Vec x = r * radial;
                if (!hp.contains(x)) continue;
                const Mat g = hp.g(x);
                INFO(m.name);
                CHECK(norm_g(g, radial) == doctest::Approx(1.0).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("rescaled metric family") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    const ChartedMetric hp = pullback_exp_metric(hyp, {0.0, 0.0}, 1.4);

    // t = 1 reproduces the metric
    const ChartedMetric same = rescaled_metric(hp, 1.0);
    const Mat a = hp.g({0.3, 0.1}), b = same.g({0.3, 0.1});
    for (int i = 0; i < 4; ++i)
        CHECK(a.a[static_cast<std::size_t>(i)] == b.a[static_cast<std::size_t>(i)]);

    // constant metrics are fixed points of the rescaling
    const ChartedMetric eu = make_euclidean(2);
    const ChartedMetric eu_scaled = rescaled_metric(eu, 0.37);
    const Mat c = eu_scaled.g({5.0, -3.0});
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == 0.0);

    CHECK_THROWS_AS(rescaled_metric(hp, 0.0), NonpositiveScale);
    CHECK_THROWS_AS(rescaled_metric(hp, -1.0), NonpositiveScale);

    // C0 deviation from h_p(0) on the radius-2 ball shrinks with t
    const Mat h0 = hp.g({0.0, 0.0});
    auto dev = [&](double t) {
        const ChartedMetric ht = rescaled_metric(hp, t);
        double worst = 0.0;
        for (int s = 0; s < 12; ++s) {
            const double th = 0.5236 * s;
            const Vec x = {2.0 * std::cos(th), 2.0 * std::sin(th)};
            const Mat gx = ht.g(0.99 * x);
            for (int i = 0; i < 4; ++i)
                worst = std::max(worst, std::fabs(gx.a[static_cast<std::size_t>(i)] -
                                                  h0.a[static_cast<std::size_t>(i)]));
        }
        return worst;
    };
    const double d05 = dev(0.5), d01 = dev(0.1);
    CHECK(d01 < d05);
}

TEST_CASE("rescaled metric converges uniformly over base points") {
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    for (const Vec& p : {Vec{0.0, 0.0}, Vec{0.3, -0.2}}) {
        const NormalFrameField field(hyp, p, 1.1, 64);
        double prev = 1e300;
        for (double t : {0.5, 0.25, 0.125}) {
            const double d = ck_deviation(field, t, 2.0, 0, 0.5);
            CHECK(d <= prev * (1.0 + 1e-9));
            prev = d;
        }
    }
}

TEST_CASE("quasi-bounded geometry check") {
    const ChartedMetric eu = make_euclidean(2);
    const QuasiBoundedReport flat = quasi_bounded_check(eu, {{0.0, 0.0}, {1.0, 2.0}}, 0.5, 2);
    for (double a : flat.a_q) CHECK(a < 1e-8);

    const ChartedMetric torus = make_flat_torus({6.28, 6.28});
    const QuasiBoundedReport tor = quasi_bounded_check(torus, {{0.0, 0.0}, {1.0, 1.0}}, 0.5, 2);
    for (double a : tor.a_q) CHECK(a < 1e-8);

    // hyperbolic plane: finite table, homogeneous across base points
    const ChartedMetric hyp = make_hyperbolic_ball(2);
    std::mt19937_64 rng(13);
    std::vector<Vec> samples;
    for (int s = 0; s < 10; ++s) samples.push_back(sample_point(hyp, rng, 0.5));
    const QuasiBoundedReport rep = quasi_bounded_check(hyp, samples, 0.5, 2);
    CHECK(rep.ok());
    CHECK(rep.per_point.size() == samples.size());
    REQUIRE(rep.a_q.size() == 3);
    CHECK(rep.a_q[0] <= rep.a_q[1]);
    CHECK(rep.a_q[1] <= rep.a_q[2]);
    CHECK(rep.a_q[2] > 0.0);
    for (std::size_t q = 1; q < 3; ++q) {
        double lo = 1e300, hi = 0.0;
        for (const auto& row : rep.per_point) {
            lo = std::min(lo, row[q]);
            hi = std::max(hi, row[q]);
        }
        INFO("q = " << q);
        CHECK((hi - lo) / hi < 0.05);
    }
}
