#include <doctest.h>

#include <cmath>
#include <random>

#include "koblab/errors.hpp"
#include "koblab/kobayashi.hpp"
#include "oracles.hpp"

using namespace koblab;

namespace {

SearchBudget lean_budget(double r_max = 2.0, int resolution = 33) {
    SearchBudget b;
    b.r_max = r_max;
    b.resolution = resolution;
    b.max_iter = 8000;
    return b;
}

} // namespace

TEST_CASE("poincare metric formula") {
    CHECK(poincare_metric({0.0, 0.0}, {1.0, 0.0}) == 1.0);
    CHECK(poincare_metric({0.5, 0.0}, {1.0, 0.0}) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-0.6, 0.6);
    for (int s = 0; s < 20; ++s) {
        const std::complex<double> z{unif(rng), unif(rng)};
        const std::complex<double> v{unif(rng), unif(rng)};
        CHECK(poincare_metric(z, 2.0 * v) == doctest::Approx(2.0 * poincare_metric(z, v)));
    }
    CHECK_THROWS_AS(poincare_metric({1.1, 0.0}, {1.0, 0.0}), OutOfChart);
}

TEST_CASE("poincare distance formula") {
    CHECK(poincare_distance({0.3, -0.2}, {0.3, -0.2}) == 0.0);
    CHECK(poincare_distance({0.0, 0.0}, {0.5, 0.0}) ==
          doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-15));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(-0.65, 0.65);
    for (int s = 0; s < 1000; ++s) {
        const std::complex<double> a{unif(rng), unif(rng)};
        const std::complex<double> b{unif(rng), unif(rng)};
        const std::complex<double> c{unif(rng), unif(rng)};
        CHECK(poincare_distance(a, b) == doctest::Approx(poincare_distance(b, a)).epsilon(1e-12));
        CHECK(poincare_distance(a, c) <=
              poincare_distance(a, b) + poincare_distance(b, c) + 1e-12);
    }
    CHECK_THROWS_AS(poincare_distance({1.0, 0.2}, {0.0, 0.0}), OutOfChart);
}

TEST_CASE("upper estimate degenerates on euclidean space") {
    const ChartedMetric eu = make_euclidean(2, 1000.0);
    const KobayashiEstimate e10 = kobayashi_royden_upper(eu, {0.0, 0.0}, {1.0, 0.0},
                                                         lean_budget(10.0, 17));
    const KobayashiEstimate e100 = kobayashi_royden_upper(eu, {0.0, 0.0}, {1.0, 0.0},
                                                          lean_budget(100.0, 17));
    CHECK(e10.upper <= 1.0001 / 10.0);
    CHECK(e100.upper <= 1.0001 / 100.0);
    CHECK(e100.upper < e10.upper); // larger budget, smaller estimate
}

TEST_CASE("upper estimate on the poincare disc via the identity disc") {
    const ChartedMetric poin = make_poincare_disc();
    const KobayashiEstimate est =
        kobayashi_royden_upper(poin, {0.0, 0.0}, {1.0, 0.0}, lean_budget(2.0, 65));
    CHECK(est.upper <= 1.05);
    CHECK(est.upper >= 1.0 - 1e-6); // the Schwarz lemma forbids going below 1
    CHECK(est.discs_admissible > 0);
    CHECK_FALSE(est.certificate.empty());
}

TEST_CASE("upper estimates are homogeneous in xi") {
    const ChartedMetric poin = make_poincare_disc();
    const SearchBudget budget = lean_budget(1.0, 33);
    const Vec p = {0.2, 0.1};
    const Vec xi = {0.8, -0.4};
    const double base = kobayashi_royden_upper(poin, p, xi, budget).upper;
    for (double a : {-2.0, -1.0, 0.5, 3.0}) {
        const Vec axi = a * xi;
        const double scaled = kobayashi_royden_upper(poin, p, axi, budget).upper;
        CHECK(std::fabs(scaled - std::fabs(a) * base) <= 0.02 * std::fabs(a) * base);
    }
}

TEST_CASE("lower bound from the curvature pinch") {
    const ChartedMetric poin = make_poincare_disc();
    CHECK(kobayashi_royden_lower(poin, {0.0, 0.0}, {1.0, 0.0}, 4.0) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-12)); // |e1|_g = 1 at 0
    const ChartedMetric hyp = make_hyperbolic_ball(3);
    // |e1|_g = 2 at the origin, so the bound is 2 sqrt(1/8)
    CHECK(kobayashi_royden_lower(hyp, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, 1.0) ==
          doctest::Approx(2.0 * std::sqrt(1.0 / 8.0)).epsilon(1e-12));
    CHECK(kobayashi_royden_lower(hyp, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 1.0) == 0.0);
    CHECK_THROWS_AS(kobayashi_royden_lower(make_euclidean(2), {0.0, 0.0}, {1.0, 0.0}, 1.0),
                    PinchNotCertified);
}

TEST_CASE("upper stays above the certified lower bound") {
    const ChartedMetric poin = make_poincare_disc();
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const SearchBudget budget = lean_budget(2.0, 33);
    for (int s = 0; s < 3; ++s) {
        const Vec p = sample_point(poin, rng, 0.5);
        const Vec xi = {gauss(rng), gauss(rng)};
        const double upper = kobayashi_royden_upper(poin, p, xi, budget).upper;
        const double lower = kobayashi_royden_lower(poin, p, xi, 4.0);
        CHECK(lower <= upper * 1.1);
    }
}

TEST_CASE("schwarz bound check") {
    const ChartedMetric poin = make_poincare_disc();
    auto grid = make_disc_grid(33);
    const DiscMap ident = make_disc_map(grid, poin, [](double x, double y) { return Vec{x, y}; });
    const SchwarzReport rep = schwarz_check(ident, 4.0);
    CHECK(rep.pass);
    CHECK(rep.worst_ratio == doctest::Approx(0.5).epsilon(1e-9));

    const DiscMap constant = make_disc_map(grid, poin, [](double, double) { return Vec{0.1, 0.2}; });
    CHECK(schwarz_check(constant, 4.0).worst_ratio == 0.0);

    const ChartedMetric hyp = make_hyperbolic_ball(2);
    JetConfig jc;
    jc.resolution = 33;
    const JetDiscResult jd = jet_disc(hyp, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 0.2, jc);
    REQUIRE(jd.admissible);
    const SchwarzReport hrep = schwarz_check(jd.disc, 1.0);
    CHECK(hrep.pass);
    CHECK(hrep.worst_ratio <= 1.0 + 1e-2);
}

TEST_CASE("chain distance basics") {
    const ChartedMetric poin = make_poincare_disc();
    const ChainDistanceResult trivial = chain_distance(poin, {0.2, 0.1}, {0.2, 0.1});
    CHECK(trivial.value == 0.0);
    CHECK(trivial.chain.empty());

    ChainConfig cc;
    cc.resolution = 33;
    const ChainDistanceResult r = chain_distance(poin, {0.0, 0.0}, {0.5, 0.0}, cc);
    const double expect = 0.5 * std::log(3.0);
    CHECK(std::fabs(r.value - expect) <= 0.1 * expect);
    double total = 0.0;
    for (const ChainLink& l : r.chain) total += l.rho;
    CHECK(r.value == total); // value is exactly the sum along the chain
}

TEST_CASE("chain distance decreases with the euclidean budget") {
    const ChartedMetric eu = make_euclidean(2, 1000.0);
    const Vec p = {0.0, 0.0}, q = {1.0, 0.5};
    double prev = 1e300;
    for (double radius : {10.0, 100.0}) {
        ChainConfig cc;
        cc.radii = {radius};
        cc.resolution = 17;
        cc.cloud_size = 2;
        const ChainDistanceResult r = chain_distance(eu, p, q, cc);
        CHECK(r.value < prev);
        CHECK(r.value <= 1.05 * norm2(q - p) / radius);
        prev = r.value;
    }
}

TEST_CASE("chain distance is nearly symmetric on a homogeneous model") {
    const ChartedMetric poin = make_poincare_disc();
    ChainConfig cc;
    cc.resolution = 33;
    const Vec p = {0.1, -0.2}, q = {0.45, 0.3};
    const double ab = chain_distance(poin, p, q, cc).value;
    const double ba = chain_distance(poin, q, p, cc).value;
    CHECK(std::fabs(ab - ba) <= 0.05 * std::max(ab, ba));
}

TEST_CASE("chain distance dominates the curvature lower proxy") {
    const ChartedMetric poin = make_poincare_disc();
    ChainConfig cc;
    cc.resolution = 33;
    const Vec p = {0.0, 0.0}, q = {0.5, 0.0};
    const ChainDistanceResult r = chain_distance(poin, p, q, cc);
    double shadow = 0.0; // g-geodesic length of the chain's anchor polyline
    for (const ChainLink& l : r.chain)
        shadow += oracles::poincare_m4_distance(l.from[0], l.from[1], l.to[0], l.to[1]);
    CHECK(r.value >= std::sqrt(4.0 / 8.0) * shadow * (1.0 - 0.15));
}

TEST_CASE("integrated distance on the poincare disc") {
    const ChartedMetric poin = make_poincare_disc();
    CHECK(integrated_distance(poin, {0.3, 0.0}, {0.3, 0.0}).value == 0.0);

    PathConfig pc;
    pc.perturbations = 6; // lean unit-test budget; acceptance runs the full family
    const IntegratedDistanceResult r = integrated_distance(poin, {0.0, 0.0}, {0.5, 0.0}, pc);
    const double expect = 0.5 * std::log(3.0);
    CHECK(std::fabs(r.value - expect) <= 0.1 * expect);
    CHECK(r.path.size() >= 2);
}

TEST_CASE("chain and integrated distances agree at desk tolerance") {
    const ChartedMetric poin = make_poincare_disc();
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> unif(-0.55, 0.55);
    PathConfig pc;
    pc.perturbations = 4;
    ChainConfig cc;
    cc.resolution = 33;
    for (int s = 0; s < 2; ++s) {
        const Vec p = {unif(rng), unif(rng)};
        const Vec q = {unif(rng), unif(rng)};
        const double chain = chain_distance(poin, p, q, cc).value;
        const double integ = integrated_distance(poin, p, q, pc).value;
        INFO("pair " << s << ": chain " << chain << " vs integrated " << integ);
        CHECK(std::fabs(chain - integ) <= 0.15 * std::max(chain, integ));
    }
}

TEST_CASE("decreasing property under domain inclusion") {
    const ChartedMetric poin = make_poincare_disc();
    const ChartedMetric half = restrict_domain(poin, Domain::ball({0.0, 0.0}, 0.5));
    const SearchBudget budget = lean_budget(2.0, 33);
    const DecreasingReport rep = decreasing_property_check(
        half, poin, {{{0.0, 0.0}, {1.0, 0.0}}, {{0.1, 0.05}, {0.3, 1.0}}}, budget);
    CHECK(rep.all_ok);
    for (const DecreasingRow& row : rep.rows) CHECK(row.upper_amb <= row.upper_sub + 1e-12);

    // identical domains give identical estimates
    const DecreasingReport same =
        decreasing_property_check(poin, poin, {{{0.0, 0.0}, {1.0, 0.0}}}, budget);
    CHECK(same.rows[0].upper_amb == doctest::Approx(same.rows[0].upper_sub).epsilon(1e-12));

    // euclidean sub-ball: the ambient estimate drops with more room
    const ChartedMetric eu = make_euclidean(2, 100.0);
    const ChartedMetric ball = restrict_domain(eu, Domain::ball({0.0, 0.0}, 2.0));
    const DecreasingReport eur = decreasing_property_check(
        ball, eu, {{{0.0, 0.0}, {1.0, 0.0}}}, lean_budget(50.0, 17));
    CHECK(eur.all_ok);
    CHECK(eur.rows[0].upper_amb < eur.rows[0].upper_sub);
}

TEST_CASE("pointwise hyperbolicity flags") {
    const ChartedMetric poin = make_poincare_disc();
    const HyperbolicityResult hp = hyperbolic_at_point(poin, {0.2, 0.0}, 4.0);
    CHECK(hp.known);
    CHECK(hp.hyperbolic);
    CHECK(hp.constant == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    const HyperbolicityResult eu = hyperbolic_at_point(make_euclidean(2), {0.0, 0.0}, 1.0);
    CHECK_FALSE(eu.known);
    const HyperbolicityResult none = hyperbolic_at_point(poin, {0.2, 0.0}, std::nullopt);
    CHECK_FALSE(none.known);

    const HyperbolicityResult hyp =
        hyperbolic_at_point(make_hyperbolic_ball(3), {0.1, 0.0, 0.2}, 1.0);
    CHECK(hyp.known);
    CHECK(hyp.constant == doctest::Approx(std::sqrt(1.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("local boundedness of the upper estimates") {
    const ChartedMetric poin = make_poincare_disc();
    const SearchBudget budget = lean_budget(1.0, 17);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-0.4, 0.4);
    std::vector<double> ratios;
    for (int s = 0; s < 8; ++s) {
        const Vec p = {unif(rng), unif(rng)};
        const Vec xi = {gauss(rng), gauss(rng)};
        const double upper = kobayashi_royden_upper(poin, p, xi, budget).upper;
        const double nxi = norm_g(poin.metric_at(p), xi);
        ratios.push_back(upper / nxi);
    }
    double c4 = 0.0, c8 = 0.0; // worst constant over the first half vs all
    for (int s = 0; s < 8; ++s) {
        if (s < 4) c4 = std::max(c4, ratios[static_cast<std::size_t>(s)]);
        c8 = std::max(c8, ratios[static_cast<std::size_t>(s)]);
    }
    CHECK(std::isfinite(c4));
    CHECK(std::isfinite(c8));
    CHECK(std::fabs(c8 - c4) <= 0.2 * std::max(c4, c8));
}

TEST_CASE("result record emitters") {
    KobayashiEstimate est;
    est.upper = 1.25;
    est.lower = 0.75;
    est.certificate = "plane0_r2";
    est.tau_h = 1e-4;
    est.tau_c = 1e-2;
    const std::string json = estimate_to_json({0.0, 0.0}, {1.0, 0.0}, est);
    CHECK(json.find("\"upper\":1.25") != std::string::npos);
    CHECK(json.find("\"lower\":0.75") != std::string::npos);
    CHECK(json.find("plane0_r2") != std::string::npos);
}
