#include <doctest.h>

#include <cmath>

#include "koblab/errors.hpp"
#include "koblab/expression.hpp"
#include "koblab/linalg.hpp"

using namespace koblab;

TEST_CASE("matrix inverse and solve") {
    Mat a(3);
    a(0, 0) = 4.0; a(0, 1) = 1.0; a(0, 2) = 0.5;
    a(1, 0) = 1.0; a(1, 1) = 3.0; a(1, 2) = -1.0;
    a(2, 0) = 0.5; a(2, 1) = -1.0; a(2, 2) = 2.0;
    const Mat inv = inverse(a);
    const Mat prod = mat_mul(a, inv);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    const Vec b = {1.0, 2.0, 3.0};
    const Vec x = solve(a, b);
    const Vec ax = mat_vec(a, x);
    for (int i = 0; i < 3; ++i) CHECK(ax[i] == doctest::Approx(b[i]).epsilon(1e-12));
    CHECK_THROWS_AS(inverse(Mat(2)), SingularMetric);
}

TEST_CASE("symmetric eigenvalues") {
    Mat a(2);
    a(0, 0) = 2.0; a(0, 1) = 1.0;
    a(1, 0) = 1.0; a(1, 1) = 2.0;
    const Vec ev = sym_eigenvalues(a);
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("orthonormalize pair against a metric") {
    Mat g(2);
    g(0, 0) = 4.0; g(1, 1) = 1.0;
    Vec v = {1.0, 0.0}, w = {1.0, 1.0};
    orthonormalize_pair(g, v, w);
    CHECK(inner(g, v, v) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inner(g, w, w) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(inner(g, v, w)) < 1e-12);
    Vec a = {1.0, 2.0}, b = {2.0, 4.0};
    CHECK_THROWS_AS(orthonormalize_pair(g, a, b), DegeneratePlane);
}

TEST_CASE("expression parse and eval") {
    const Expr e = Expr::parse("x1^2 + 3*sin(x2) - exp(x1*x2)/2", 2);
    const Vec x = {0.7, -0.3};
    const double expect = 0.49 + 3.0 * std::sin(-0.3) - std::exp(-0.21) / 2.0;
    CHECK(e.eval(x) == doctest::Approx(expect).epsilon(1e-15));
    CHECK(Expr::parse("cosh(x1)", 1).eval({0.6}) == doctest::Approx(std::cosh(0.6)));
    CHECK(Expr::parse("2^x1", 1).eval({3.0}) == doctest::Approx(8.0));
}

TEST_CASE("expression symbolic derivative matches finite differences") {
    const Expr e = Expr::parse("sinh(x1)*cos(x2) + x1/(1+x2^2) + log(2+x1)", 2);
    const Expr d1 = e.derivative(0);
    const Expr d2 = e.derivative(1);
    const double h = 1e-6;
    for (const Vec& x : {Vec{0.3, 0.8}, Vec{-0.5, 0.1}, Vec{1.2, -0.9}}) {
        const double fd1 = (e.eval({x[0] + h, x[1]}) - e.eval({x[0] - h, x[1]})) / (2 * h);
        const double fd2 = (e.eval({x[0], x[1] + h}) - e.eval({x[0], x[1] - h})) / (2 * h);
        CHECK(d1.eval(x) == doctest::Approx(fd1).epsilon(1e-8));
        CHECK(d2.eval(x) == doctest::Approx(fd2).epsilon(1e-8));
    }
}

TEST_CASE("expression parse errors") {
    CHECK_THROWS_AS(Expr::parse("x3 + 1", 2), SpecParseError);
    CHECK_THROWS_AS(Expr::parse("sin x1", 1), SpecParseError);
    CHECK_THROWS_AS(Expr::parse("(x1", 1), SpecParseError);
    CHECK_THROWS_AS(Expr::parse("x1 + $", 1), SpecParseError);
    CHECK_THROWS_AS(Expr::parse("tan(x1)", 1), SpecParseError);
}
