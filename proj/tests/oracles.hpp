// Independent oracles used by the test suite. Everything here is computed
// without touching the library's derivative or solver paths: dual-number
// forward differentiation, closed-form constant-curvature formulas, and the
// symbolic tension of conformal 2d metrics.
#ifndef KOBLAB_TEST_ORACLES_HPP
#define KOBLAB_TEST_ORACLES_HPP

#include <array>
#include <cmath>
#include <vector>

#include "koblab/linalg.hpp"

namespace oracles {

inline constexpr int kMaxDim = 4;

// first-order dual number carrying a gradient
struct Dual {
    double v = 0.0;
    std::array<double, kMaxDim> d{};

    Dual() = default;
    Dual(double value) : v(value) {}
    static Dual var(double value, int slot) {
        Dual x(value);
        x.d[static_cast<std::size_t>(slot)] = 1.0;
        return x;
    }
};

inline Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.v + b.v);
    for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}

inline Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.v - b.v);
    for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}

inline Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}

inline Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    for (int i = 0; i < kMaxDim; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
    return r;
}

// conformal factor lambda(x) of the builtin models, templated for duals
template <class T>
T poincare_lambda(const std::vector<T>& x) {
    T r2 = x[0] * x[0] + x[1] * x[1];
    T s = T(1.0) - r2;
    return T(1.0) / (s * s);
}

template <class T>
T hyperbolic_lambda(const std::vector<T>& x) {
    T r2(0.0);
    for (const T& c : x) r2 = r2 + c * c;
    T s = T(1.0) - r2;
    return T(4.0) / (s * s);
}

// Christoffel symbols of g = lambda * delta via dual numbers; completely
// independent of the library's dg path. gamma[k][i][j].
template <class Lambda>
std::vector<std::vector<std::vector<double>>> conformal_christoffel_ad(Lambda&& lambda,
                                                                       const koblab::Vec& x) {
    const int n = static_cast<int>(x.size());
    std::vector<Dual> xd(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xd[static_cast<std::size_t>(i)] = Dual::var(x[i], i);
    const Dual lam = lambda(xd);
    // g = e^{2 phi} delta with phi = log(lambda)/2, so d_i phi = d_i lam / (2 lam)
    std::vector<double> dphi(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) dphi[static_cast<std::size_t>(i)] = lam.d[i] / (2.0 * lam.v);
    std::vector<std::vector<std::vector<double>>> gamma(
        static_cast<std::size_t>(n),
        std::vector<std::vector<double>>(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n), 0.0)));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = 0.0;
                if (k == i) v += dphi[static_cast<std::size_t>(j)];
                if (k == j) v += dphi[static_cast<std::size_t>(i)];
                if (i == j) v -= dphi[static_cast<std::size_t>(k)];
                gamma[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]
                     [static_cast<std::size_t>(j)] = v;
            }
    return gamma;
}

// Tension of a smooth map into a conformal 2d metric, evaluated symbolically:
// tau^k = Lap u^k + sum_ij Gamma^k_ij (ux^i ux^j + uy^i uy^j) with the
// conformal Christoffel formula. Inputs are exact derivatives of u.
inline koblab::Vec conformal_tension(const std::vector<double>& dphi, const koblab::Vec& lap_u,
                                     const koblab::Vec& ux, const koblab::Vec& uy) {
    const int n = static_cast<int>(lap_u.size());
    koblab::Vec tau(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        double quad = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double gam = 0.0;
                if (k == i) gam += dphi[static_cast<std::size_t>(j)];
                if (k == j) gam += dphi[static_cast<std::size_t>(i)];
                if (i == j) gam -= dphi[static_cast<std::size_t>(k)];
                quad += gam * (ux[i] * ux[j] + uy[i] * uy[j]);
            }
        tau[static_cast<std::size_t>(k)] = lap_u[static_cast<std::size_t>(k)] + quad;
    }
    return tau;
}

// Normal-coordinate form of the curvature -1 plane: dr^2 + sinh^2(r) dtheta^2
// written in Cartesian normal coordinates.
inline koblab::Mat hyperbolic_normal_metric(const koblab::Vec& x) {
    const int n = static_cast<int>(x.size());
    const double r = koblab::norm2(x);
    koblab::Mat g = koblab::Mat::identity(n);
    if (r < 1e-12) return g;
    const double tang = std::sinh(r) / r;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double radial = x[i] * x[j] / (r * r);
            g(i, j) = radial + (tang * tang) * ((i == j ? 1.0 : 0.0) - radial);
        }
    return g;
}

// exact hyperbolic (curvature -4) distance on the unit disc model
inline double poincare_m4_distance(double ax, double ay, double bx, double by) {
    const double num = std::hypot(ax - bx, ay - by);
    const double den = std::hypot(1.0 - (ax * bx + ay * by), ax * by - ay * bx);
    const double d = num / den;
    return 0.5 * std::log((1.0 + d) / (1.0 - d));
}

} // namespace oracles

#endif
