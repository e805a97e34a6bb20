#ifndef KOBLAB_LINALG_HPP
#define KOBLAB_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "koblab/errors.hpp"

namespace koblab {

using Vec = std::vector<double>;

// Dense square matrix, row major. Sizes stay small (chart dimension).
struct Mat {
    int n = 0;
    std::vector<double> a;

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec operator+(const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

inline Vec operator-(const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

inline Vec operator*(double s, const Vec& x) {
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = s * x[i];
    return r;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

// g(x)(v, w) for a metric matrix g.
inline double inner(const Mat& g, const Vec& v, const Vec& w) {
    double s = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) s += g(i, j) * v[i] * w[j];
    return s;
}

inline double norm_g(const Mat& g, const Vec& v) { return std::sqrt(inner(g, v, v)); }

Mat mat_mul(const Mat& a, const Mat& b);
Vec mat_vec(const Mat& a, const Vec& v);
Mat transpose(const Mat& a);

// Gaussian elimination with partial pivoting. Throws SingularMetric.
Mat inverse(const Mat& a);
Vec solve(const Mat& a, const Vec& b);
double determinant(const Mat& a);

// Eigenvalues of a symmetric matrix (Jacobi rotations), ascending order.
Vec sym_eigenvalues(const Mat& a);

// Gram-Schmidt of (v, w) against the inner product g. Throws DegeneratePlane
// when the pair is numerically colinear.
void orthonormalize_pair(const Mat& g, Vec& v, Vec& w, double tol = 1e-12);

// Full g-orthonormal frame starting from the coordinate basis.
std::vector<Vec> orthonormal_frame(const Mat& g);

} // namespace koblab

#endif
