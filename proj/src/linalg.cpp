#include "koblab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace koblab {

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat r(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < a.n; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

Vec mat_vec(const Mat& a, const Vec& v) {
    Vec r(static_cast<std::size_t>(a.n), 0.0);
    for (int i = 0; i < a.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.n; ++j) s += a(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

Mat transpose(const Mat& a) {
    Mat r(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) r(i, j) = a(j, i);
    return r;
}

namespace {

// LU decomposition with partial pivoting; returns false on singularity.
bool lu_factor(Mat& a, std::vector<int>& piv, int& sign) {
    const int n = a.n;
    piv.resize(n);
    sign = 1;
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int c = 0; c < n; ++c) {
        int best = c;
        double mag = std::fabs(a(c, c));
        for (int r = c + 1; r < n; ++r) {
            const double m = std::fabs(a(r, c));
            if (m > mag) { mag = m; best = r; }
        }
        if (mag < 1e-300) return false;
        if (best != c) {
            for (int j = 0; j < n; ++j) std::swap(a(c, j), a(best, j));
            std::swap(piv[c], piv[best]);
            sign = -sign;
        }
        const double inv = 1.0 / a(c, c);
        for (int r = c + 1; r < n; ++r) {
            const double f = a(r, c) * inv;
            a(r, c) = f;
            for (int j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
        }
    }
    return true;
}

Vec lu_solve(const Mat& lu, const std::vector<int>& piv, const Vec& b) {
    const int n = lu.n;
    Vec x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[i] = b[piv[i]];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= lu(i, j) * x[j];
        x[i] /= lu(i, i);
    }
    return x;
}

} // namespace

Mat inverse(const Mat& a) {
    Mat lu = a;
    std::vector<int> piv;
    int sign;
    if (!lu_factor(lu, piv, sign)) throw SingularMetric("matrix not invertible");
    const int n = a.n;
    Mat inv(n);
    Vec e(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        e[c] = 1.0;
        Vec col = lu_solve(lu, piv, e);
        e[c] = 0.0;
        for (int r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    return inv;
}

Vec solve(const Mat& a, const Vec& b) {
    Mat lu = a;
    std::vector<int> piv;
    int sign;
    if (!lu_factor(lu, piv, sign)) throw SingularMetric("matrix not invertible");
    return lu_solve(lu, piv, b);
}

double determinant(const Mat& a) {
    Mat lu = a;
    std::vector<int> piv;
    int sign;
    if (!lu_factor(lu, piv, sign)) return 0.0;
    double d = sign;
    for (int i = 0; i < a.n; ++i) d *= lu(i, i);
    return d;
}

Vec sym_eigenvalues(const Mat& a) {
    Mat m = a;
    const int n = m.n;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-28) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(m(p, q)) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    Vec ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

void orthonormalize_pair(const Mat& g, Vec& v, Vec& w, double tol) {
    const double nv = norm_g(g, v);
    if (!(nv > tol)) throw DegeneratePlane("zero first vector");
    v = (1.0 / nv) * v;
    const double c = inner(g, v, w);
    w = w - c * v;
    const double nw = norm_g(g, w);
    const double scale = norm_g(g, v);
    if (!(nw > tol * std::max(1.0, scale))) throw DegeneratePlane("colinear pair");
    w = (1.0 / nw) * w;
}

std::vector<Vec> orthonormal_frame(const Mat& g) {
    const int n = g.n;
    std::vector<Vec> frame;
    frame.reserve(n);
    for (int k = 0; k < n; ++k) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[k] = 1.0;
        for (const Vec& f : frame) e = e - inner(g, f, e) * f;
        const double ne = norm_g(g, e);
        if (!(ne > 1e-12)) throw SingularMetric("degenerate metric in frame construction");
        frame.push_back((1.0 / ne) * e);
    }
    return frame;
}

} // namespace koblab
