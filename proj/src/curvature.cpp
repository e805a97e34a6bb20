#include "koblab/curvature.hpp"

#include <cmath>
#include <limits>

#include "koblab/errors.hpp"

namespace koblab {

void ChristoffelWorkspace::resize(int dim) {
    if (n == dim) return;
    n = dim;
    const std::size_t nn = static_cast<std::size_t>(dim) * dim;
    g.assign(nn, 0.0);
    dg.assign(nn * dim, 0.0);
    ginv.assign(nn, 0.0);
    gamma.assign(nn * dim, 0.0);
    xwrap.assign(static_cast<std::size_t>(dim), 0.0);
    lu.assign(nn, 0.0);
    piv.assign(static_cast<std::size_t>(dim), 0);
}

namespace {

// In-place inverse via Gauss-Jordan with partial pivoting on small n.
bool invert_small(int n, const double* a, double* inv, double* lu, int* piv) {
    for (int i = 0; i < n * n; ++i) lu[i] = a[i];
    for (int i = 0; i < n * n; ++i) inv[i] = 0.0;
    for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int c = 0; c < n; ++c) {
        int best = c;
        double mag = std::fabs(lu[c * n + c]);
        for (int r = c + 1; r < n; ++r) {
            const double m = std::fabs(lu[r * n + c]);
            if (m > mag) { mag = m; best = r; }
        }
        if (mag < 1e-300) return false;
        if (best != c)
            for (int j = 0; j < n; ++j) {
                std::swap(lu[c * n + j], lu[best * n + j]);
                std::swap(inv[c * n + j], inv[best * n + j]);
            }
        const double d = 1.0 / lu[c * n + c];
        for (int j = 0; j < n; ++j) {
            lu[c * n + j] *= d;
            inv[c * n + j] *= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = lu[r * n + c];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                lu[r * n + j] -= f * lu[c * n + j];
                inv[r * n + j] -= f * inv[c * n + j];
            }
        }
    }
    return true;
}

void eval_g_raw(const ChartedMetric& m, const double* x, double* out) {
    if (m.raw_g) {
        m.raw_g(x, out);
        return;
    }
    Vec xv(x, x + m.dim);
    const Mat gx = m.g(xv);
    for (int i = 0; i < m.dim * m.dim; ++i) out[i] = gx.a[static_cast<std::size_t>(i)];
}

void eval_dg_raw(const ChartedMetric& m, const double* x, double* out) {
    const int n = m.dim;
    if (m.raw_dg) {
        m.raw_dg(x, out);
        return;
    }
    if (m.dg) {
        Vec xv(x, x + n);
        const std::vector<Mat> d = (*m.dg)(xv);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n * n; ++i) out[k * n * n + i] = d[k].a[static_cast<std::size_t>(i)];
        return;
    }
    // central differences of g
    std::vector<double> xp(x, x + n), gp(static_cast<std::size_t>(n) * n),
        gm(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k) {
        xp[k] = x[k] + kFdStep;
        eval_g_raw(m, xp.data(), gp.data());
        xp[k] = x[k] - kFdStep;
        eval_g_raw(m, xp.data(), gm.data());
        xp[k] = x[k];
        for (int i = 0; i < n * n; ++i) out[k * n * n + i] = (gp[i] - gm[i]) / (2.0 * kFdStep);
    }
}

} // namespace

void christoffel_raw(const ChartedMetric& m, const double* x, ChristoffelWorkspace& ws) {
    const int n = m.dim;
    ws.resize(n);
    const double* xq = x;
    if (m.has_periodicity()) {
        Vec xv(x, x + n);
        xv = m.wrap(xv);
        for (int i = 0; i < n; ++i) ws.xwrap[static_cast<std::size_t>(i)] = xv[i];
        xq = ws.xwrap.data();
    }
    eval_g_raw(m, xq, ws.g.data());
    eval_dg_raw(m, xq, ws.dg.data());
    if (!invert_small(n, ws.g.data(), ws.ginv.data(), ws.lu.data(), ws.piv.data()))
        throw SingularMetric(m.name + ": metric not invertible at sample point");
    // Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) {
                    const double term = ws.dg[(i * n + j) * n + l] + ws.dg[(j * n + i) * n + l] -
                                        ws.dg[(l * n + i) * n + j];
                    s += ws.ginv[k * n + l] * term;
                }
                const double val = 0.5 * s;
                ws.gamma[(static_cast<std::size_t>(k) * n + i) * n + j] = val;
                ws.gamma[(static_cast<std::size_t>(k) * n + j) * n + i] = val;
            }
}

ChristoffelTable christoffel(const ChartedMetric& m, const Vec& x) {
    if (!m.contains(x)) throw OutOfChart(m.name + ": christoffel outside chart");
    ChristoffelWorkspace ws;
    christoffel_raw(m, x.data(), ws);
    ChristoffelTable t(m.dim);
    t.c = ws.gamma;
    return t;
}

std::vector<ChristoffelTable> christoffel_jacobian(const ChartedMetric& m, const Vec& x) {
    const int n = m.dim;
    if (!m.contains(x)) throw OutOfChart(m.name + ": christoffel_jacobian outside chart");
    ChristoffelWorkspace ws;
    std::vector<ChristoffelTable> out(static_cast<std::size_t>(n), ChristoffelTable(n));
    Vec xs = x;
    const std::size_t sz = static_cast<std::size_t>(n) * n * n;
    std::vector<double> gp(sz), gm(sz), coarse(sz);
    for (int d = 0; d < n; ++d) {
        for (int pass = 0; pass < 2; ++pass) {
            const double h = pass == 0 ? kFdStep2 : kFdStep2 / 2.0;
            xs[d] = x[d] + h;
            christoffel_raw(m, xs.data(), ws);
            gp = ws.gamma;
            xs[d] = x[d] - h;
            christoffel_raw(m, xs.data(), ws);
            gm = ws.gamma;
            xs[d] = x[d];
            if (pass == 0) {
                for (std::size_t i = 0; i < sz; ++i) coarse[i] = (gp[i] - gm[i]) / (2.0 * h);
            } else {
                // Richardson: (4 D(h/2) - D(h)) / 3
                for (std::size_t i = 0; i < sz; ++i) {
                    const double fine = (gp[i] - gm[i]) / (2.0 * h);
                    out[static_cast<std::size_t>(d)].c[i] = (4.0 * fine - coarse[i]) / 3.0;
                }
            }
        }
    }
    return out;
}

RiemannTable riemann_lowered(const ChartedMetric& m, const Vec& x) {
    const int n = m.dim;
    const ChristoffelTable gam = christoffel(m, x);
    const std::vector<ChristoffelTable> dgam = christoffel_jacobian(m, x);
    const Mat gx = m.metric_at(x);
    RiemannTable out(n);
    // curv(i,j,k,m) = coefficient of e_m in R(e_i, e_j) e_k
    //              = d_i Gamma^m_jk - d_j Gamma^m_ik
    //                + Gamma^l_jk Gamma^m_il - Gamma^l_ik Gamma^m_jl
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int mm = 0; mm < n; ++mm) {
                    double c = dgam[static_cast<std::size_t>(i)].at(mm, j, k) -
                               dgam[static_cast<std::size_t>(j)].at(mm, i, k);
                    for (int l = 0; l < n; ++l)
                        c += gam.at(l, j, k) * gam.at(mm, i, l) - gam.at(l, i, k) * gam.at(mm, j, l);
                    // lower with g: R_ijkl = g_{m l} curv(i,j,k,m)
                    for (int l = 0; l < n; ++l) out.at(i, j, k, l) += gx(mm, l) * c;
                }
    return out;
}

double CurvatureReport::sectional(const Vec& v, const Vec& w) const {
    const int n = metric.n;
    const double vv = inner(metric, v, v);
    const double ww = inner(metric, w, w);
    const double vw = inner(metric, v, w);
    const double denom = vv * ww - vw * vw;
    if (!(denom > 1e-10 * vv * ww))
        throw DegeneratePlane("sectional curvature of a degenerate 2-plane");
    double num = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (v[i] == 0.0 && w[j] == 0.0) continue;
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double r = riemann.at(i, j, k, l);
                    if (r != 0.0) num += r * v[i] * w[j] * w[k] * v[l];
                }
        }
    return num / denom;
}

CurvatureReport curvature_report(const ChartedMetric& m, const Vec& x) {
    CurvatureReport rep;
    rep.point = x;
    rep.metric = m.metric_at(x);
    rep.christoffel = christoffel(m, x);
    rep.riemann = riemann_lowered(m, x);
    return rep;
}

double sectional_curvature(const ChartedMetric& m, const Vec& x, const Vec& v, const Vec& w) {
    return curvature_report(m, x).sectional(v, w);
}

CurvatureBounds curvature_bounds_scan(const ChartedMetric& m, int sample_count, unsigned rng_seed,
                                      double margin) {
    if (sample_count < 1) throw PreconditionFailed("curvature scan needs sample_count >= 1");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CurvatureBounds b;
    b.k_min = std::numeric_limits<double>::infinity();
    b.k_max = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < sample_count; ++s) {
        double k = 0.0;
        Vec where;
        bool got = false;
        for (int attempt = 0; attempt < 16 && !got; ++attempt) {
            const Vec x = sample_point(m, rng, margin);
            Vec v(static_cast<std::size_t>(m.dim)), w(static_cast<std::size_t>(m.dim));
            for (int i = 0; i < m.dim; ++i) {
                v[i] = gauss(rng);
                w[i] = gauss(rng);
            }
            try {
                k = sectional_curvature(m, x, v, w);
                where = x;
                got = true;
            } catch (const DegeneratePlane&) {
                // resample
            }
        }
        if (!got) throw DegeneratePlane("curvature scan: retries exhausted");
        b.k_min = std::min(b.k_min, k);
        b.k_max = std::max(b.k_max, k);
        b.records.push_back({where, k});
        ++b.samples;
    }
    return b;
}

} // namespace koblab
