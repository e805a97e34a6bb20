#include "koblab/geodesic.hpp"

#include <cmath>

#include "koblab/errors.hpp"

namespace koblab {

namespace {

struct GeodesicIntegrator {
    const ChartedMetric& m;
    const int n;
    ChristoffelWorkspace ws;
    std::vector<double> acc, k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v, xs, vs;

    explicit GeodesicIntegrator(const ChartedMetric& metric)
        : m(metric), n(metric.dim) {
        const std::size_t sn = static_cast<std::size_t>(n);
        acc.assign(sn, 0.0);
        k1x.assign(sn, 0.0); k1v.assign(sn, 0.0);
        k2x.assign(sn, 0.0); k2v.assign(sn, 0.0);
        k3x.assign(sn, 0.0); k3v.assign(sn, 0.0);
        k4x.assign(sn, 0.0); k4v.assign(sn, 0.0);
        xs.assign(sn, 0.0); vs.assign(sn, 0.0);
    }

    // acc^k = -Gamma^k_ij v^i v^j; throws OutOfChart at stage points outside.
    void acceleration(const double* x, const double* v, double* out) {
        Vec xv(x, x + n);
        if (!m.contains(xv)) throw OutOfChart(m.name + ": geodesic stage left chart");
        christoffel_raw(m, x, ws);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            const double* gk = ws.gamma.data() + static_cast<std::size_t>(k) * n * n;
            for (int i = 0; i < n; ++i) {
                const double vi = v[i];
                if (vi == 0.0) continue;
                for (int j = 0; j < n; ++j) s += gk[i * n + j] * vi * v[j];
            }
            out[k] = -s;
        }
    }

    std::vector<double> comp_x, comp_v; // Kahan compensation across steps

    void reset_compensation() {
        comp_x.assign(static_cast<std::size_t>(n), 0.0);
        comp_v.assign(static_cast<std::size_t>(n), 0.0);
    }

    // increments dx, dv of one RK4 step; the caller accumulates
    void rk4_step(const double* x, const double* v, double dt, double* dx, double* dv) {
        acceleration(x, v, k1v.data());
        for (int i = 0; i < n; ++i) k1x[i] = v[i];
        for (int i = 0; i < n; ++i) { xs[i] = x[i] + 0.5 * dt * k1x[i]; vs[i] = v[i] + 0.5 * dt * k1v[i]; }
        acceleration(xs.data(), vs.data(), k2v.data());
        for (int i = 0; i < n; ++i) k2x[i] = vs[i];
        for (int i = 0; i < n; ++i) { xs[i] = x[i] + 0.5 * dt * k2x[i]; vs[i] = v[i] + 0.5 * dt * k2v[i]; }
        acceleration(xs.data(), vs.data(), k3v.data());
        for (int i = 0; i < n; ++i) k3x[i] = vs[i];
        for (int i = 0; i < n; ++i) { xs[i] = x[i] + dt * k3x[i]; vs[i] = v[i] + dt * k3v[i]; }
        acceleration(xs.data(), vs.data(), k4v.data());
        for (int i = 0; i < n; ++i) k4x[i] = vs[i];
        for (int i = 0; i < n; ++i) {
            dx[i] = dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            dv[i] = dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }

    // y += d with compensated summation; keeps flat endpoints bit-clean
    static void kahan_add(double& y, double d, double& comp) {
        const double adj = d - comp;
        const double t = y + adj;
        comp = (t - y) - adj;
        y = t;
    }

    // Advances by dt, recursively halving when a stage leaves the chart.
    void advance(double* x, double* v, double dt, int depth) {
        std::vector<double> x0(x, x + n), v0(v, v + n);
        try {
            std::vector<double> dx(static_cast<std::size_t>(n)), dv(static_cast<std::size_t>(n));
            rk4_step(x, v, dt, dx.data(), dv.data());
            for (int i = 0; i < n; ++i) {
                kahan_add(x[i], dx[static_cast<std::size_t>(i)], comp_x[static_cast<std::size_t>(i)]);
                kahan_add(v[i], dv[static_cast<std::size_t>(i)], comp_v[static_cast<std::size_t>(i)]);
            }
            for (int i = 0; i < n; ++i)
                if (!std::isfinite(x[i]) || !std::isfinite(v[i]))
                    throw ReducedStepExhausted(m.name + ": non-finite geodesic state");
            return;
        } catch (const OutOfChart&) {
            if (depth >= 20) throw LeftChart(m.name + ": geodesic left the chart domain");
            for (int i = 0; i < n; ++i) { x[i] = x0[i]; v[i] = v0[i]; }
            advance(x, v, dt / 2.0, depth + 1);
            advance(x, v, dt / 2.0, depth + 1);
        }
    }
};

} // namespace

GeodesicPath geodesic_path(const ChartedMetric& m, const Vec& p, const Vec& v, int steps) {
    if (!m.contains(p)) throw OutOfChart(m.name + ": geodesic base point outside chart");
    GeodesicIntegrator gi(m);
    gi.reset_compensation();
    Vec x = p, vel = v;
    GeodesicPath path;
    path.points.push_back(x);
    path.velocities.push_back(vel);
    const double dt = 1.0 / steps;
    for (int s = 0; s < steps; ++s) {
        gi.advance(x.data(), vel.data(), dt, 0);
        path.points.push_back(x);
        path.velocities.push_back(vel);
    }
    if (m.has_periodicity()) {
        for (Vec& q : path.points) q = m.wrap(q);
    }
    return path;
}

Vec geodesic_exp(const ChartedMetric& m, const Vec& p, const Vec& v, int steps) {
    if (!m.contains(p)) throw OutOfChart(m.name + ": geodesic base point outside chart");
    GeodesicIntegrator gi(m);
    gi.reset_compensation();
    Vec x = p, vel = v;
    const double dt = 1.0 / steps;
    for (int s = 0; s < steps; ++s) gi.advance(x.data(), vel.data(), dt, 0);
    return m.wrap(x);
}

Mat exp_differential(const ChartedMetric& m, const Vec& p, const Vec& x, int steps) {
    const int n = m.dim;
    const double delta = 1e-3 * std::max(1.0, norm2(x));
    Mat jac(n);
    Vec xp = x, xm = x;
    // Richardson-extrapolated central differences of the exponential map
    std::vector<double> coarse(static_cast<std::size_t>(n)), fine(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            const double d = pass == 0 ? delta : delta / 2.0;
            xp[j] = x[j] + d;
            xm[j] = x[j] - d;
            const Vec ep = geodesic_exp(m, p, xp, steps);
            const Vec em = geodesic_exp(m, p, xm, steps);
            const Vec diff = m.delta(ep, em);
            std::vector<double>& out = pass == 0 ? coarse : fine;
            for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = diff[i] / (2.0 * d);
        }
        for (int i = 0; i < n; ++i)
            jac(i, j) = (4.0 * fine[static_cast<std::size_t>(i)] -
                         coarse[static_cast<std::size_t>(i)]) / 3.0;
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return jac;
}

ChartedMetric pullback_exp_metric(const ChartedMetric& m, const Vec& p, double radius, int steps) {
    if (!m.contains(p)) throw OutOfChart(m.name + ": pullback base point outside chart");
    const Mat gp = m.metric_at(p);
    const Vec ev = sym_eigenvalues(gp);
    const double coord_radius = radius / std::sqrt(ev.back());

    ChartedMetric hp;
    hp.dim = m.dim;
    hp.domain = Domain::ball(Vec(static_cast<std::size_t>(m.dim), 0.0), coord_radius);
    hp.name = m.name + "_exp_pullback";
    const ChartedMetric base = m; // value copy keeps the evaluator self-contained
    const Vec base_p = p;
    const int n = m.dim;
    hp.g = [base, base_p, n, steps](const Vec& x) {
        const Mat jac = exp_differential(base, base_p, x, steps);
        // rank check: smallest singular value of the differential
        const Mat jtj = mat_mul(transpose(jac), jac);
        const Vec sv = sym_eigenvalues(jtj);
        if (!(sv.front() > 1e-12))
            throw NotImmersion(base.name + ": differential of exp_p drops rank");
        const Vec q = geodesic_exp(base, base_p, x, steps);
        const Mat gq = base.metric_at(q);
        // h_p(x) = J^T g(exp_p x) J
        Mat tmp(n), out(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += gq(i, k) * jac(k, j);
                tmp(i, j) = s;
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += jac(k, i) * tmp(k, j);
                out(i, j) = s;
            }
        // enforce exact symmetry of the assembled form
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double v = 0.5 * (out(i, j) + out(j, i));
                out(i, j) = v;
                out(j, i) = v;
            }
        return out;
    };
    // immersion spot checks: origin plus a ring at the domain boundary
    hp.g(Vec(static_cast<std::size_t>(n), 0.0));
    for (int axis = 0; axis < n; ++axis) {
        Vec x(static_cast<std::size_t>(n), 0.0);
        x[axis] = 0.9 * coord_radius;
        hp.g(x);
        x[axis] = -0.9 * coord_radius;
        hp.g(x);
    }
    return hp;
}

ChartedMetric rescaled_metric(const ChartedMetric& hp, double t) {
    if (!(t > 0.0)) throw NonpositiveScale("rescaled_metric needs t > 0");
    ChartedMetric ht;
    ht.dim = hp.dim;
    ht.domain = hp.domain.scaled(1.0 / t);
    ht.name = hp.name + "_rescaled";
    ht.periodicity = {};
    const MetricFn base_g = hp.g;
    ht.g = [base_g, t](const Vec& x) { return base_g(t * x); };
    if (hp.dg) {
        const MetricDerivFn base_dg = *hp.dg;
        ht.dg = [base_dg, t](const Vec& x) {
            std::vector<Mat> d = base_dg(t * x);
            for (Mat& mk : d)
                for (double& v : mk.a) v *= t;
            return d;
        };
    }
    if (hp.raw_g) {
        const RawMetricFn rg = hp.raw_g;
        const int n = hp.dim;
        ht.raw_g = [rg, t, n](const double* x, double* out) {
            std::vector<double> xs(x, x + n);
            for (double& v : xs) v *= t;
            rg(xs.data(), out);
        };
    }
    if (hp.raw_dg) {
        const RawDerivFn rdg = hp.raw_dg;
        const int n = hp.dim;
        ht.raw_dg = [rdg, t, n](const double* x, double* out) {
            std::vector<double> xs(x, x + n);
            for (double& v : xs) v *= t;
            rdg(xs.data(), out);
            for (int i = 0; i < n * n * n; ++i) out[i] *= t;
        };
    }
    return ht;
}

NormalFrameField::NormalFrameField(const ChartedMetric& m, const Vec& p, double radius, int steps)
    : dim_(m.dim), radius_(radius), gp_(m.metric_at(p)),
      frame_(orthonormal_frame(gp_)), hp_(pullback_exp_metric(m, p, radius, steps)) {}

Mat NormalFrameField::frame_components(const Vec& y) const {
    const int n = dim_;
    Vec x(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i) x[i] += y[a] * frame_[static_cast<std::size_t>(a)][i];
    const Mat h = hp_.g(x);
    Mat f(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            f(a, b) = inner(h, frame_[static_cast<std::size_t>(a)], frame_[static_cast<std::size_t>(b)]);
    return f;
}

namespace {

// 1D central stencils for derivative orders 0..3; offsets in lattice units.
struct Stencil {
    std::vector<int> offsets;
    std::vector<double> weights; // divided by spacing^order later
};

Stencil stencil_for_order(int order) {
    switch (order) {
        case 0: return {{0}, {1.0}};
        case 1: return {{-1, 1}, {-0.5, 0.5}};
        case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}};
        default: return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}};
    }
}

// Enumerate multi-indices with |mu| <= max_order.
void enumerate_multi(int dims, int max_order, std::vector<std::vector<int>>& out) {
    std::vector<int> mu(static_cast<std::size_t>(dims), 0);
    for (;;) {
        int total = 0;
        for (int v : mu) total += v;
        if (total <= max_order) out.push_back(mu);
        int pos = 0;
        while (pos < dims) {
            if (mu[pos] < max_order) {
                ++mu[pos];
                break;
            }
            mu[pos] = 0;
            ++pos;
        }
        if (pos == dims) break;
    }
}

struct LatticeTable {
    int dims = 0;
    int half = 0; // indices run -half..half per axis
    double spacing = 0.0;
    std::vector<Mat> values;
    std::vector<char> valid;

    int side() const { return 2 * half + 1; }
    std::size_t flat(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (int d = 0; d < dims; ++d) f = f * side() + static_cast<std::size_t>(idx[d] + half);
        return f;
    }
};

// Tabulates frame components of y -> F(scale * y) on the lattice covering
// the ball of the given radius.
LatticeTable tabulate(const NormalFrameField& field, double scale, double ball_radius,
                      double spacing) {
    LatticeTable t;
    t.dims = field.dim();
    t.half = static_cast<int>(std::floor(ball_radius / spacing + 1e-9));
    t.spacing = spacing;
    std::size_t count = 1;
    for (int d = 0; d < t.dims; ++d) count *= static_cast<std::size_t>(t.side());
    t.values.assign(count, Mat(t.dims));
    t.valid.assign(count, 0);
    std::vector<int> idx(static_cast<std::size_t>(t.dims), -t.half);
    for (;;) {
        double r2 = 0.0;
        for (int d = 0; d < t.dims; ++d) {
            const double c = idx[d] * spacing;
            r2 += c * c;
        }
        if (r2 <= ball_radius * ball_radius * (1.0 + 1e-12)) {
            Vec y(static_cast<std::size_t>(t.dims));
            for (int d = 0; d < t.dims; ++d) y[d] = scale * idx[d] * spacing;
            const std::size_t f = t.flat(idx);
            t.values[f] = field.frame_components(y);
            t.valid[f] = 1;
        }
        int pos = 0;
        while (pos < t.dims) {
            if (idx[pos] < t.half) {
                ++idx[pos];
                break;
            }
            idx[pos] = -t.half;
            ++pos;
        }
        if (pos == t.dims) break;
    }
    return t;
}

// Applies the product of per-axis stencils for multi-index mu centered at
// base; returns false if any needed lattice point is missing.
bool apply_stencil(const LatticeTable& t, const std::vector<int>& mu, const std::vector<int>& base,
                   Mat& out) {
    std::vector<Stencil> st;
    st.reserve(mu.size());
    for (int v : mu) st.push_back(stencil_for_order(v));
    out = Mat(t.dims);
    std::vector<std::size_t> cursor(mu.size(), 0);
    for (;;) {
        std::vector<int> idx = base;
        double w = 1.0;
        for (int d = 0; d < t.dims; ++d) {
            idx[d] += st[static_cast<std::size_t>(d)].offsets[cursor[static_cast<std::size_t>(d)]];
            w *= st[static_cast<std::size_t>(d)].weights[cursor[static_cast<std::size_t>(d)]];
            if (idx[d] < -t.half || idx[d] > t.half) return false;
        }
        const std::size_t f = t.flat(idx);
        if (!t.valid[f]) return false;
        for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += w * t.values[f].a[i];
        std::size_t pos = 0;
        while (pos < cursor.size()) {
            if (cursor[pos] + 1 < st[pos].offsets.size()) {
                ++cursor[pos];
                break;
            }
            cursor[pos] = 0;
            ++pos;
        }
        if (pos == cursor.size()) break;
    }
    int order = 0;
    for (int v : mu) order += v;
    const double denom = std::pow(t.spacing, order);
    for (double& v : out.a) v /= denom;
    return true;
}

// Sup of |d^mu (F - F(0))| over the lattice for all |mu| <= order, grouped
// by |mu|; table[q] is the sup over |mu| <= q.
std::vector<double> derivative_sups(const LatticeTable& t, const Mat& f0, int max_order) {
    std::vector<std::vector<int>> multis;
    enumerate_multi(t.dims, max_order, multis);
    std::vector<double> by_order(static_cast<std::size_t>(max_order) + 1, 0.0);
    std::vector<int> base(static_cast<std::size_t>(t.dims), -t.half);
    Mat d(t.dims);
    for (;;) {
        if (t.valid[t.flat(base)]) {
            for (const std::vector<int>& mu : multis) {
                int order = 0;
                for (int v : mu) order += v;
                if (!apply_stencil(t, mu, base, d)) continue;
                double mag = 0.0;
                if (order == 0) {
                    for (std::size_t i = 0; i < d.a.size(); ++i)
                        mag = std::max(mag, std::fabs(d.a[i] - f0.a[i]));
                } else {
                    for (double v : d.a) mag = std::max(mag, std::fabs(v));
                }
                by_order[static_cast<std::size_t>(order)] =
                    std::max(by_order[static_cast<std::size_t>(order)], mag);
            }
        }
        int pos = 0;
        while (pos < t.dims) {
            if (base[pos] < t.half) {
                ++base[pos];
                break;
            }
            base[pos] = -t.half;
            ++pos;
        }
        if (pos == t.dims) break;
    }
    // cumulative: A_q is a sup over all |mu| <= q
    std::vector<double> cum(by_order.size());
    double run = 0.0;
    for (std::size_t q = 0; q < by_order.size(); ++q) {
        run = std::max(run, by_order[q]);
        cum[q] = run;
    }
    return cum;
}

} // namespace

double ck_deviation(const NormalFrameField& field, double t, double ball_radius, int order,
                    double spacing) {
    const LatticeTable table = tabulate(field, t, ball_radius, spacing);
    const Mat f0 = field.frame_components(Vec(static_cast<std::size_t>(field.dim()), 0.0));
    const std::vector<double> sups = derivative_sups(table, f0, order);
    return sups.back();
}

QuasiBoundedReport quasi_bounded_check(const ChartedMetric& m, const std::vector<Vec>& p_samples,
                                       double r0, int q_max, int steps) {
    if (q_max > 3) throw PreconditionFailed("quasi_bounded_check caps q at 3");
    QuasiBoundedReport rep;
    rep.r0 = r0;
    rep.q_max = q_max;
    rep.a_q.assign(static_cast<std::size_t>(q_max) + 1, 0.0);
    const double spacing = r0 / 4.0;
    for (const Vec& p : p_samples) {
        try {
            const NormalFrameField field(m, p, r0 * 1.25, steps);
            const LatticeTable table = tabulate(field, 1.0, r0, spacing);
            const Mat f0 = field.frame_components(Vec(static_cast<std::size_t>(m.dim), 0.0));
            const std::vector<double> sups = derivative_sups(table, f0, q_max);
            rep.sampled_points.push_back(p);
            rep.per_point.push_back(sups);
            for (std::size_t q = 0; q < sups.size(); ++q)
                rep.a_q[q] = std::max(rep.a_q[q], sups[q]);
        } catch (const NotImmersion&) {
            rep.immersion_failures.push_back(p);
        }
    }
    return rep;
}

} // namespace koblab
