#include "koblab/metric.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "koblab/errors.hpp"
#include "koblab/expression.hpp"

namespace koblab {

Domain Domain::box(Vec center, Vec halfwidth) {
    Domain d;
    d.kind = Kind::Box;
    d.center = std::move(center);
    d.halfwidth = std::move(halfwidth);
    return d;
}

Domain Domain::ball(Vec center, double radius) {
    Domain d;
    d.kind = Kind::Ball;
    d.center = std::move(center);
    d.radius = radius;
    return d;
}

bool Domain::contains(const Vec& x, const Vec& periodicity) const {
    return boundary_margin(x, periodicity) > 0.0;
}

double Domain::boundary_margin(const Vec& x, const Vec& periodicity) const {
    const int n = dim();
    if (kind == Kind::Box) {
        double margin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!periodicity.empty() && periodicity[i] > 0.0) continue;
            margin = std::min(margin, halfwidth[i] - std::fabs(x[i] - center[i]));
        }
        return margin;
    }
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - center[i];
        r2 += d * d;
    }
    return radius - std::sqrt(r2);
}

Domain Domain::shrunk(double factor) const { return scaled(1.0 - factor); }

Domain Domain::scaled(double factor) const {
    Domain d = *this;
    if (kind == Kind::Box) {
        for (double& h : d.halfwidth) h *= factor;
    } else {
        d.radius *= factor;
    }
    return d;
}

bool ChartedMetric::has_periodicity() const {
    for (double p : periodicity)
        if (p > 0.0) return true;
    return false;
}

Vec ChartedMetric::wrap(const Vec& x) const {
    if (!has_periodicity()) return x;
    Vec y = x;
    for (int i = 0; i < dim; ++i) {
        const double p = periodicity[i];
        if (p > 0.0) {
            const double lo = domain.center[i] - p / 2.0;
            y[i] = lo + std::fmod(std::fmod(y[i] - lo, p) + p, p);
        }
    }
    return y;
}

Vec ChartedMetric::delta(const Vec& x, const Vec& y) const {
    Vec d(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        double di = x[i] - y[i];
        if (!periodicity.empty() && periodicity[i] > 0.0) {
            const double p = periodicity[i];
            di = std::remainder(di, p);
        }
        d[i] = di;
    }
    return d;
}

double ChartedMetric::chart_dist(const Vec& x, const Vec& y) const { return norm2(delta(x, y)); }

bool ChartedMetric::contains_ptr(const double* x) const {
    const int n = dim;
    if (domain.kind == Domain::Kind::Box) {
        for (int i = 0; i < n; ++i) {
            if (!periodicity.empty() && periodicity[i] > 0.0) continue;
            if (std::fabs(x[i] - domain.center[i]) >= domain.halfwidth[i]) return false;
        }
        return true;
    }
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - domain.center[i];
        r2 += d * d;
    }
    return r2 < domain.radius * domain.radius;
}

void metric_raw(const ChartedMetric& m, const double* x, double* out) {
    const int n = m.dim;
    if (m.has_periodicity()) {
        if (n > 16) throw Error("metric_raw: periodic charts limited to dim 16");
        double xw[16];
        for (int i = 0; i < n; ++i) {
            double xi = x[i];
            const double p = m.periodicity[i];
            if (p > 0.0) {
                const double lo = m.domain.center[i] - p / 2.0;
                xi = lo + std::fmod(std::fmod(xi - lo, p) + p, p);
            }
            xw[i] = xi;
        }
        if (m.raw_g) {
            m.raw_g(xw, out);
        } else {
            const Mat gx = m.g(Vec(xw, xw + n));
            for (int i = 0; i < n * n; ++i) out[i] = gx.a[static_cast<std::size_t>(i)];
        }
        return;
    }
    if (m.raw_g) {
        m.raw_g(x, out);
        return;
    }
    const Mat gx = m.g(Vec(x, x + n));
    for (int i = 0; i < n * n; ++i) out[i] = gx.a[static_cast<std::size_t>(i)];
}

Mat ChartedMetric::metric_at(const Vec& x) const {
    if (!contains(x)) throw OutOfChart(name + ": point outside chart domain");
    return g(wrap(x));
}

std::vector<Mat> ChartedMetric::metric_deriv_at(const Vec& x) const {
    if (!contains(x)) throw OutOfChart(name + ": point outside chart domain");
    const Vec xw = wrap(x);
    if (dg) return (*dg)(xw);
    std::vector<Mat> d(static_cast<std::size_t>(dim));
    Vec xp = xw, xm = xw;
    for (int k = 0; k < dim; ++k) {
        xp[k] = xw[k] + kFdStep;
        xm[k] = xw[k] - kFdStep;
        const Mat gp = g(xp);
        const Mat gm = g(xm);
        Mat dk(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) dk(i, j) = (gp(i, j) - gm(i, j)) / (2.0 * kFdStep);
        d[k] = std::move(dk);
        xp[k] = xw[k];
        xm[k] = xw[k];
    }
    return d;
}

Vec sample_point(const ChartedMetric& m, std::mt19937_64& rng, double margin) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const Domain d = m.domain.shrunk(margin);
    Vec x(static_cast<std::size_t>(m.dim));
    for (int attempt = 0; attempt < 10000; ++attempt) {
        if (d.kind == Domain::Kind::Box) {
            for (int i = 0; i < m.dim; ++i) x[i] = d.center[i] + d.halfwidth[i] * unit(rng);
            return x;
        }
        for (int i = 0; i < m.dim; ++i) x[i] = d.center[i] + d.radius * unit(rng);
        double r2 = 0.0;
        for (int i = 0; i < m.dim; ++i) {
            const double t = x[i] - d.center[i];
            r2 += t * t;
        }
        if (r2 <= d.radius * d.radius) return x;
    }
    throw Error("sample_point: rejection sampling failed");
}

MetricCheckReport check_metric(const ChartedMetric& m, int samples, unsigned seed, double tau_fd,
                               double margin) {
    MetricCheckReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        const Vec x = sample_point(m, rng, margin);
        const Mat gx = m.metric_at(x);
        for (int i = 0; i < m.dim; ++i)
            for (int j = i + 1; j < m.dim; ++j)
                rep.worst_asymmetry = std::max(rep.worst_asymmetry, std::fabs(gx(i, j) - gx(j, i)));
        const Vec ev = sym_eigenvalues(gx);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, ev.front());
        if (m.dg) {
            const std::vector<Mat> sup = (*m.dg)(m.wrap(x));
            Vec xp = x, xm = x;
            for (int k = 0; k < m.dim; ++k) {
                xp[k] = x[k] + kFdStep;
                xm[k] = x[k] - kFdStep;
                const Mat gp = m.g(m.wrap(xp));
                const Mat gm = m.g(m.wrap(xm));
                for (int i = 0; i < m.dim; ++i)
                    for (int j = 0; j < m.dim; ++j) {
                        const double fd = (gp(i, j) - gm(i, j)) / (2.0 * kFdStep);
                        const double rel =
                            std::fabs(fd - sup[k](i, j)) / std::max(1.0, std::fabs(sup[k](i, j)));
                        rep.worst_dg_error = std::max(rep.worst_dg_error, rel);
                    }
                xp[k] = x[k];
                xm[k] = x[k];
            }
        }
    }
    rep.symmetric = rep.worst_asymmetry == 0.0;
    rep.positive_definite = rep.min_eigenvalue > 0.0;
    rep.dg_consistent = rep.worst_dg_error <= tau_fd;
    return rep;
}

namespace {

// Conformal model g = lambda(x) * delta with analytic gradient of lambda.
ChartedMetric make_conformal(int n, std::string name, Domain domain,
                             std::function<double(const double*)> lambda,
                             std::function<void(const double*, double*)> grad_lambda) {
    ChartedMetric m;
    m.dim = n;
    m.domain = std::move(domain);
    m.name = std::move(name);
    m.raw_g = [n, lambda](const double* x, double* out) {
        const double l = lambda(x);
        for (int i = 0; i < n * n; ++i) out[i] = 0.0;
        for (int i = 0; i < n; ++i) out[i * n + i] = l;
    };
    m.raw_dg = [n, grad_lambda](const double* x, double* out) {
        double grad[16];
        grad_lambda(x, grad);
        for (int i = 0; i < n * n * n; ++i) out[i] = 0.0;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) out[(k * n + i) * n + i] = grad[k];
    };
    RawMetricFn rg = m.raw_g;
    RawDerivFn rdg = m.raw_dg;
    m.g = [n, rg](const Vec& x) {
        Mat out(n);
        rg(x.data(), out.a.data());
        return out;
    };
    m.dg = [n, rdg](const Vec& x) {
        std::vector<double> buf(static_cast<std::size_t>(n) * n * n);
        rdg(x.data(), buf.data());
        std::vector<Mat> d(static_cast<std::size_t>(n), Mat(n));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n * n; ++i) d[k].a[static_cast<std::size_t>(i)] = buf[k * n * n + i];
        return d;
    };
    return m;
}

} // namespace

ChartedMetric make_euclidean(int n, double halfwidth) {
    ChartedMetric m = make_conformal(
        n, "euclidean", Domain::box(Vec(static_cast<std::size_t>(n), 0.0),
                                    Vec(static_cast<std::size_t>(n), halfwidth)),
        [](const double*) { return 1.0; },
        [n](const double*, double* grad) {
            for (int k = 0; k < n; ++k) grad[k] = 0.0;
        });
    return m;
}

ChartedMetric make_poincare_disc() {
    const int n = 2;
    return make_conformal(
        n, "poincare_disc", Domain::ball(Vec(2, 0.0), 1.0),
        [](const double* x) {
            const double s = 1.0 - (x[0] * x[0] + x[1] * x[1]);
            return 1.0 / (s * s);
        },
        [](const double* x, double* grad) {
            const double s = 1.0 - (x[0] * x[0] + x[1] * x[1]);
            const double f = 4.0 / (s * s * s);
            grad[0] = f * x[0];
            grad[1] = f * x[1];
        });
}

ChartedMetric make_hyperbolic_ball(int n) {
    return make_conformal(
        n, "hyperbolic_ball", Domain::ball(Vec(static_cast<std::size_t>(n), 0.0), 1.0),
        [n](const double* x) {
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) r2 += x[i] * x[i];
            const double s = 1.0 - r2;
            return 4.0 / (s * s);
        },
        [n](const double* x, double* grad) {
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) r2 += x[i] * x[i];
            const double s = 1.0 - r2;
            const double f = 16.0 / (s * s * s);
            for (int k = 0; k < n; ++k) grad[k] = f * x[k];
        });
}

ChartedMetric make_flat_torus(const Vec& periods) {
    const int n = static_cast<int>(periods.size());
    Vec halfwidth(static_cast<std::size_t>(n));
    Vec center(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        halfwidth[i] = periods[i] / 2.0;
        center[i] = 0.0;
    }
    ChartedMetric m = make_conformal(
        n, "flat_torus", Domain::box(center, halfwidth), [](const double*) { return 1.0; },
        [n](const double*, double* grad) {
            for (int k = 0; k < n; ++k) grad[k] = 0.0;
        });
    m.periodicity = periods;
    return m;
}

ChartedMetric make_warped_product(const std::string& f_expr, double r0, double r1) {
    const Expr f = Expr::parse(f_expr, 1);
    const Expr df = f.derivative(0);
    ChartedMetric m;
    const int n = 2;
    m.dim = n;
    m.name = "warped_product";
    m.domain = Domain::box({(r0 + r1) / 2.0, 3.14159265358979323846},
                           {(r1 - r0) / 2.0, 3.14159265358979323846});
    m.periodicity = {0.0, 2.0 * 3.14159265358979323846};
    m.raw_g = [f](const double* x, double* out) {
        const double fr = f.eval({x[0]});
        out[0] = 1.0;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = fr * fr;
    };
    m.raw_dg = [f, df](const double* x, double* out) {
        const double fr = f.eval({x[0]});
        const double dfr = df.eval({x[0]});
        for (int i = 0; i < 8; ++i) out[i] = 0.0;
        out[3] = 2.0 * fr * dfr; // d_r g_thetatheta
    };
    RawMetricFn rg = m.raw_g;
    RawDerivFn rdg = m.raw_dg;
    m.g = [rg](const Vec& x) {
        Mat out(2);
        rg(x.data(), out.a.data());
        return out;
    };
    m.dg = [rdg](const Vec& x) {
        double buf[8];
        rdg(x.data(), buf);
        std::vector<Mat> d(2, Mat(2));
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 4; ++i) d[k].a[static_cast<std::size_t>(i)] = buf[k * 4 + i];
        return d;
    };
    return m;
}

ChartedMetric make_expression_metric(int n, const std::vector<std::vector<std::string>>& entries,
                                     Domain domain, Vec periodicity) {
    if (static_cast<int>(entries.size()) != n)
        throw SpecParseError("expression metric needs an n x n entry matrix");
    auto exprs = std::make_shared<std::vector<Expr>>();
    auto dexprs = std::make_shared<std::vector<Expr>>();
    exprs->reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(entries[i].size()) != n)
            throw SpecParseError("expression metric needs an n x n entry matrix");
        for (int j = 0; j < n; ++j) {
            const std::string& text = entries[i][j].empty() ? "0" : entries[i][j];
            exprs->push_back(Expr::parse(text, n));
        }
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n * n; ++i)
            dexprs->push_back((*exprs)[static_cast<std::size_t>(i)].derivative(k));

    ChartedMetric m;
    m.dim = n;
    m.domain = std::move(domain);
    m.periodicity = std::move(periodicity);
    m.name = "expression";
    m.raw_g = [n, exprs](const double* x, double* out) {
        Vec xv(x, x + n);
        for (int i = 0; i < n * n; ++i) out[i] = (*exprs)[static_cast<std::size_t>(i)].eval(xv);
    };
    m.raw_dg = [n, dexprs](const double* x, double* out) {
        Vec xv(x, x + n);
        for (int i = 0; i < n * n * n; ++i) out[i] = (*dexprs)[static_cast<std::size_t>(i)].eval(xv);
    };
    RawMetricFn rg = m.raw_g;
    RawDerivFn rdg = m.raw_dg;
    m.g = [n, rg](const Vec& x) {
        Mat out(n);
        rg(x.data(), out.a.data());
        return out;
    };
    m.dg = [n, rdg](const Vec& x) {
        std::vector<double> buf(static_cast<std::size_t>(n) * n * n);
        rdg(x.data(), buf.data());
        std::vector<Mat> d(static_cast<std::size_t>(n), Mat(n));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n * n; ++i) d[k].a[static_cast<std::size_t>(i)] = buf[k * n * n + i];
        return d;
    };
    return m;
}

ChartedMetric restrict_domain(const ChartedMetric& m, const Domain& smaller) {
    ChartedMetric r = m;
    r.domain = smaller;
    r.name = m.name + "_restricted";
    return r;
}

} // namespace koblab
