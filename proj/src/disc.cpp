#include "koblab/disc.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "koblab/errors.hpp"

namespace koblab {

Vec DiscMap::value(int node) const {
    const int n = target.dim;
    Vec v(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) v[c] = values[static_cast<std::size_t>(node) * n + c];
    return v;
}

void DiscMap::set_value(int node, const Vec& v) {
    const int n = target.dim;
    for (int c = 0; c < n; ++c) values[static_cast<std::size_t>(node) * n + c] = v[c];
}

namespace {

// Shared buffers for the relaxation sweeps; one instance per solve.
struct DiscEngine {
    const DiscGrid& grid;
    const ChartedMetric& m;
    const int n;
    const double h;
    ChristoffelWorkspace ws;
    std::vector<double> gbuf, ux, uy;

    DiscEngine(const DiscGrid& g, const ChartedMetric& metric)
        : grid(g), m(metric), n(metric.dim), h(g.h) {
        gbuf.assign(static_cast<std::size_t>(n) * n, 0.0);
        ux.assign(static_cast<std::size_t>(n), 0.0);
        uy.assign(static_cast<std::size_t>(n), 0.0);
    }

    bool in_chart(const std::vector<double>& vals) const {
        const int total = grid.total();
        for (int node = 0; node < total; ++node)
            if (!m.contains_ptr(vals.data() + static_cast<std::size_t>(node) * n)) return false;
        return true;
    }

    // Central differences; boundary-shortened arms use the unequal-arm
    // 3-point formula (exact on quadratics).
    void gradients(const std::vector<double>& vals, int node) {
        const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
        const auto& arm = grid.arm[static_cast<std::size_t>(node)];
        const double* e = vals.data() + static_cast<std::size_t>(nb[0]) * n;
        const double* w = vals.data() + static_cast<std::size_t>(nb[1]) * n;
        const double* nn = vals.data() + static_cast<std::size_t>(nb[2]) * n;
        const double* s = vals.data() + static_cast<std::size_t>(nb[3]) * n;
        const double* c0 = vals.data() + static_cast<std::size_t>(node) * n;
        if (arm[0] == h && arm[1] == h) {
            const double inv2h = 1.0 / (2.0 * h);
            for (int c = 0; c < n; ++c) ux[c] = (e[c] - w[c]) * inv2h;
        } else {
            const double a = arm[0], b = arm[1];
            const double den = a * b * (a + b);
            for (int c = 0; c < n; ++c)
                ux[c] = (b * b * (e[c] - c0[c]) - a * a * (w[c] - c0[c])) / den;
        }
        if (arm[2] == h && arm[3] == h) {
            const double inv2h = 1.0 / (2.0 * h);
            for (int c = 0; c < n; ++c) uy[c] = (nn[c] - s[c]) * inv2h;
        } else {
            const double a = arm[2], b = arm[3];
            const double den = a * b * (a + b);
            for (int c = 0; c < n; ++c)
                uy[c] = (b * b * (nn[c] - c0[c]) - a * a * (s[c] - c0[c])) / den;
        }
    }

    double energy_of(const std::vector<double>& vals) {
        double total = 0.0;
        for (int node = 0; node < grid.num_interior; ++node) {
            gradients(vals, node);
            metric_raw(m, vals.data() + static_cast<std::size_t>(node) * n, gbuf.data());
            double density = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    density += gbuf[static_cast<std::size_t>(i) * n + j] *
                               (ux[i] * ux[j] + uy[i] * uy[j]);
            total += grid.weight[static_cast<std::size_t>(node)] * density;
        }
        return total;
    }

    // Edge-midpoint Dirichlet sum with weights h/arm. Its exact flat-metric
    // gradient is -h^2 times the arm-weighted 5-point tension, so it
    // decreases along the damped flow; the line search uses this one.
    double edge_energy_of(const std::vector<double>& vals) {
        double total = 0.0;
        std::vector<double>& mid = ux; // reuse buffers
        std::vector<double>& diff = uy;
        for (int node = 0; node < grid.num_interior; ++node) {
            const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
            const auto& arm = grid.arm[static_cast<std::size_t>(node)];
            const double* c0 = vals.data() + static_cast<std::size_t>(node) * n;
            for (int d = 0; d < 4; ++d) {
                const int other = nb[d];
                if (other < grid.num_interior && other < node) continue; // shared edge
                const double* c1 = vals.data() + static_cast<std::size_t>(other) * n;
                for (int c = 0; c < n; ++c) {
                    mid[c] = 0.5 * (c0[c] + c1[c]);
                    diff[c] = c1[c] - c0[c];
                }
                metric_raw(m, mid.data(), gbuf.data());
                double q = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        q += gbuf[static_cast<std::size_t>(i) * n + j] * diff[i] * diff[j];
                total += 0.5 * (h / arm[d]) * q;
            }
        }
        return total;
    }

    // Fills tau (interior * n) and returns sup |tau|.
    double tension_of(const std::vector<double>& vals, std::vector<double>& tau) {
        double sup = 0.0;
        const double invh = 1.0 / h;
        for (int node = 0; node < grid.num_interior; ++node) {
            const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
            const auto& arm = grid.arm[static_cast<std::size_t>(node)];
            const double* c0 = vals.data() + static_cast<std::size_t>(node) * n;
            gradients(vals, node);
            christoffel_raw(m, c0, ws);
            for (int k = 0; k < n; ++k) {
                double lap = 0.0;
                for (int d = 0; d < 4; ++d)
                    lap += (vals[static_cast<std::size_t>(nb[d]) * n + k] - c0[k]) / arm[d];
                lap *= invh;
                double quad = 0.0;
                const double* gk = ws.gamma.data() + static_cast<std::size_t>(k) * n * n;
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j)
                        quad += gk[i * n + j] * (ux[i] * ux[j] + uy[i] * uy[j]);
                }
                const double t = lap + quad;
                tau[static_cast<std::size_t>(node) * n + k] = t;
                const double a = std::fabs(t);
                if (a > sup) sup = a;
            }
        }
        return sup;
    }

    double defect_of(const std::vector<double>& vals, int* worst_node = nullptr,
                     bool allow_branch = false, double tau_c = 0.0,
                     std::vector<double>* phi = nullptr) {
        double worst = 0.0;
        if (worst_node) *worst_node = -1;
        if (phi) phi->assign(static_cast<std::size_t>(grid.num_interior), 0.0);
        for (int node = 0; node < grid.num_interior; ++node) {
            gradients(vals, node);
            metric_raw(m, vals.data() + static_cast<std::size_t>(node) * n, gbuf.data());
            double gxx = 0.0, gyy = 0.0, gxy = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double gij = gbuf[static_cast<std::size_t>(i) * n + j];
                    gxx += gij * ux[i] * ux[j];
                    gyy += gij * uy[i] * uy[j];
                    gxy += gij * ux[i] * uy[j];
                }
            const double nx = std::sqrt(std::max(0.0, gxx));
            const double ny = std::sqrt(std::max(0.0, gyy));
            const double defect =
                (std::fabs(gxy) + std::fabs(nx - ny)) / (gxx + gyy + 1e-14);
            if (phi) (*phi)[static_cast<std::size_t>(node)] = gxx;
            if (allow_branch && nx <= tau_c && ny <= tau_c) continue;
            if (defect > worst) {
                worst = defect;
                if (worst_node) *worst_node = node;
            }
        }
        return worst;
    }
};

} // namespace

double energy(const DiscMap& u) {
    DiscEngine eng(*u.grid, u.target);
    return eng.energy_of(u.values);
}

std::vector<double> tension_field(const DiscMap& u) {
    DiscEngine eng(*u.grid, u.target);
    std::vector<double> tau(static_cast<std::size_t>(u.grid->num_interior) * u.target.dim, 0.0);
    eng.tension_of(u.values, tau);
    return tau;
}

double tension_residual(const DiscMap& u) {
    DiscEngine eng(*u.grid, u.target);
    std::vector<double> tau(static_cast<std::size_t>(u.grid->num_interior) * u.target.dim, 0.0);
    return eng.tension_of(u.values, tau);
}

double conformality_defect(const DiscMap& u) {
    DiscEngine eng(*u.grid, u.target);
    return eng.defect_of(u.values);
}

WeaklyConformalResult weakly_conformal_check(const DiscMap& u, double tau_c) {
    DiscEngine eng(*u.grid, u.target);
    WeaklyConformalResult res;
    res.worst_defect = eng.defect_of(u.values, &res.worst_node, true, tau_c, &res.phi);
    res.pass = res.worst_defect <= tau_c;
    // phi is only meaningful where the defect is small
    return res;
}

std::pair<DiscMap, SolveReport> harmonic_relax(const DiscMap& seed,
                                               const std::vector<double>& boundary,
                                               const RelaxConfig& cfg) {
    const DiscGrid& grid = *seed.grid;
    const ChartedMetric& m = seed.target;
    const int n = m.dim;
    DiscMap u = seed;
    if (!boundary.empty()) {
        if (static_cast<int>(boundary.size()) != grid.num_boundary * n)
            throw PreconditionFailed("harmonic_relax: boundary table has the wrong size");
        for (int b = 0; b < grid.num_boundary; ++b)
            for (int c = 0; c < n; ++c)
                u.values[static_cast<std::size_t>(grid.num_interior + b) * n + c] =
                    boundary[static_cast<std::size_t>(b) * n + c];
    }

    DiscEngine eng(grid, m);
    if (!eng.in_chart(u.values)) throw LeftChart(m.name + ": relaxation seed leaves the chart");

    SolveReport rep;
    const std::size_t interior_sz = static_cast<std::size_t>(grid.num_interior) * n;
    std::vector<double> tau(interior_sz, 0.0);
    std::vector<double> trial(u.values.size());

    double e_cur = eng.edge_energy_of(u.values);
    double sup = eng.tension_of(u.values, tau);
    // stability cap for the linear part from the row sums of the stencil
    double row_max = 0.0;
    for (int node = 0; node < grid.num_interior; ++node) {
        double row = 0.0;
        for (int d = 0; d < 4; ++d) row += 1.0 / grid.arm[static_cast<std::size_t>(node)][d];
        row_max = std::max(row_max, 2.0 * row / grid.h);
    }
    const double lambda_cap = 0.95 * 2.0 / row_max;
    double lambda = cfg.lambda0 > 0.0 ? cfg.lambda0 : lambda_cap;
    lambda = std::min(lambda, lambda_cap);
    if (cfg.record_trace) rep.energy_trace.push_back(e_cur);

    std::vector<double> best = u.values;
    double best_sup = sup;

    const double lambda_safe = std::min(0.9 * grid.h * grid.h / 4.0, lambda_cap);
    int iter = 0;
    for (; iter < cfg.max_iter && sup > cfg.tau_h; ++iter) {
        int chart_halvings = 0;
        int energy_halvings = 0;
        for (;;) {
            trial = u.values;
            for (std::size_t i = 0; i < interior_sz; ++i) trial[i] += lambda * tau[i];
            if (!eng.in_chart(trial)) {
                if (++chart_halvings > 20)
                    throw LeftChart(m.name + ": relaxation iterate left the chart domain");
                rep.left_chart_recovered = true;
                lambda /= 2.0;
                continue;
            }
            if (rep.line_search_released) break;
            // roundoff slack: below the FP resolution of the energy the
            // comparison is vacuous and must not block the flow
            const double e_trial = eng.edge_energy_of(trial);
            if (e_trial <= e_cur + 1e-14 * std::fabs(e_cur)) {
                e_cur = e_trial;
                break;
            }
            if (++energy_halvings > 40) {
                // the energy quadrature cannot resolve the remaining
                // tension; keep the damped flow at the safe step
                rep.line_search_released = true;
                rep.release_iteration = iter;
                lambda = lambda_safe;
                continue;
            }
            lambda /= 2.0;
        }
        u.values.swap(trial);
        sup = eng.tension_of(u.values, tau);
        if (cfg.record_trace && !rep.line_search_released) rep.energy_trace.push_back(e_cur);
        if (sup < best_sup) {
            best_sup = sup;
            best = u.values;
        }
        if (!rep.line_search_released) {
            lambda = std::min(lambda * 1.2, lambda_cap);
            if (lambda < lambda_safe / 64.0) {
                // the energy can no longer resolve steps of a useful size
                rep.line_search_released = true;
                rep.release_iteration = iter;
                lambda = lambda_safe;
            }
        }
    }

    if (best_sup < sup) {
        u.values = best;
        sup = best_sup;
    }
    rep.iterations = iter;
    rep.energy = eng.energy_of(u.values);
    rep.tension_residual = sup;
    rep.converged = sup <= cfg.tau_h;
    rep.conformality_defect = eng.defect_of(u.values);
    return {std::move(u), rep};
}

std::pair<DiscMap, SolveReport> harmonic_relax(const DiscMap& seed, const RelaxConfig& cfg) {
    return harmonic_relax(seed, {}, cfg);
}

JetDiscResult jet_disc(const ChartedMetric& m, const Vec& p, const Vec& v_in, const Vec& w_in,
                       double r, const JetConfig& cfg) {
    if (!(r > 0.0)) throw PreconditionFailed("jet_disc needs r > 0");
    if (!m.contains(p)) throw OutOfChart(m.name + ": jet_disc base point outside chart");
    const Mat gp = m.metric_at(p);
    Vec v = v_in, w = w_in;
    orthonormalize_pair(gp, v, w); // throws DegeneratePlane on colinear input

    auto grid = make_disc_grid(cfg.resolution);
    const int n = m.dim;
    DiscMap seed;
    seed.grid = grid;
    seed.target = m;
    seed.values.assign(static_cast<std::size_t>(grid->total()) * n, 0.0);

    Vec arg(static_cast<std::size_t>(n));
    for (int node = 0; node < grid->total(); ++node) {
        const double zx = grid->x[static_cast<std::size_t>(node)];
        const double zy = grid->y[static_cast<std::size_t>(node)];
        for (int c = 0; c < n; ++c) arg[c] = r * (zx * v[c] + zy * w[c]);
        const double len = norm2(arg);
        const int steps = std::max(8, static_cast<int>(std::ceil(cfg.seed_steps * len)));
        const Vec q = len == 0.0 ? p : geodesic_exp(m, p, arg, steps);
        seed.set_value(node, q);
    }

    RelaxConfig rc;
    rc.tau_h = cfg.tau_h;
    rc.max_iter = cfg.max_iter;
    auto [disc, report] = harmonic_relax(seed, rc);

    // recenter so u(0) = p exactly (the drift is O(r^3)), re-relaxing when
    // the translation disturbs the residual
    for (int pass = 0; pass < 4; ++pass) {
        const Vec at_origin = disc.value(grid->origin);
        std::vector<double> shifted = disc.values;
        bool ok = true;
        for (int node = 0; node < grid->total() && ok; ++node) {
            for (int c = 0; c < n; ++c)
                shifted[static_cast<std::size_t>(node) * n + c] += p[c] - at_origin[c];
            if (!m.contains_ptr(shifted.data() + static_cast<std::size_t>(node) * n)) ok = false;
        }
        if (!ok) break;
        disc.values.swap(shifted);
        DiscEngine eng(*grid, m);
        std::vector<double> tau(static_cast<std::size_t>(grid->num_interior) * n, 0.0);
        report.tension_residual = eng.tension_of(disc.values, tau);
        report.energy = eng.energy_of(disc.values);
        report.conformality_defect = eng.defect_of(disc.values);
        report.converged = report.tension_residual <= cfg.tau_h;
        if (report.converged || pass == 3) break;
        RelaxConfig polish = rc;
        polish.max_iter = cfg.max_iter / 4;
        auto [redisc, rerep] = harmonic_relax(disc, polish);
        disc = std::move(redisc);
        report.iterations += rerep.iterations;
        report.tension_residual = rerep.tension_residual;
        report.energy = rerep.energy;
        report.conformality_defect = rerep.conformality_defect;
        report.converged = rerep.converged;
        report.line_search_released = report.line_search_released || rerep.line_search_released;
    }

    JetDiscResult res;
    res.report = report;

    const auto [oi, oj] = grid->node_to_lattice[static_cast<std::size_t>(grid->origin)];
    const int east = grid->node_at(oi + 1, oj);
    const int west = grid->node_at(oi - 1, oj);
    Vec jet(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        jet[c] = (disc.values[static_cast<std::size_t>(east) * n + c] -
                  disc.values[static_cast<std::size_t>(west) * n + c]) /
                 (2.0 * grid->h);
    res.jet = jet;
    res.jet_scale = inner(gp, jet, v);
    const Vec drift_vec = jet - r * v;
    res.jet_drift = norm_g(gp, drift_vec) / r;
    const double tau_jet = std::max(cfg.tau_c, cfg.jet_c * r * r);
    res.admissible = report.converged && report.conformality_defect <= cfg.tau_c &&
                     res.jet_drift <= tau_jet;
    res.disc = std::move(disc);
    if (res.jet_drift > tau_jet)
        throw JetDrift(m.name + ": jet drift " + std::to_string(res.jet_drift) +
                       " exceeds tolerance " + std::to_string(tau_jet));
    return res;
}

DiscMap make_disc_map(std::shared_ptr<const DiscGrid> grid, ChartedMetric target,
                      const std::function<Vec(double, double)>& f) {
    DiscMap u;
    u.grid = std::move(grid);
    u.target = std::move(target);
    const int n = u.target.dim;
    u.values.assign(static_cast<std::size_t>(u.grid->total()) * n, 0.0);
    for (int node = 0; node < u.grid->total(); ++node)
        u.set_value(node, f(u.grid->x[static_cast<std::size_t>(node)],
                            u.grid->y[static_cast<std::size_t>(node)]));
    return u;
}

void disc_derivatives(const DiscMap& u, int node, Vec& ux, Vec& uy) {
    const DiscGrid& grid = *u.grid;
    const int n = u.target.dim;
    ux.assign(static_cast<std::size_t>(n), 0.0);
    uy.assign(static_cast<std::size_t>(n), 0.0);
    const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
    const auto& arm = grid.arm[static_cast<std::size_t>(node)];
    const double* e = u.values.data() + static_cast<std::size_t>(nb[0]) * n;
    const double* w = u.values.data() + static_cast<std::size_t>(nb[1]) * n;
    const double* nn = u.values.data() + static_cast<std::size_t>(nb[2]) * n;
    const double* s = u.values.data() + static_cast<std::size_t>(nb[3]) * n;
    const double* c0 = u.values.data() + static_cast<std::size_t>(node) * n;
    {
        const double a = arm[0], b = arm[1];
        const double den = a * b * (a + b);
        for (int c = 0; c < n; ++c)
            ux[c] = (b * b * (e[c] - c0[c]) - a * a * (w[c] - c0[c])) / den;
    }
    {
        const double a = arm[2], b = arm[3];
        const double den = a * b * (a + b);
        for (int c = 0; c < n; ++c)
            uy[c] = (b * b * (nn[c] - c0[c]) - a * a * (s[c] - c0[c])) / den;
    }
}

bool disc_interpolate(const DiscMap& u, double px, double py, Vec& out) {
    const DiscGrid& grid = *u.grid;
    const int n = u.target.dim;
    const double h = grid.h;
    const int N = grid.resolution;
    const double fi = (px + 1.0) / h;
    const double fj = (py + 1.0) / h;
    const int i = static_cast<int>(std::floor(fi));
    const int j = static_cast<int>(std::floor(fj));
    if (i < 0 || j < 0 || i + 1 >= N || j + 1 >= N) return false;
    const int c00 = grid.node_at(i, j), c10 = grid.node_at(i + 1, j);
    const int c01 = grid.node_at(i, j + 1), c11 = grid.node_at(i + 1, j + 1);
    if (c00 < 0 || c10 < 0 || c01 < 0 || c11 < 0) return false;
    if (!grid.is_interior(c00) || !grid.is_interior(c10) || !grid.is_interior(c01) ||
        !grid.is_interior(c11))
        return false;
    const double tx = fi - i, ty = fj - j;
    out.assign(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        const double v00 = u.values[static_cast<std::size_t>(c00) * n + c];
        const double v10 = u.values[static_cast<std::size_t>(c10) * n + c];
        const double v01 = u.values[static_cast<std::size_t>(c01) * n + c];
        const double v11 = u.values[static_cast<std::size_t>(c11) * n + c];
        out[c] = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
                 tx * ty * v11;
    }
    return true;
}

std::string disc_to_csv(const DiscMap& u) {
    std::ostringstream out;
    const int n = u.target.dim;
    out << "node_x,node_y";
    for (int c = 1; c <= n; ++c) out << ",u_" << c;
    out << "\n";
    out.precision(17);
    for (int node = 0; node < u.grid->total(); ++node) {
        out << u.grid->x[static_cast<std::size_t>(node)] << ","
            << u.grid->y[static_cast<std::size_t>(node)];
        for (int c = 0; c < n; ++c)
            out << "," << u.values[static_cast<std::size_t>(node) * n + c];
        out << "\n";
    }
    return out.str();
}

std::string solve_report_to_json(const SolveReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"energy\":" << r.energy << ",\"tension_residual\":" << r.tension_residual
        << ",\"conformality_defect\":" << r.conformality_defect
        << ",\"iterations\":" << r.iterations
        << ",\"converged\":" << (r.converged ? "true" : "false") << "}";
    return out.str();
}

} // namespace koblab
