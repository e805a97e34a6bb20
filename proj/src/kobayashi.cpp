#include "koblab/kobayashi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "koblab/curvature.hpp"
#include "koblab/errors.hpp"
#include "koblab/parallel.hpp"

namespace koblab {

double poincare_metric(std::complex<double> z, std::complex<double> v) {
    const double z2 = std::norm(z);
    if (!(z2 < 1.0)) throw OutOfChart("poincare_metric: |z| >= 1");
    return std::abs(v) / (1.0 - z2);
}

double poincare_distance(std::complex<double> z, std::complex<double> w) {
    if (!(std::norm(z) < 1.0) || !(std::norm(w) < 1.0))
        throw OutOfChart("poincare_distance: point outside the disc");
    const double d = std::abs(z - w) / std::abs(1.0 - z * std::conj(w));
    return 0.5 * std::log((1.0 + d) / (1.0 - d));
}

std::vector<double> SearchBudget::radius_grid() const {
    std::vector<double> radii;
    for (double r = r_min; r < r_max * (1.0 - 1e-12); r *= growth) radii.push_back(r);
    radii.push_back(r_max);
    return radii;
}

namespace {

// Plane partners for xi: coordinate axes (deduplicated for dim 2) followed
// by seeded random directions. Order is deterministic, which fixes disc ids.
std::vector<Vec> plane_partners(const Mat& gp, const Vec& xi, int extra, unsigned rng_seed) {
    const int n = gp.n;
    std::vector<Vec> partners;
    for (int j = 0; j < n; ++j) {
        Vec w(static_cast<std::size_t>(n), 0.0);
        w[j] = 1.0;
        Vec v = xi, wc = w;
        try {
            orthonormalize_pair(gp, v, wc);
        } catch (const DegeneratePlane&) {
            continue;
        }
        partners.push_back(w);
        if (n == 2) break; // a single 2-plane exists
    }
    if (n > 2 && extra > 0) {
        std::mt19937_64 rng(rng_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int k = 0; k < extra; ++k) {
            Vec w(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) w[i] = gauss(rng);
            Vec v = xi, wc = w;
            try {
                orthonormalize_pair(gp, v, wc);
                partners.push_back(w);
            } catch (const DegeneratePlane&) {
                --k; // resample
            }
        }
    }
    return partners;
}

} // namespace

KobayashiEstimate kobayashi_royden_upper(const ChartedMetric& m, const Vec& p, const Vec& xi,
                                         const SearchBudget& budget, bool throw_on_empty) {
    const Mat gp = m.metric_at(p);
    const double xi_norm = norm_g(gp, xi);
    if (!(xi_norm > 0.0)) throw PreconditionFailed("kobayashi_royden_upper needs xi != 0");

    KobayashiEstimate est;
    est.upper = std::numeric_limits<double>::infinity();
    est.tau_h = budget.tau_h;
    est.tau_c = budget.tau_c;

    const std::vector<Vec> partners = plane_partners(gp, xi, budget.extra_planes, budget.rng_seed);
    const std::vector<double> radii = budget.radius_grid();

    struct Candidate {
        double value = std::numeric_limits<double>::infinity();
        bool admissible = false;
        bool tried = false;
        std::string id;
    };
    const int count = static_cast<int>(partners.size() * radii.size());
    std::vector<Candidate> cands(static_cast<std::size_t>(count));

    JetConfig jc;
    jc.resolution = budget.resolution;
    jc.tau_h = budget.tau_h;
    jc.tau_c = budget.tau_c;
    jc.max_iter = budget.max_iter;
    jc.seed_steps = budget.seed_steps;

    parallel_for(count, [&](int idx) {
        const std::size_t pi = static_cast<std::size_t>(idx) / radii.size();
        const std::size_t ri = static_cast<std::size_t>(idx) % radii.size();
        Candidate& c = cands[static_cast<std::size_t>(idx)];
        std::ostringstream id;
        id << "plane" << pi << "_r" << radii[ri];
        c.id = id.str();
        c.tried = true;
        try {
            const JetDiscResult jd = jet_disc(m, p, xi, partners[pi], radii[ri], jc);
            if (jd.admissible && jd.jet_scale > 0.0) {
                c.admissible = true;
                c.value = xi_norm / jd.jet_scale;
            }
        } catch (const LeftChart&) {
        } catch (const JetDrift&) {
        } catch (const OutOfChart&) {
        } catch (const ReducedStepExhausted&) {
        } catch (const SingularMetric&) {
        }
    });

    for (const Candidate& c : cands) {
        if (c.tried) ++est.discs_tried;
        if (!c.admissible) continue;
        ++est.discs_admissible;
        if (c.value < est.upper) {
            est.upper = c.value;
            est.certificate = c.id;
        }
    }
    if (est.discs_admissible == 0 && throw_on_empty)
        throw NoAdmissibleDisc(m.name + ": no admissible disc in the budget (" +
                               std::to_string(est.discs_tried) + " tried)");
    return est;
}

double kobayashi_royden_lower(const ChartedMetric& m, const Vec& p, const Vec& xi, double c,
                              int scan_samples, unsigned scan_seed) {
    if (!(c > 0.0)) throw PreconditionFailed("kobayashi_royden_lower needs c > 0");
    const CurvatureBounds b = curvature_bounds_scan(m, scan_samples, scan_seed);
    const double slack = 1e-3 * std::max(1.0, c); // sampled certificate slack
    if (!(b.k_max <= -c + slack))
        throw PinchNotCertified(m.name + ": scanned K_max = " + std::to_string(b.k_max) +
                                " does not certify K <= -" + std::to_string(c));
    const Mat gp = m.metric_at(p);
    return std::sqrt(c / 8.0) * norm_g(gp, xi);
}

SchwarzReport schwarz_check(const DiscMap& u, double c, double tau_schwarz) {
    if (!(c > 0.0)) throw PreconditionFailed("schwarz_check needs c > 0");
    SchwarzReport rep;
    const DiscGrid& grid = *u.grid;
    const int n = u.target.dim;
    Vec ux, uy;
    std::vector<double> gbuf(static_cast<std::size_t>(n) * n);
    for (int node = 0; node < grid.num_interior; ++node) {
        disc_derivatives(u, node, ux, uy);
        metric_raw(u.target, u.values.data() + static_cast<std::size_t>(node) * n, gbuf.data());
        double num = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                num += gbuf[static_cast<std::size_t>(i) * n + j] * ux[i] * ux[j];
        const double zx = grid.x[static_cast<std::size_t>(node)];
        const double zy = grid.y[static_cast<std::size_t>(node)];
        const double s = 1.0 - (zx * zx + zy * zy);
        const double bound = (8.0 / c) / (s * s);
        const double ratio = num / bound;
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_node = node;
        }
    }
    rep.pass = rep.worst_ratio <= 1.0 + tau_schwarz;
    rep.max_violation = std::max(0.0, rep.worst_ratio - 1.0);
    return rep;
}

namespace {

// Local pattern search for the parameter w with u(w) closest to target.
bool locate_on_disc(const DiscMap& u, const Vec& target, double tau_link,
                    std::complex<double>& w_out, double max_param_radius) {
    const DiscGrid& grid = *u.grid;
    const ChartedMetric& m = u.target;
    double best = std::numeric_limits<double>::infinity();
    double bx = 0.0, by = 0.0;
    for (int node = 0; node < grid.num_interior; ++node) {
        const double px = grid.x[static_cast<std::size_t>(node)];
        const double py = grid.y[static_cast<std::size_t>(node)];
        if (px * px + py * py > max_param_radius * max_param_radius) continue;
        const double d = m.chart_dist(u.value(node), target);
        if (d < best) {
            best = d;
            bx = px;
            by = py;
        }
    }
    if (!std::isfinite(best)) return false;
    double step = grid.h;
    Vec val;
    for (int iter = 0; iter < 60 && step > 1e-9; ++iter) {
        bool improved = false;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                if (dx == 0 && dy == 0) continue;
                const double cx = bx + step * dx, cy = by + step * dy;
                if (cx * cx + cy * cy > max_param_radius * max_param_radius) continue;
                if (!disc_interpolate(u, cx, cy, val)) continue;
                const double d = m.chart_dist(val, target);
                if (d < best) {
                    best = d;
                    bx = cx;
                    by = cy;
                    improved = true;
                }
            }
        if (!improved) step /= 2.0;
    }
    if (best > tau_link) return false;
    w_out = {bx, by};
    return true;
}

Vec perpendicular_partner(const Mat& gp, const Vec& v, unsigned salt) {
    const int n = gp.n;
    if (n == 2) return {-v[1], v[0]};
    // deterministic non-colinear pick
    std::mt19937_64 rng(salt);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Vec w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) w[i] = gauss(rng);
        Vec vv = v, wc = w;
        try {
            orthonormalize_pair(gp, vv, wc);
            return w;
        } catch (const DegeneratePlane&) {
        }
    }
}

} // namespace

ChainDistanceResult chain_distance(const ChartedMetric& m, const Vec& p, const Vec& q,
                                   const ChainConfig& cfg) {
    if (!m.contains(p) || !m.contains(q))
        throw OutOfChart(m.name + ": chain endpoints must lie in the chart");
    ChainDistanceResult result;
    if (m.chart_dist(p, q) == 0.0) {
        result.node_cloud_size = 2;
        return result;
    }

    // cloud: endpoints plus jittered points along the connecting segment
    std::vector<Vec> cloud = {p, q};
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Vec diff = m.delta(q, p);
    for (int k = 0; k < cfg.cloud_size; ++k) {
        const double t = (k + 1.0) / (cfg.cloud_size + 1.0);
        for (int attempt = 0; attempt < 32; ++attempt) {
            Vec x = p;
            for (int i = 0; i < m.dim; ++i)
                x[i] += t * diff[i] + 0.15 * norm2(diff) * gauss(rng);
            if (m.contains(x)) {
                cloud.push_back(m.wrap(x));
                break;
            }
        }
    }
    const int cn = static_cast<int>(cloud.size());
    result.node_cloud_size = cn;

    JetConfig jc;
    jc.resolution = cfg.resolution;
    jc.tau_h = cfg.tau_h;
    jc.tau_c = cfg.tau_c;
    jc.max_iter = cfg.max_iter;
    jc.seed_steps = cfg.seed_steps;

    struct Edge {
        int a, b;
        double rho;
        ChainLink link;
    };
    std::vector<Edge> edges;

    // candidate pairs: each node toward its nearest partners, plus (p, q)
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < cn; ++a) {
        std::vector<std::pair<double, int>> order;
        for (int b = 0; b < cn; ++b)
            if (b != a) order.push_back({m.chart_dist(cloud[a], cloud[b]), b});
        std::sort(order.begin(), order.end());
        const int links = std::min<int>(cfg.nearest_links, static_cast<int>(order.size()));
        for (int k = 0; k < links; ++k) {
            const int b = order[static_cast<std::size_t>(k)].second;
            if (a < b) pairs.push_back({a, b});
            else pairs.push_back({b, a});
        }
    }
    pairs.push_back({0, 1});
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    std::vector<std::optional<Edge>> found(pairs.size());
    parallel_for(static_cast<int>(pairs.size()), [&](int idx) {
        const auto [a, b] = pairs[static_cast<std::size_t>(idx)];
        const Vec dir = m.delta(cloud[static_cast<std::size_t>(b)], cloud[static_cast<std::size_t>(a)]);
        const Mat ga = m.metric_at(cloud[static_cast<std::size_t>(a)]);
        const Vec w_partner = perpendicular_partner(ga, dir, cfg.rng_seed + static_cast<unsigned>(idx));
        std::vector<int> resolutions = {cfg.resolution};
        if (cfg.fine_resolution > cfg.resolution) resolutions.push_back(cfg.fine_resolution);
        for (int res : resolutions) {
        for (double r : cfg.radii) {
            try {
                JetConfig jc_res = jc;
                jc_res.resolution = res;
                const JetDiscResult jd =
                    jet_disc(m, cloud[static_cast<std::size_t>(a)], dir, w_partner, r, jc_res);
                if (!jd.admissible) continue;
                std::complex<double> w;
                if (!locate_on_disc(jd.disc, cloud[static_cast<std::size_t>(b)], cfg.tau_link, w,
                                    1.0 - 2.0 * jd.disc.grid->h))
                    continue;
                Edge e;
                e.a = a;
                e.b = b;
                std::ostringstream id;
                id << "link" << a << "_" << b << "_r" << r;
                e.link.disc_id = id.str();
                e.link.z = {0.0, 0.0};
                e.link.w = w;
                e.link.rho = poincare_distance(e.link.z, e.link.w);
                e.link.from = cloud[static_cast<std::size_t>(a)];
                e.link.to = cloud[static_cast<std::size_t>(b)];
                e.rho = e.link.rho;
                found[static_cast<std::size_t>(idx)] = e;
                return;
            } catch (const Error&) {
                // try the next radius
            }
        }
        }
    });
    for (const auto& e : found)
        if (e) edges.push_back(*e);

    // Dijkstra over the cloud graph
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(cn));
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        adj[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].a)].push_back(
            {edges[static_cast<std::size_t>(e)].b, e});
        adj[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].b)].push_back(
            {edges[static_cast<std::size_t>(e)].a, e});
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(static_cast<std::size_t>(cn), inf);
    std::vector<int> prev_edge(static_cast<std::size_t>(cn), -1);
    std::vector<int> prev_node(static_cast<std::size_t>(cn), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[0] = 0.0;
    heap.push({0.0, 0});
    while (!heap.empty()) {
        const auto [d, a] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(a)]) continue;
        for (const auto& [b, e] : adj[static_cast<std::size_t>(a)]) {
            const double nd = d + edges[static_cast<std::size_t>(e)].rho;
            if (nd < dist[static_cast<std::size_t>(b)]) {
                dist[static_cast<std::size_t>(b)] = nd;
                prev_edge[static_cast<std::size_t>(b)] = e;
                prev_node[static_cast<std::size_t>(b)] = a;
                heap.push({nd, b});
            }
        }
    }
    if (!(dist[1] < inf))
        throw Disconnected(m.name + ": no Kobayashi chain found within the budget");

    std::vector<ChainLink> chain;
    for (int at = 1; at != 0; at = prev_node[static_cast<std::size_t>(at)])
        chain.push_back(edges[static_cast<std::size_t>(prev_edge[static_cast<std::size_t>(at)])].link);
    std::reverse(chain.begin(), chain.end());
    result.chain = std::move(chain);
    double total = 0.0;
    for (const ChainLink& l : result.chain) total += l.rho;
    result.value = total;
    return result;
}

namespace {

// Shooting solve of exp_p(v) = q; falls back to the chart segment.
std::vector<Vec> geodesic_polyline(const ChartedMetric& m, const Vec& p, const Vec& q,
                                   int segments) {
    Vec v = m.delta(q, p);
    bool ok = false;
    try {
        for (int iter = 0; iter < 12; ++iter) {
            const Vec reached = geodesic_exp(m, p, v, 128);
            const Vec err = m.delta(reached, q);
            if (norm2(err) < 1e-10 * std::max(1.0, norm2(v))) {
                ok = true;
                break;
            }
            const Mat jac = exp_differential(m, p, v, 128);
            const Vec corr = solve(jac, err);
            for (int i = 0; i < m.dim; ++i) v[i] -= corr[i];
        }
    } catch (const Error&) {
        ok = false;
    }
    std::vector<Vec> verts;
    verts.reserve(static_cast<std::size_t>(segments) + 1);
    if (ok) {
        for (int k = 0; k <= segments; ++k) {
            const double t = static_cast<double>(k) / segments;
            verts.push_back(k == 0 ? p : geodesic_exp(m, p, t * v, 128));
        }
        return verts;
    }
    const Vec d = m.delta(q, p);
    for (int k = 0; k <= segments; ++k) {
        const double t = static_cast<double>(k) / segments;
        verts.push_back(m.wrap(p + t * d));
    }
    return verts;
}

double path_value(const ChartedMetric& m, const std::vector<Vec>& verts, int samples,
                  const SearchBudget& budget, int fine_resolution, double abandon_above,
                  std::vector<double>* uppers) {
    double total = 0.0;
    if (uppers) uppers->clear();
    for (std::size_t s = 0; s + 1 < verts.size(); ++s) {
        const Vec dir = m.delta(verts[s + 1], verts[s]);
        if (norm2(dir) == 0.0) continue;
        for (int j = 0; j < samples; ++j) {
            const double t = (j + 0.5) / samples;
            Vec x = verts[s];
            for (int i = 0; i < m.dim; ++i) x[i] += t * dir[i];
            x = m.wrap(x);
            KobayashiEstimate est = kobayashi_royden_upper(m, x, dir, budget);
            if (!std::isfinite(est.upper) && fine_resolution > budget.resolution) {
                SearchBudget fine = budget;
                fine.resolution = fine_resolution;
                fine.max_iter = 2 * budget.max_iter;
                est = kobayashi_royden_upper(m, x, dir, fine);
            }
            const double contrib = est.upper / samples;
            total += contrib;
            if (uppers) uppers->push_back(est.upper);
            if (total > abandon_above) return total;
        }
    }
    return total;
}

} // namespace

IntegratedDistanceResult integrated_distance(const ChartedMetric& m, const Vec& p, const Vec& q,
                                             const PathConfig& cfg) {
    if (!m.contains(p) || !m.contains(q))
        throw OutOfChart(m.name + ": integrated distance endpoints must lie in the chart");
    IntegratedDistanceResult result;
    result.samples_per_segment = cfg.samples_per_segment;
    if (m.chart_dist(p, q) == 0.0) {
        result.path = {p, q};
        return result;
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Vec> seed = geodesic_polyline(m, p, q, cfg.segments);
    std::vector<double> uppers;
    double best = path_value(m, seed, cfg.samples_per_segment, cfg.f_budget,
                             cfg.fine_resolution, inf, &uppers);
    std::vector<Vec> best_path = seed;
    std::vector<double> best_uppers = uppers;

    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = cfg.perturb_scale * norm2(m.delta(q, p));
    for (int trial = 0; trial < cfg.perturbations; ++trial) {
        std::vector<Vec> verts = seed;
        bool valid = true;
        for (std::size_t k = 1; k + 1 < verts.size(); ++k) {
            const double bump = std::sin(3.14159265358979323846 * static_cast<double>(k) /
                                         static_cast<double>(cfg.segments));
            for (int i = 0; i < m.dim; ++i) verts[k][i] += scale * bump * gauss(rng);
            if (!m.contains(verts[k])) valid = false;
            verts[k] = m.wrap(verts[k]);
        }
        if (!valid) continue;
        std::vector<double> trial_uppers;
        const double v = path_value(m, verts, cfg.samples_per_segment, cfg.f_budget,
                                    cfg.fine_resolution, best, &trial_uppers);
        if (v < best) {
            best = v;
            best_path = verts;
            best_uppers = trial_uppers;
        }
    }
    result.value = best;
    result.path = std::move(best_path);
    result.sample_uppers = std::move(best_uppers);
    return result;
}

DecreasingReport decreasing_property_check(const ChartedMetric& m_sub, const ChartedMetric& m_amb,
                                           const std::vector<std::pair<Vec, Vec>>& samples,
                                           const SearchBudget& budget, double tol) {
    DecreasingReport rep;
    for (const auto& [p, xi] : samples) {
        DecreasingRow row;
        row.p = p;
        row.xi = xi;
        row.upper_sub = kobayashi_royden_upper(m_sub, p, xi, budget).upper;
        row.upper_amb = kobayashi_royden_upper(m_amb, p, xi, budget).upper;
        row.ok = row.upper_amb <= row.upper_sub + tol;
        if (std::isfinite(row.upper_amb) || std::isfinite(row.upper_sub))
            rep.worst_excess = std::max(rep.worst_excess, row.upper_amb - row.upper_sub);
        rep.all_ok = rep.all_ok && row.ok;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

HyperbolicityResult hyperbolic_at_point(const ChartedMetric& m, const Vec& p,
                                        std::optional<double> c_pinch, int scan_samples,
                                        unsigned scan_seed) {
    HyperbolicityResult res;
    if (!c_pinch) return res;
    try {
        Vec xi(static_cast<std::size_t>(m.dim), 0.0);
        xi[0] = 1.0;
        kobayashi_royden_lower(m, p, xi, *c_pinch, scan_samples, scan_seed);
        res.known = true;
        res.hyperbolic = true;
        res.constant = std::sqrt(*c_pinch / 8.0);
    } catch (const PinchNotCertified&) {
        res.known = false;
    }
    return res;
}

namespace {

void emit_vec(std::ostringstream& out, const Vec& v) {
    out << "[";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << "]";
}

} // namespace

std::string estimate_to_json(const Vec& p, const Vec& xi, const KobayashiEstimate& e) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"p\":";
    emit_vec(out, p);
    out << ",\"xi\":";
    emit_vec(out, xi);
    out << ",\"upper\":";
    if (std::isfinite(e.upper)) out << e.upper;
    else out << "null";
    out << ",\"lower\":";
    if (e.lower) out << *e.lower;
    else out << "null";
    out << ",\"certificate\":\"" << e.certificate << "\",\"tolerances\":{\"tau_h\":" << e.tau_h
        << ",\"tau_c\":" << e.tau_c << "}}";
    return out.str();
}

std::string chain_result_to_json(const Vec& p, const Vec& q, const ChainDistanceResult& r) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"p\":";
    emit_vec(out, p);
    out << ",\"q\":";
    emit_vec(out, q);
    out << ",\"value\":" << r.value << ",\"cloud_size\":" << r.node_cloud_size << ",\"chain\":[";
    for (std::size_t i = 0; i < r.chain.size(); ++i) {
        const ChainLink& l = r.chain[i];
        out << (i ? "," : "") << "{\"disc\":\"" << l.disc_id << "\",\"z\":[" << l.z.real() << ","
            << l.z.imag() << "],\"w\":[" << l.w.real() << "," << l.w.imag()
            << "],\"rho\":" << l.rho << "}";
    }
    out << "]}";
    return out.str();
}

std::string integrated_result_to_json(const Vec& p, const Vec& q,
                                      const IntegratedDistanceResult& r) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"p\":";
    emit_vec(out, p);
    out << ",\"q\":";
    emit_vec(out, q);
    out << ",\"value\":" << r.value << ",\"samples_per_segment\":" << r.samples_per_segment
        << ",\"path\":[";
    for (std::size_t i = 0; i < r.path.size(); ++i) {
        out << (i ? "," : "");
        emit_vec(out, r.path[i]);
    }
    out << "]}";
    return out.str();
}

} // namespace koblab
