#include "koblab/pinched.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "koblab/curvature.hpp"
#include "koblab/errors.hpp"
#include "koblab/tabulated.hpp"

namespace koblab {

double find_t0(const ChartedMetric& m, double eps0, int k0, const std::vector<Vec>& p_samples,
               const T0Config& cfg) {
    if (k0 > 3) throw PreconditionFailed("find_t0 caps k0 at 3 (finite differences)");
    if (p_samples.empty()) throw PreconditionFailed("find_t0 needs base-point samples");

    std::vector<NormalFrameField> fields;
    fields.reserve(p_samples.size());
    for (const Vec& p : p_samples)
        fields.emplace_back(m, p, cfg.r0 * 1.05, cfg.pullback_steps);

    auto deviation = [&](double t) {
        double worst = 0.0;
        for (const NormalFrameField& f : fields)
            worst = std::max(worst, ck_deviation(f, t, 2.0, k0, cfg.ck_spacing));
        return worst;
    };

    const double t_hi = 0.5 * cfg.r0 * (1.0 - 1e-9); // enforce t0 < r0/2
    if (deviation(t_hi) < eps0) return t_hi;

    double lo = t_hi * cfg.t_floor_factor;
    if (!(deviation(lo) < eps0))
        throw NoScaleFound(m.name + ": C^k deviation exceeds eps0 even at t = " +
                           std::to_string(lo));
    double hi = t_hi;
    for (int iter = 0; iter < cfg.bisection_iters; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (deviation(mid) < eps0) lo = mid;
        else hi = mid;
    }
    return lo;
}

ClaimResult claim_disc(const ChartedMetric& hp_t, const Vec& v, const Vec& w,
                       const ClaimConfig& cfg) {
    const int n = hp_t.dim;
    const Vec origin(static_cast<std::size_t>(n), 0.0);
    const Mat h0 = hp_t.metric_at(origin); // h(p) by construction of the family
    const double nv = norm_g(h0, v);
    const double nw = norm_g(h0, w);
    if (!(nv > 0.0) || !(nw > 0.0))
        throw PreconditionFailed("claim_disc needs nonzero directions");
    if (std::fabs(inner(h0, v, w)) > 1e-8 * nv * nw)
        throw PreconditionFailed("claim_disc needs h(p)-orthogonal directions");

    // C^0 re-verification of the Claim hypothesis on the working ball
    if (cfg.verify_c0) {
        const std::vector<Vec> frame = orthonormal_frame(h0);
        double worst = 0.0;
        for (int ring = 1; ring <= 4; ++ring)
            for (int s = 0; s < 8; ++s) {
                const double rr = 2.0 * ring / 4.0;
                const double th = 2.0 * 3.14159265358979323846 * s / 8.0;
                Vec x(static_cast<std::size_t>(n), 0.0);
                for (int i = 0; i < n; ++i)
                    x[i] = rr * (std::cos(th) * frame[0][i] + std::sin(th) * frame[1][i]);
                if (!hp_t.contains(x)) continue;
                const Mat hx = hp_t.g(x);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        const double dev = inner(hx, frame[static_cast<std::size_t>(a)],
                                                 frame[static_cast<std::size_t>(b)]) -
                                           (a == b ? 1.0 : 0.0);
                        worst = std::max(worst, std::fabs(dev));
                    }
            }
        if (worst >= cfg.eps0 * 1.5)
            throw PreconditionFailed("claim_disc: hp_t is not eps0-close to h(p) (C^0 dev " +
                                     std::to_string(worst) + ")");
    }

    // relax against an interpolated table when the evaluator is slow
    ChartedMetric work = hp_t;
    if (cfg.tabulate && n == 2 && !hp_t.raw_g) {
        const double reach = 1.2 / std::sqrt(sym_eigenvalues(h0).front());
        const double halfwidth =
            std::min(reach, 0.95 * hp_t.domain.boundary_margin(origin, hp_t.periodicity));
        work = tabulate_metric(hp_t, halfwidth, cfg.tab_spacing * halfwidth);
    }

    Vec vhat = (1.0 / nv) * v;
    Vec what = (1.0 / nw) * w;
    auto grid = make_disc_grid(cfg.resolution);
    DiscMap seed;
    seed.grid = grid;
    seed.target = work;
    seed.values.assign(static_cast<std::size_t>(grid->total()) * n, 0.0);
    for (int node = 0; node < grid->total(); ++node) {
        const double zx = grid->x[static_cast<std::size_t>(node)];
        const double zy = grid->y[static_cast<std::size_t>(node)];
        Vec val(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) val[c] = zx * vhat[c] + zy * what[c];
        seed.set_value(node, val);
    }

    RelaxConfig rc;
    rc.tau_h = cfg.tau_h;
    rc.max_iter = cfg.max_iter;
    auto [disc, report] = harmonic_relax(seed, rc);

    const auto [oi, oj] = grid->node_to_lattice[static_cast<std::size_t>(grid->origin)];
    const int east = grid->node_at(oi + 1, oj);
    const int west = grid->node_at(oi - 1, oj);
    Vec jet(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        jet[c] = (disc.values[static_cast<std::size_t>(east) * n + c] -
                  disc.values[static_cast<std::size_t>(west) * n + c]) /
                 (2.0 * grid->h);
    ClaimResult res;
    res.alpha = inner(h0, jet, vhat);
    res.report = report;
    res.disc = std::move(disc);
    if (res.alpha < 0.5 - cfg.tau_alpha)
        throw ClaimFailure("claim disc jet component alpha = " + std::to_string(res.alpha) +
                           " fell below 1/2 (shrink eps0)");
    return res;
}

namespace {

Vec orthogonal_partner_h(const Mat& h0, const Vec& v, unsigned salt) {
    const int n = h0.n;
    if (n == 2) {
        // rotate the h0-orthonormalized v by 90 degrees in the frame sense
        Vec w = {-v[1], v[0]};
        Vec vv = v, wc = w;
        orthonormalize_pair(h0, vv, wc);
        return wc;
    }
    std::mt19937_64 rng(salt);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Vec w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) w[i] = gauss(rng);
        Vec vv = v, wc = w;
        try {
            orthonormalize_pair(h0, vv, wc);
            return wc;
        } catch (const DegeneratePlane&) {
        }
    }
}

struct CompositeMeasure {
    double upper = std::numeric_limits<double>::infinity();
    bool admissible = false;
};

// exp_p(t0 * u') measured as a disc in (M, g).
CompositeMeasure measure_composite(const ChartedMetric& m, const Vec& p, const Vec& v,
                                   const DiscMap& claim, double t0, const UpperCertConfig& cfg) {
    const int n = m.dim;
    DiscMap comp;
    comp.grid = claim.grid;
    comp.target = m;
    comp.values.assign(claim.values.size(), 0.0);
    Vec arg(static_cast<std::size_t>(n));
    for (int node = 0; node < claim.grid->total(); ++node) {
        for (int c = 0; c < n; ++c)
            arg[c] = t0 * claim.values[static_cast<std::size_t>(node) * n + c];
        const double len = norm2(arg);
        const int steps = std::max(8, static_cast<int>(std::ceil(cfg.composite_steps * len)));
        comp.set_value(node, len == 0.0 ? p : geodesic_exp(m, p, arg, steps));
    }
    RelaxConfig rc;
    rc.tau_h = cfg.claim.tau_h;
    rc.max_iter = cfg.polish_iters;
    auto [disc, report] = harmonic_relax(comp, rc);

    CompositeMeasure out;
    out.admissible = report.converged && report.conformality_defect <= cfg.claim.tau_c;
    const auto [oi, oj] = disc.grid->node_to_lattice[static_cast<std::size_t>(disc.grid->origin)];
    const int east = disc.grid->node_at(oi + 1, oj);
    const int west = disc.grid->node_at(oi - 1, oj);
    Vec jet(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        jet[c] = (disc.values[static_cast<std::size_t>(east) * n + c] -
                  disc.values[static_cast<std::size_t>(west) * n + c]) /
                 (2.0 * disc.grid->h);
    const Mat gp = m.metric_at(p);
    const double r_prime = inner(gp, jet, v) / inner(gp, v, v);
    if (r_prime > 0.0) out.upper = 1.0 / r_prime;
    return out;
}

} // namespace

UpperCertResult upper_bound_certificate(const ChartedMetric& m, const Vec& p, const Vec& v,
                                        double t0, const UpperCertConfig& cfg) {
    if (!(t0 > 0.0)) throw NonpositiveScale("upper_bound_certificate needs t0 > 0");
    const Mat gp = m.metric_at(p);
    const double vnorm = norm_g(gp, v);
    UpperCertResult res;
    res.bound = 2.0 * vnorm / t0;

    const ChartedMetric hp = pullback_exp_metric(m, p, 2.0 * t0, cfg.composite_steps * 2);
    const ChartedMetric hp_t = rescaled_metric(hp, t0);
    const Vec w = orthogonal_partner_h(gp, v, 7177);
    const ClaimResult claim = claim_disc(hp_t, v, w, cfg.claim);
    res.alpha = claim.alpha;

    const CompositeMeasure meas = measure_composite(m, p, v, claim.disc, t0, cfg);
    res.measured_upper = meas.upper;
    res.composite_admissible = meas.admissible;
    res.ok = meas.admissible && meas.upper <= res.bound * (1.0 + cfg.tau_gap);
    return res;
}

BiLipschitzCertificate bilipschitz_verify(const ChartedMetric& m, double c, double t0,
                                          const BiLipschitzConfig& cfg) {
    if (!(c > 0.0)) throw PreconditionFailed("bilipschitz_verify needs a pinch constant c > 0");
    if (!(t0 > 0.0)) throw NonpositiveScale("bilipschitz_verify needs t0 > 0");

    // certify the two-sided pinch: K inside [-max(c,1/c), -min(c,1/c)], and
    // K <= -c so the sqrt(c/8) lower constant applies
    const CurvatureBounds kb = curvature_bounds_scan(m, cfg.scan_samples, cfg.rng_seed);
    const double hi = std::max(c, 1.0 / c), lo = std::min(c, 1.0 / c);
    const double slack = 1e-3 * std::max(1.0, hi);
    if (!(kb.k_max <= -lo + slack) || !(kb.k_min >= -hi - slack) || !(kb.k_max <= -c + slack))
        throw PinchNotCertified(m.name + ": scanned K range [" + std::to_string(kb.k_min) + "," +
                                std::to_string(kb.k_max) + "] is not pinched for c = " +
                                std::to_string(c));

    BiLipschitzCertificate cert;
    cert.model = m.name;
    cert.c = c;
    cert.t0 = t0;
    cert.lower_const = std::sqrt(c / 8.0);
    cert.upper_const = 2.0 / t0;
    cert.big_c = std::max(2.0 / t0, std::sqrt(8.0 / c));
    cert.tau_gap = cfg.tau_gap;

    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::string> failures;
    for (int ps = 0; ps < cfg.point_samples; ++ps) {
        const Vec p = sample_point(m, rng, cfg.sample_margin);
        const Mat gp = m.metric_at(p);
        for (int ds = 0; ds < cfg.dirs_per_point; ++ds) {
            Vec v(static_cast<std::size_t>(m.dim));
            for (int i = 0; i < m.dim; ++i) v[i] = gauss(rng);
            const double vnorm = norm_g(gp, v);
            if (!(vnorm > 1e-12)) { --ds; continue; }

            BiLipschitzRow row;
            row.p = p;
            row.v = v;
            row.lower = cert.lower_const * vnorm;
            row.cert_bound = cert.upper_const * vnorm;
            const KobayashiEstimate est = kobayashi_royden_upper(m, p, v, cfg.budget);
            row.upper = std::min(est.upper, row.cert_bound);
            row.ok = row.lower <= row.upper * (1.0 + cfg.tau_gap) &&
                     row.upper <= row.cert_bound * (1.0 + cfg.tau_gap);
            if (!row.ok) {
                std::ostringstream msg;
                msg << "row p=(";
                for (int i = 0; i < m.dim; ++i) msg << (i ? "," : "") << p[i];
                msg << ") lower=" << row.lower << " upper=" << row.upper;
                failures.push_back(msg.str());
            }
            cert.rows.push_back(std::move(row));
        }
    }
    cert.pass = failures.empty();
    if (!cert.pass) {
        std::ostringstream msg;
        msg << "bilipschitz certificate failed on " << failures.size() << " rows:";
        for (const std::string& f : failures) msg << "\n  " << f;
        throw CertificateFailure(msg.str());
    }
    return cert;
}

std::string certificate_to_json(const BiLipschitzCertificate& cert) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"model\":\"" << cert.model << "\",\"c\":" << cert.c << ",\"t0\":" << cert.t0
        << ",\"lower_const\":" << cert.lower_const << ",\"upper_const\":" << cert.upper_const
        << ",\"C\":" << cert.big_c << ",\"tau_gap\":" << cert.tau_gap << ",\"pass\":"
        << (cert.pass ? "true" : "false") << ",\"rows\":[";
    for (std::size_t i = 0; i < cert.rows.size(); ++i) {
        const BiLipschitzRow& r = cert.rows[i];
        out << (i ? "," : "") << "{\"p\":[";
        for (std::size_t k = 0; k < r.p.size(); ++k) out << (k ? "," : "") << r.p[k];
        out << "],\"v\":[";
        for (std::size_t k = 0; k < r.v.size(); ++k) out << (k ? "," : "") << r.v[k];
        out << "],\"lower\":" << r.lower << ",\"upper\":" << r.upper
            << ",\"cert_bound\":" << r.cert_bound << ",\"ok\":" << (r.ok ? "true" : "false")
            << "}";
    }
    out << "]}";
    return out.str();
}

std::string certificate_summary(const BiLipschitzCertificate& cert) {
    std::ostringstream out;
    out.precision(6);
    out << "bi-Lipschitz certificate for " << cert.model << "\n"
        << "  pinch c = " << cert.c << ", scale t0 = " << cert.t0 << "\n"
        << "  lower_const = " << cert.lower_const << ", upper_const = " << cert.upper_const
        << ", C = " << cert.big_c << "\n"
        << "  rows: " << cert.rows.size() << ", pass: " << (cert.pass ? "yes" : "no") << "\n";
    return out.str();
}

std::string quasi_bounded_to_json(const QuasiBoundedReport& rep) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"r0\":" << rep.r0 << ",\"q_max\":" << rep.q_max << ",\"A_q\":[";
    for (std::size_t q = 0; q < rep.a_q.size(); ++q) out << (q ? "," : "") << rep.a_q[q];
    out << "],\"samples\":" << rep.sampled_points.size()
        << ",\"immersion_failures\":" << rep.immersion_failures.size() << "}";
    return out.str();
}

} // namespace koblab
