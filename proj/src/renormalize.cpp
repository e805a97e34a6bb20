#include "koblab/renormalize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "koblab/errors.hpp"
#include "koblab/geodesic.hpp"
#include "koblab/tabulated.hpp"

namespace koblab {

double psi_cap_profile(double t) {
    if (t <= 0.5) return t;
    if (t >= 0.75) return 1.0;
    const double s = (t - 0.5) / 0.25;
    const double blend = s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); // smoothstep
    return (1.0 - blend) * t + blend;
}

std::function<double(const Vec&)> psi_cap(const ChartedMetric& m, const Vec& q_point, double A) {
    if (!m.contains(q_point)) throw OutOfChart(m.name + ": psi_cap basepoint outside chart");
    const double margin = m.domain.boundary_margin(q_point, m.periodicity);
    if (margin < 3.0)
        throw ChartTooSmall(m.name + ": chart margin " + std::to_string(margin) +
                            " cannot hold the radius-3 ball");
    for (double p : m.periodicity)
        if (p > 0.0 && p < 6.0)
            throw ChartTooSmall(m.name + ": period " + std::to_string(p) +
                                " cannot hold the radius-3 ball");
    const ChartedMetric chart = m;
    const Vec q = q_point;
    return [chart, q, A](const Vec& x) {
        const double d = chart.chart_dist(x, q);
        return psi_cap_profile(d * d) * std::exp(A * psi_cap_profile(d));
    };
}

SchwarzFamily make_psi_family(const ChartedMetric& m, double A) {
    SchwarzFamily fam;
    const ChartedMetric chart = m;
    fam.J = [chart, A](const Vec& eta, const Vec& eta_tilde) {
        const double d = chart.chart_dist(eta_tilde, eta);
        return psi_cap_profile(d * d) * std::exp(A * psi_cap_profile(d));
    };
    fam.alpha_minus = 0.25;
    fam.alpha_plus = 0.5;
    fam.c = 1.0;
    const double cs = fam.c / (fam.alpha_plus * fam.alpha_plus);
    fam.s = [cs](double t) { return cs * t * t; };
    return fam;
}

MpshReport mpsh_test(const std::function<double(const Vec&)>& rho,
                     const std::vector<DiscMap>& discs, double tau_sh) {
    MpshReport rep;
    for (int di = 0; di < static_cast<int>(discs.size()); ++di) {
        const DiscMap& u = discs[static_cast<std::size_t>(di)];
        const DiscGrid& grid = *u.grid;
        std::vector<double> f(static_cast<std::size_t>(grid.total()));
        for (int node = 0; node < grid.total(); ++node) f[static_cast<std::size_t>(node)] =
            rho(u.value(node));
        for (int node = 0; node < grid.num_interior; ++node) {
            const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
            const auto& arm = grid.arm[static_cast<std::size_t>(node)];
            // (h/4) * sum (f_d - f_0)/arm_d; the plain 4-neighbor average
            // minus the center in the bulk
            double acc = 0.0;
            for (int d = 0; d < 4; ++d)
                acc += (f[static_cast<std::size_t>(nb[d])] - f[static_cast<std::size_t>(node)]) /
                       arm[d];
            const double margin = grid.h / 4.0 * acc;
            if (margin < rep.worst_value) {
                rep.worst_value = margin;
                rep.worst_disc = di;
                rep.worst_node = node;
            }
        }
    }
    rep.pass = rep.worst_value >= -tau_sh;
    return rep;
}

double find_log_A(const ChartedMetric& m, const Vec& p, const LogAConfig& cfg) {
    // normal coordinates at p
    ChartedMetric hp = pullback_exp_metric(m, p, cfg.normal_radius, cfg.pullback_steps);
    if (m.dim == 2 && !hp.raw_g) {
        const double halfwidth = 0.9 * hp.domain.radius;
        hp = tabulate_metric(hp, halfwidth, halfwidth / 24.0);
    }
    const int n = m.dim;

    // stress family: jet discs near the singular point of log|x|
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<DiscMap> discs;
    JetConfig jc;
    jc.resolution = cfg.resolution;
    for (int k = 0; k < cfg.disc_budget; ++k) {
        const double angle = 2.0 * 3.14159265358979323846 * k / cfg.disc_budget;
        Vec x0(static_cast<std::size_t>(n), 0.0);
        x0[0] = cfg.base_dist * std::cos(angle);
        x0[1 % n] = cfg.base_dist * std::sin(angle);
        Vec v(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            v[i] = gauss(rng);
            w[i] = gauss(rng);
        }
        try {
            JetDiscResult jd = jet_disc(hp, x0, v, w, cfg.disc_radius, jc);
            discs.push_back(std::move(jd.disc));
        } catch (const Error&) {
            // drop failed stress discs; the family just shrinks
        }
    }
    if (discs.empty()) throw ABudgetExceeded("find_log_A: no stress discs could be built");

    for (double a = cfg.a_first; a <= cfg.a_max * (1.0 + 1e-12); a *= 2.0) {
        auto rho = [a](const Vec& x) {
            const double r = norm2(x);
            return std::log(r) + a * r;
        };
        if (mpsh_test(rho, discs, cfg.tau_sh).pass) return a;
    }
    throw ABudgetExceeded("find_log_A: no A <= " + std::to_string(cfg.a_max) + " passed");
}

SibonyReport sibony_verify(const DiscGrid& grid, const std::vector<double>& u,
                           const SibonyConfig& cfg) {
    if (static_cast<int>(u.size()) != grid.total())
        throw PreconditionFailed("sibony_verify: value table size mismatch");
    SibonyReport rep;
    for (int node = 0; node < grid.total(); ++node) {
        const double v = u[static_cast<std::size_t>(node)];
        if (!(v >= 0.0) || !(v <= 1.0))
            throw PreconditionFailed("sibony_verify: u outside [0,1] at node " +
                                     std::to_string(node));
    }
    if (std::fabs(u[static_cast<std::size_t>(grid.origin)]) > 1e-12)
        throw PreconditionFailed("sibony_verify: u(0) != 0");

    // discrete subharmonicity of log u, vacuous where the stencil meets a zero
    rep.precondition_ok = true;
    for (int node = 0; node < grid.num_interior && rep.precondition_ok; ++node) {
        const auto& nb = grid.neighbors[static_cast<std::size_t>(node)];
        const auto& arm = grid.arm[static_cast<std::size_t>(node)];
        const double center = u[static_cast<std::size_t>(node)];
        if (center == 0.0) continue;
        bool vacuous = false;
        double acc = 0.0;
        for (int d = 0; d < 4; ++d) {
            const double vn = u[static_cast<std::size_t>(nb[d])];
            if (vn == 0.0) {
                vacuous = true;
                break;
            }
            acc += (std::log(vn) - std::log(center)) / arm[d];
        }
        if (vacuous) continue;
        if (grid.h / 4.0 * acc < -cfg.tau_sub) {
            rep.precondition_ok = false;
            rep.precondition_node = node;
        }
    }

    // conclusion (a): u(z) <= |z|^2 + tau, with equality diagnostics
    rep.bound_pass = true;
    rep.equality_bound = true;
    for (int node = 0; node < grid.total(); ++node) {
        const double zx = grid.x[static_cast<std::size_t>(node)];
        const double zy = grid.y[static_cast<std::size_t>(node)];
        const double z2 = zx * zx + zy * zy;
        const double excess = u[static_cast<std::size_t>(node)] - z2;
        if (excess > cfg.tau && excess > rep.bound_excess) {
            rep.bound_excess = excess;
            rep.bound_node = node;
            rep.bound_pass = false;
        }
        if (std::fabs(excess) > cfg.tau_eq) rep.equality_bound = false;
    }

    // conclusion (b): discrete Laplacian at the origin <= 4 + tau
    {
        const auto& nb = grid.neighbors[static_cast<std::size_t>(grid.origin)];
        const auto& arm = grid.arm[static_cast<std::size_t>(grid.origin)];
        double acc = 0.0;
        for (int d = 0; d < 4; ++d)
            acc += (u[static_cast<std::size_t>(nb[d])] - u[static_cast<std::size_t>(grid.origin)]) /
                   arm[d];
        rep.delta0 = acc / grid.h;
        rep.delta_pass = rep.delta0 <= 4.0 + cfg.tau;
        rep.equality_delta = std::fabs(rep.delta0 - 4.0) <= cfg.tau_eq;
    }
    return rep;
}

SibonyReport sibony_verify(const DiscGrid& grid, const std::function<double(double, double)>& u,
                           const SibonyConfig& cfg) {
    std::vector<double> vals(static_cast<std::size_t>(grid.total()));
    for (int node = 0; node < grid.total(); ++node)
        vals[static_cast<std::size_t>(node)] =
            u(grid.x[static_cast<std::size_t>(node)], grid.y[static_cast<std::size_t>(node)]);
    return sibony_verify(grid, vals, cfg);
}

Witness make_threshold_witness(const MapFamily& f, const SchwarzFamily& family, double k) {
    Witness w;
    for (int n = 0; n < f.count; ++n) {
        const Vec base = f.eval(n, {0.0, 0.0});
        const double kappa_cap = 0.9; // keeps 2|t| + |kappa| < 1 at t = 0
        // first threshold crossing; a plain bisection from the cap can miss
        // it when periodic targets wrap the displacement back down
        const int scan = 512;
        double hit = -1.0;
        for (int j = 1; j <= scan; ++j) {
            const double kap = kappa_cap * j / scan;
            if (family.J(base, f.eval(n, {kap, 0.0})) >= k) {
                hit = kap;
                break;
            }
        }
        if (hit < 0.0)
            throw WitnessInvalid("no kappa with J >= " + std::to_string(k) + " at family index " +
                                 std::to_string(n));
        double lo = hit - kappa_cap / scan, hi = hit;
        for (int iter = 0; iter < 40; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (family.J(base, f.eval(n, {mid, 0.0})) >= k) hi = mid;
            else lo = mid;
        }
        w.t_tilde.push_back({0.0, 0.0});
        w.kappa_tilde.push_back({hi, 0.0});
    }
    return w;
}

namespace {

double eval_J_displacement(const MapFamily& f, const SchwarzFamily& family, int n,
                           std::complex<double> t, std::complex<double> kappa) {
    return family.J(f.eval(n, t), f.eval(n, t + kappa));
}

} // namespace

RescalingSequence zalcman_rescale(const MapFamily& f, const SchwarzFamily& family, double k,
                                  const Witness& witness, const ZalcmanConfig& cfg) {
    if (!(k > 0.0) || k > 1.0) throw PreconditionFailed("zalcman threshold k must be in (0, 1]");
    if (static_cast<int>(witness.t_tilde.size()) < f.count ||
        static_cast<int>(witness.kappa_tilde.size()) < f.count)
        throw WitnessInvalid("witness shorter than the family prefix");

    // hypothesis (iv): 2|t| + |kappa| < 1, J >= k, kappa -> 0
    for (int n = 0; n < f.count; ++n) {
        const std::complex<double> t = witness.t_tilde[static_cast<std::size_t>(n)];
        const std::complex<double> kap = witness.kappa_tilde[static_cast<std::size_t>(n)];
        if (!(2.0 * std::abs(t) + std::abs(kap) < 1.0))
            throw WitnessInvalid("witness violates 2|t| + |kappa| < 1 at index " +
                                 std::to_string(n));
        const double j = eval_J_displacement(f, family, n, t, kap);
        if (!(j >= k))
            throw WitnessInvalid("witness displacement J = " + std::to_string(j) + " < k at index " +
                                 std::to_string(n));
    }
    const double kap_first = std::abs(witness.kappa_tilde.front());
    const double kap_last = std::abs(witness.kappa_tilde[static_cast<std::size_t>(f.count - 1)]);
    if (!(kap_last <= 0.5 * kap_first))
        throw WitnessInvalid("witness kappa does not tend to zero (|kappa_last| = " +
                             std::to_string(kap_last) + " vs |kappa_first| = " +
                             std::to_string(kap_first) + ")");
    for (int n = f.count / 2; n + 1 < f.count; ++n)
        if (!(std::abs(witness.kappa_tilde[static_cast<std::size_t>(n + 1)]) <
              std::abs(witness.kappa_tilde[static_cast<std::size_t>(n)])))
            throw WitnessInvalid("witness kappa tail is not strictly decreasing at index " +
                                 std::to_string(n));

    RescalingSequence seq;
    for (int n = 0; n < f.count; ++n) {
        const std::complex<double> t_w = witness.t_tilde[static_cast<std::size_t>(n)];
        const double kap_w = std::abs(witness.kappa_tilde[static_cast<std::size_t>(n)]);

        // candidate centers around the witness, candidate directions for kappa
        double best_score = -1.0;
        std::complex<double> best_t = t_w, best_kappa = witness.kappa_tilde[static_cast<std::size_t>(n)];
        for (int ti = 0; ti < cfg.t_grid; ++ti) {
            std::complex<double> t = t_w;
            if (ti > 0) {
                const double ang = 2.0 * 3.14159265358979323846 * (ti - 1) / (cfg.t_grid - 1);
                t += 0.5 * kap_w * std::polar(1.0, ang);
            }
            if (2.0 * std::abs(t) + kap_w >= 1.0) continue;
            for (int di = 0; di < cfg.kappa_dirs; ++di) {
                const double ang = 2.0 * 3.14159265358979323846 * di / cfg.kappa_dirs;
                const std::complex<double> dir = std::polar(1.0, ang);
                // smallest |kappa| along dir reaching the threshold (scan
                // first: wrapping targets are not monotone in |kappa|)
                const double cap = 0.45;
                const int scan = 256;
                double hit = -1.0;
                for (int j = 1; j <= scan; ++j) {
                    const double kap = cap * j / scan;
                    if (eval_J_displacement(f, family, n, t, kap * dir) >= k) {
                        hit = kap;
                        break;
                    }
                }
                if (hit < 0.0) continue;
                double lo = hit - cap / scan, hi = hit;
                for (int iter = 0; iter < cfg.bisect_iters; ++iter) {
                    const double mid = 0.5 * (lo + hi);
                    if (eval_J_displacement(f, family, n, t, mid * dir) >= k) hi = mid;
                    else lo = mid;
                }
                const double margin = (1.0 - std::abs(t)) / hi;
                if (margin > best_score) {
                    best_score = margin;
                    best_t = t;
                    best_kappa = hi * dir;
                }
            }
        }
        if (best_score < 0.0)
            throw ExtractionFailed("no (t, kappa) reaches the threshold at index " +
                                   std::to_string(n));

        RescalingStep step;
        step.t_n = best_t;
        step.kappa_n = best_kappa;
        step.R_n = (1.0 - std::abs(best_t)) / std::abs(best_kappa) - (1.0 + family.alpha_plus);
        if (!(step.R_n > 0.0))
            throw ExtractionFailed("domain margin too small at index " + std::to_string(n));
        step.j_displacement = eval_J_displacement(f, family, n, best_t, best_kappa);
        if (!(step.j_displacement >= k))
            throw ExtractionFailed("conclusion (b) threshold failed at index " +
                                   std::to_string(n));

        // sampled gauge check: J_{g(t)}(g(t+u)) <= s(|u|) on t in R_n D, u in alpha^- D
        double violation = 0.0;
        for (int ts = 0; ts < cfg.gauge_samples_t; ++ts) {
            const double tr = step.R_n * (ts + 0.5) / cfg.gauge_samples_t;
            const std::complex<double> tt = step.t_n + step.kappa_n * std::complex<double>(tr, 0.0);
            for (int us = 1; us <= cfg.gauge_samples_u; ++us) {
                const double ur = family.alpha_minus * us / (cfg.gauge_samples_u + 1.0);
                const std::complex<double> uu(ur * 0.70710678, ur * 0.70710678);
                const Vec a = f.eval(n, tt);
                const Vec b = f.eval(n, tt + step.kappa_n * uu);
                const double j = family.J(a, b);
                violation = std::max(violation, j - family.gauge(ur));
            }
        }
        step.gauge_violation = violation;
        seq.steps.push_back(step);
    }

    for (const RescalingStep& s : seq.steps)
        if (!(std::abs(s.t_n) + std::abs(s.kappa_n) < 1.0)) seq.contraction_bounds_ok = false;
    for (std::size_t n = seq.steps.size() / 2; n + 1 < seq.steps.size(); ++n) {
        if (!(std::abs(seq.steps[n + 1].kappa_n) < std::abs(seq.steps[n].kappa_n)))
            seq.kappa_decreasing = false;
        if (!(seq.steps[n + 1].R_n > seq.steps[n].R_n)) seq.radii_increasing = false;
    }
    return seq;
}

BrodyResult brody_extract(const MapFamily& f, const SchwarzFamily& family, double k,
                          const ChartedMetric& target, const BrodyConfig& cfg) {
    BrodyResult res;
    try {
        const Witness w = make_threshold_witness(f, family, k);
        res.sequence = zalcman_rescale(f, family, k, w, cfg.zalcman);
    } catch (const WitnessInvalid& e) {
        res.reason = e.what();
        return res;
    } catch (const ExtractionFailed& e) {
        res.reason = e.what();
        return res;
    }

    const auto g_eval = [&](int n, std::complex<double> t) {
        const RescalingStep& s = res.sequence.steps[static_cast<std::size_t>(n)];
        return f.eval(n, s.t_n + s.kappa_n * t);
    };

    // Cauchy-in-n on each usable radius
    for (double radius : cfg.radius_list) {
        std::vector<int> usable;
        for (int n = 0; n < static_cast<int>(res.sequence.steps.size()); ++n)
            if (res.sequence.steps[static_cast<std::size_t>(n)].R_n >= radius) usable.push_back(n);
        if (usable.size() < 2) continue;
        const int a = usable[usable.size() - 2];
        const int b = usable.back();
        double gap = 0.0;
        for (int s = 0; s < cfg.cauchy_samples; ++s) {
            const double ang = 2.0 * 3.14159265358979323846 * s / cfg.cauchy_samples;
            const double rad = radius * ((s % 4) + 1) / 4.0;
            const std::complex<double> t = std::polar(rad, ang);
            gap = std::max(gap, target.chart_dist(g_eval(a, t), g_eval(b, t)));
        }
        res.cauchy_gaps.push_back(gap);
    }
    const bool cauchy_ok =
        !res.cauchy_gaps.empty() &&
        *std::max_element(res.cauchy_gaps.begin(), res.cauchy_gaps.end()) <= cfg.tau_cauchy;

    // limit proxy: the deepest g_n; nonconstancy via the J displacement
    const int n_star = static_cast<int>(res.sequence.steps.size()) - 1;
    res.j_limit = family.J(g_eval(n_star, {0.0, 0.0}), g_eval(n_star, {1.0, 0.0}));

    // weakly conformal harmonicity of the limit on the largest usable radius
    double radius = 0.0;
    for (double r : cfg.radius_list)
        if (res.sequence.steps[static_cast<std::size_t>(n_star)].R_n >= r) radius = std::max(radius, r);
    if (radius > 0.0) {
        auto grid = make_disc_grid(cfg.resolution);
        DiscMap limit = make_disc_map(grid, target, [&](double x, double y) {
            return g_eval(n_star, std::complex<double>(radius * x, radius * y));
        });
        res.limit_tension = tension_residual(limit);
        const WeaklyConformalResult wc = weakly_conformal_check(limit, cfg.tau_c);
        res.limit_defect = wc.worst_defect;
        if (cauchy_ok && res.j_limit >= k / 2.0 && wc.pass) {
            res.verdict = BrodyVerdict::NonconstantLimit;
            res.reason = "nonconstant weakly conformal harmonic limit";
        } else {
            res.reason = cauchy_ok ? "limit failed the nonconstancy or conformality checks"
                                   : "rescaled prefix is not Cauchy at the probed radii";
        }
    } else {
        res.reason = "no radius in the list fits the extracted domains";
    }
    return res;
}

MapFamily make_torus_affine_family(const Vec& v0, int count) {
    MapFamily fam;
    fam.count = count;
    const double vx = v0[0], vy = v0[1];
    fam.eval = [vx, vy](int n, std::complex<double> z) -> Vec {
        // (n+1) z v0 as complex multiplication, universal cover coordinates
        const std::complex<double> v(vx, vy);
        const std::complex<double> w = static_cast<double>(n + 1) * z * v;
        return {w.real(), w.imag()};
    };
    return fam;
}

std::string rescaling_to_json(const RescalingSequence& seq) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"steps\":[";
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        const RescalingStep& s = seq.steps[i];
        out << (i ? "," : "") << "{\"t\":[" << s.t_n.real() << "," << s.t_n.imag()
            << "],\"kappa\":[" << s.kappa_n.real() << "," << s.kappa_n.imag() << "],\"R\":" << s.R_n
            << ",\"J\":" << s.j_displacement << ",\"gauge_violation\":" << s.gauge_violation
            << "}";
    }
    out << "],\"contraction_bounds_ok\":" << (seq.contraction_bounds_ok ? "true" : "false")
        << ",\"kappa_decreasing\":" << (seq.kappa_decreasing ? "true" : "false")
        << ",\"radii_increasing\":" << (seq.radii_increasing ? "true" : "false") << "}";
    return out.str();
}

std::string brody_to_json(const BrodyResult& res) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"verdict\":\""
        << (res.verdict == BrodyVerdict::NonconstantLimit ? "NONCONSTANT_LIMIT" : "INCONCLUSIVE")
        << "\",\"reason\":\"" << res.reason << "\",\"j_limit\":" << res.j_limit
        << ",\"limit_tension\":" << res.limit_tension << ",\"limit_defect\":" << res.limit_defect
        << ",\"cauchy_gaps\":[";
    for (std::size_t i = 0; i < res.cauchy_gaps.size(); ++i)
        out << (i ? "," : "") << res.cauchy_gaps[i];
    out << "],\"sequence\":" << rescaling_to_json(res.sequence) << "}";
    return out.str();
}

} // namespace koblab
