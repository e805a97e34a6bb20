// koblab command line front door: load a manifold spec, run an experiment,
// write the result file. Exit codes: 0 success, 2 config error, 3 numerical
// failure, 4 certificate/extraction failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "koblab/curvature.hpp"
#include "koblab/disc.hpp"
#include "koblab/errors.hpp"
#include "koblab/kobayashi.hpp"
#include "koblab/manifold_spec.hpp"
#include "koblab/parallel.hpp"
#include "koblab/pinched.hpp"
#include "koblab/renormalize.hpp"
#include "koblab/version.hpp"

using nlohmann::json;
using namespace koblab;

namespace {

int log_level() {
    const char* env = std::getenv("KOBLAB_LOG");
    return env ? std::atoi(env) : 0;
}

void log_line(const std::string& msg) {
    if (log_level() > 0) std::cerr << "[koblab] " << msg << "\n";
}

struct GlobalOpts {
    std::string spec_path;
    std::string out_path;
    std::string format = "json";
    unsigned seed = 12345;
    int threads = 0;
    double tol_h = 1e-4;
    double tol_c = 1e-2;
};

void write_output(const GlobalOpts& g, const std::string& text) {
    if (g.out_path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(g.out_path);
    if (!out) throw Error("cannot open output file " + g.out_path);
    out << text << "\n";
}

json resolved_config(const GlobalOpts& g, const std::string& command) {
    json cfg;
    cfg["command"] = command;
    cfg["spec"] = g.spec_path;
    cfg["format"] = g.format;
    cfg["seed"] = g.seed;
    cfg["threads"] = g.threads;
    cfg["tol_h"] = g.tol_h;
    cfg["tol_c"] = g.tol_c;
    return cfg;
}

json vec_json(const Vec& v) {
    json out = json::array();
    for (double x : v) out.push_back(x);
    return out;
}

Vec parse_point(const std::vector<double>& raw, int dim, const char* what) {
    if (static_cast<int>(raw.size()) != dim)
        throw SpecParseError(std::string(what) + " needs exactly dim components");
    return Vec(raw.begin(), raw.end());
}

int run_curvature(const GlobalOpts& g, int samples) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    const CurvatureBounds b = curvature_bounds_scan(m, samples, g.seed);
    if (g.format == "csv") {
        std::ostringstream out;
        out.precision(17);
        for (int i = 0; i < m.dim; ++i) out << "p" << (i + 1) << ",";
        out << "K\n";
        for (const auto& [x, k] : b.records) {
            for (double c : x) out << c << ",";
            out << k << "\n";
        }
        write_output(g, out.str());
        return 0;
    }
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "curvature");
    out["config"]["samples"] = samples;
    out["k_min"] = b.k_min;
    out["k_max"] = b.k_max;
    json recs = json::array();
    for (const auto& [x, k] : b.records) recs.push_back({{"p", vec_json(x)}, {"K", k}});
    out["samples"] = recs;
    write_output(g, out.dump(2));
    return 0;
}

int run_disc(const GlobalOpts& g, const std::vector<double>& p_raw,
             const std::vector<double>& v_raw, const std::vector<double>& w_raw, double radius,
             int resolution, const std::string& dump_path) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    const Vec p = parse_point(p_raw, m.dim, "--p");
    const Vec v = parse_point(v_raw, m.dim, "--v");
    const Vec w = parse_point(w_raw, m.dim, "--w");
    JetConfig jc;
    jc.resolution = resolution;
    jc.tau_h = g.tol_h;
    jc.tau_c = g.tol_c;
    const JetDiscResult jd = jet_disc(m, p, v, w, radius, jc);
    if (!dump_path.empty()) {
        std::ofstream csv(dump_path);
        csv << disc_to_csv(jd.disc);
    }
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "disc");
    out["config"]["p"] = vec_json(p);
    out["config"]["v"] = vec_json(v);
    out["config"]["w"] = vec_json(w);
    out["config"]["radius"] = radius;
    out["config"]["resolution"] = resolution;
    out["report"] = json::parse(solve_report_to_json(jd.report));
    out["jet"] = vec_json(jd.jet);
    out["jet_scale"] = jd.jet_scale;
    out["jet_drift"] = jd.jet_drift;
    out["admissible"] = jd.admissible;
    write_output(g, out.dump(2));
    return 0;
}

int run_metric(const GlobalOpts& g, const std::vector<double>& p_raw,
               const std::vector<double>& xi_raw, double r_max, int resolution, double pinch_c) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    const Vec p = parse_point(p_raw, m.dim, "--p");
    const Vec xi = parse_point(xi_raw, m.dim, "--xi");
    SearchBudget budget;
    budget.r_max = r_max;
    budget.resolution = resolution;
    budget.tau_h = g.tol_h;
    budget.tau_c = g.tol_c;
    budget.rng_seed = g.seed;
    KobayashiEstimate est = kobayashi_royden_upper(m, p, xi, budget);
    if (pinch_c > 0.0) est.lower = kobayashi_royden_lower(m, p, xi, pinch_c, 64, g.seed);
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "metric");
    out["config"]["p"] = vec_json(p);
    out["config"]["xi"] = vec_json(xi);
    out["config"]["budget_radius"] = r_max;
    out["config"]["resolution"] = resolution;
    if (pinch_c > 0.0) out["config"]["pinch_c"] = pinch_c;
    out["estimate"] = json::parse(estimate_to_json(p, xi, est));
    write_output(g, out.dump(2));
    const bool bracket_nonempty = std::isfinite(est.upper) && est.bracket_ok(0.1);
    return bracket_nonempty ? 0 : 4;
}

int run_distance(const GlobalOpts& g, const std::vector<double>& p_raw,
                 const std::vector<double>& q_raw, const std::string& mode) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    const Vec p = parse_point(p_raw, m.dim, "--p");
    const Vec q = parse_point(q_raw, m.dim, "--q");
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "distance");
    out["config"]["p"] = vec_json(p);
    out["config"]["q"] = vec_json(q);
    out["config"]["mode"] = mode;
    double chain_value = 0.0, integ_value = 0.0;
    if (mode == "chain" || mode == "both") {
        ChainConfig cc;
        cc.rng_seed = g.seed;
        cc.tau_h = g.tol_h;
        cc.tau_c = g.tol_c;
        const ChainDistanceResult r = chain_distance(m, p, q, cc);
        chain_value = r.value;
        out["chain"] = json::parse(chain_result_to_json(p, q, r));
    }
    if (mode == "integrated" || mode == "both") {
        PathConfig pc;
        pc.rng_seed = g.seed;
        const IntegratedDistanceResult r = integrated_distance(m, p, q, pc);
        integ_value = r.value;
        out["integrated"] = json::parse(integrated_result_to_json(p, q, r));
    }
    if (mode == "both") {
        const double denom = std::max(1e-300, std::max(chain_value, integ_value));
        out["relative_gap"] = std::fabs(chain_value - integ_value) / denom;
    }
    write_output(g, out.dump(2));
    return 0;
}

int run_certify(const GlobalOpts& g, double c, double eps0, int k0, double r0, int samples) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    std::mt19937_64 rng(g.seed);
    std::vector<Vec> p_samples;
    for (int i = 0; i < samples; ++i) p_samples.push_back(sample_point(m, rng, 0.4));
    T0Config tc;
    tc.r0 = r0;
    const double t0 = find_t0(m, eps0, k0, p_samples, tc);
    log_line("t0 = " + std::to_string(t0));
    BiLipschitzConfig bc;
    bc.rng_seed = g.seed;
    bc.budget.tau_h = g.tol_h;
    bc.budget.tau_c = g.tol_c;
    const BiLipschitzCertificate cert = bilipschitz_verify(m, c, t0, bc);
    std::cout << certificate_summary(cert);
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "certify");
    out["config"]["c"] = c;
    out["config"]["eps0"] = eps0;
    out["config"]["k0"] = k0;
    out["config"]["r0"] = r0;
    out["config"]["samples"] = samples;
    out["certificate"] = json::parse(certificate_to_json(cert));
    write_output(g, out.dump(2));
    return cert.pass ? 0 : 4;
}

int run_brody(const GlobalOpts& g, double k, int count, const std::vector<double>& v0_raw) {
    const ChartedMetric m = load_manifold_spec(g.spec_path);
    Vec v0 = {1.0, 0.5};
    if (!v0_raw.empty()) v0 = parse_point(v0_raw, 2, "--v0");
    MapFamily family_maps;
    if (m.dim != 2) throw SpecParseError("brody families are two-dimensional");
    family_maps = make_torus_affine_family(v0, count);
    const double a_const = find_log_A(m, Vec(static_cast<std::size_t>(m.dim), 0.0));
    const SchwarzFamily fam = make_psi_family(m, a_const);
    const BrodyResult res = brody_extract(family_maps, fam, k, m);
    json out;
    out["version"] = KOBLAB_VERSION;
    out["config"] = resolved_config(g, "brody");
    out["config"]["k"] = k;
    out["config"]["count"] = count;
    out["config"]["v0"] = vec_json(v0);
    out["config"]["A"] = a_const;
    out["trace"] = json::parse(brody_to_json(res));
    write_output(g, out.dump(2));
    return res.verdict == BrodyVerdict::NonconstantLimit ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"koblab: Kobayashi-Royden pseudometric laboratory"};
    app.set_version_flag("--version", KOBLAB_VERSION);

    GlobalOpts g;
    app.add_option("--spec", g.spec_path, "manifold spec file (JSON)");
    app.add_option("--out", g.out_path, "output path (stdout when omitted)");
    app.add_option("--format", g.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", g.seed, "rng seed");
    app.add_option("--threads", g.threads, "worker cap (0 = hardware)");
    app.add_option("--tol-h", g.tol_h, "tension residual tolerance");
    app.add_option("--tol-c", g.tol_c, "conformality tolerance");
    app.require_subcommand(1);

    int samples = 100;
    auto* curvature = app.add_subcommand("curvature", "sectional curvature bounds scan");
    curvature->add_option("--samples", samples, "(point, plane) samples");

    std::vector<double> p_raw, q_raw, v_raw, w_raw, xi_raw, v0_raw;
    double radius = 0.2;
    int resolution = 65;
    std::string dump_path;
    auto* disc = app.add_subcommand("disc", "solve one prescribed-jet disc");
    disc->add_option("--p", p_raw, "base point")->expected(-1);
    disc->add_option("--v", v_raw, "first tangent direction")->expected(-1);
    disc->add_option("--w", w_raw, "second tangent direction")->expected(-1);
    disc->add_option("--radius", radius, "jet radius");
    disc->add_option("--resolution", resolution, "grid resolution (odd)");
    disc->add_option("--dump", dump_path, "CSV dump path for the disc values");

    double r_max = 2.0, pinch_c = 0.0;
    auto* metric = app.add_subcommand("metric", "Kobayashi-Royden estimate at (p, xi)");
    metric->add_option("--p", p_raw, "base point")->expected(-1);
    metric->add_option("--xi", xi_raw, "tangent vector")->expected(-1);
    metric->add_option("--budget-radius", r_max, "largest disc radius in the search");
    metric->add_option("--resolution", resolution, "grid resolution (odd)");
    metric->add_option("--pinch-c", pinch_c, "certified pinch constant for the lower bound");

    std::string mode = "both";
    auto* distance = app.add_subcommand("distance", "chain / integrated pseudodistance");
    distance->add_option("--p", p_raw, "start point")->expected(-1);
    distance->add_option("--q", q_raw, "end point")->expected(-1);
    distance->add_option("--mode", mode, "chain|integrated|both")
        ->check(CLI::IsMember({"chain", "integrated", "both"}));

    double c = 1.0, eps0 = 0.05, r0 = 0.5;
    int k0 = 3, cert_samples = 6;
    auto* certify = app.add_subcommand("certify", "bi-Lipschitz certificate");
    certify->add_option("--c", c, "pinch constant");
    certify->add_option("--eps0", eps0, "C^k closeness tolerance");
    certify->add_option("--k0", k0, "derivative order");
    certify->add_option("--r0", r0, "quasi-bounded radius");
    certify->add_option("--samples", cert_samples, "base points for the t0 search");

    double k_threshold = 0.1;
    int count = 16;
    auto* brody = app.add_subcommand("brody", "Zalcman extraction on the affine family");
    brody->add_option("--k", k_threshold, "displacement threshold");
    brody->add_option("--count", count, "family prefix length");
    brody->add_option("--v0", v0_raw, "family direction (2 components)")->expected(-1);

    CLI11_PARSE(app, argc, argv);
    set_thread_cap(g.threads);

    try {
        if (g.spec_path.empty()) throw SpecParseError("--spec is required");
        if (curvature->parsed()) return run_curvature(g, samples);
        if (disc->parsed())
            return run_disc(g, p_raw, v_raw, w_raw, radius, resolution, dump_path);
        if (metric->parsed()) return run_metric(g, p_raw, xi_raw, r_max, resolution, pinch_c);
        if (distance->parsed()) return run_distance(g, p_raw, q_raw, mode);
        if (certify->parsed()) return run_certify(g, c, eps0, k0, r0, cert_samples);
        if (brody->parsed()) return run_brody(g, k_threshold, count, v0_raw);
        return 2;
    } catch (const SpecParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CertificateFailure& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return 4;
    } catch (const WitnessInvalid& e) {
        std::cerr << "extraction refused: " << e.what() << "\n";
        return 4;
    } catch (const ExtractionFailed& e) {
        std::cerr << "extraction failed: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
