#ifndef KOBLAB_PINCHED_HPP
#define KOBLAB_PINCHED_HPP

#include <optional>
#include <string>
#include <vector>

#include "koblab/disc.hpp"
#include "koblab/geodesic.hpp"
#include "koblab/kobayashi.hpp"
#include "koblab/metric.hpp"

namespace koblab {

struct T0Config {
    double r0 = 0.5;         // quasi-bounded radius certified upstream
    double ck_spacing = 0.4; // FD lattice spacing over the radius-2 ball
    int pullback_steps = 48;
    int bisection_iters = 10;
    double t_floor_factor = 1.0 / 1024.0; // NoScaleFound below r0/2 * this
};

// Largest probed scale t0 < r0/2 with max_p |h^t0_p - h(p)|_{C^k0(ball 2)}
// below eps0; bisection on a criterion monotone in t.
double find_t0(const ChartedMetric& m, double eps0, int k0, const std::vector<Vec>& p_samples,
               const T0Config& cfg = {});

struct ClaimConfig {
    int resolution = 33;
    double tau_h = 1e-4;
    double tau_c = 1e-2;
    int max_iter = 8000;
    double tau_alpha = 0.05; // ClaimFailure below 1/2 - tau_alpha
    double eps0 = 0.05;      // hypothesis bound, re-verified at C^0
    bool verify_c0 = true;
    bool tabulate = true;    // interpolate slow pullback charts before relaxing
    double tab_spacing = 0.08;
};

struct ClaimResult {
    DiscMap disc;     // conformal harmonic disc for the perturbed metric
    SolveReport report;
    double alpha;     // h(p)-component of du(0).e1 along v/|v|
};

// The near-flat jet disc of the Claim: the flat orthonormal seed
// x v/|v| + y w/|w| relaxed under the perturbed metric hp_t; requires
// h(p)(v, w) = 0 and alpha >= 1/2 - tau_alpha.
ClaimResult claim_disc(const ChartedMetric& hp_t, const Vec& v, const Vec& w,
                       const ClaimConfig& cfg = {});

struct UpperCertResult {
    double bound = 0.0;          // 2 sqrt(h(p)(v,v)) / t0
    double measured_upper = 0.0; // F upper estimate from the composite disc
    double alpha = 0.0;
    bool composite_admissible = false;
    bool ok = false; // measured_upper <= bound * (1 + tau_gap)
};

struct UpperCertConfig {
    ClaimConfig claim;
    double tau_gap = 0.1;
    int composite_steps = 48; // geodesic steps per unit length for exp
    int polish_iters = 2000;  // post-composition relaxation budget
};

// The scale-composition upper bound: builds exp_p(t0 * claim disc) and
// checks that it realizes F(p, v) <= 2 sqrt(h(p)(v,v)) / t0.
UpperCertResult upper_bound_certificate(const ChartedMetric& m, const Vec& p, const Vec& v,
                                        double t0, const UpperCertConfig& cfg = {});

struct BiLipschitzRow {
    Vec p;
    Vec v;
    double lower = 0.0;      // sqrt(c/8) |v|_h
    double upper = 0.0;      // min(search upper, certificate bound)
    double cert_bound = 0.0; // 2 |v|_h / t0
    bool ok = false;
};

struct BiLipschitzCertificate {
    std::string model;
    double c = 0.0;
    double t0 = 0.0;
    double lower_const = 0.0; // sqrt(c/8)
    double upper_const = 0.0; // 2 / t0
    double big_c = 0.0;       // max(2/t0, sqrt(8/c))
    double tau_gap = 0.0;
    std::vector<BiLipschitzRow> rows;
    bool pass = false;
};

struct BiLipschitzConfig {
    int point_samples = 10;
    int dirs_per_point = 5;
    double sample_margin = 0.4; // keep base points away from the chart edge
    SearchBudget budget;        // upper-estimate search per row
    ClaimConfig claim;
    double tau_gap = 0.1;
    unsigned rng_seed = 515;
    int scan_samples = 64;
    BiLipschitzConfig() {
        budget.resolution = 33;
        budget.max_iter = 6000;
    }
};

// Two-sided comparison of the Kobayashi-Royden estimates with the metric
// norm on sampled (p, v) rows; throws CertificateFailure listing offenders.
BiLipschitzCertificate bilipschitz_verify(const ChartedMetric& m, double c, double t0,
                                          const BiLipschitzConfig& cfg = {});

std::string certificate_to_json(const BiLipschitzCertificate& cert);
std::string certificate_summary(const BiLipschitzCertificate& cert);
std::string quasi_bounded_to_json(const QuasiBoundedReport& rep);

} // namespace koblab

#endif
