#ifndef KOBLAB_RENORMALIZE_HPP
#define KOBLAB_RENORMALIZE_HPP

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "koblab/disc.hpp"
#include "koblab/metric.hpp"

namespace koblab {

// Basepoint-indexed displacement family with the Schwarz-property data:
// threshold c, working radii alpha_minus < alpha_plus, and the gauge s.
struct SchwarzFamily {
    std::function<double(const Vec&, const Vec&)> J; // J_eta(eta_tilde)
    double alpha_minus = 0.25;
    double alpha_plus = 0.5;
    double c = 1.0;
    std::function<double(double)> s; // gauge, s(0) = 0, continuous at 0

    double gauge(double t) const { return s(t); }
};

// Smooth nondecreasing cap: psi(t) = t for t <= 1/2, psi(t) = 1 for t >= 3/4.
double psi_cap_profile(double t);

// Psi_q(x) = psi(|x - x(q)|^2) exp(A psi(|x - x(q)|)), constant exp(A)
// outside the cap region. Requires the chart to contain the radius-3 ball
// around q (ChartTooSmall otherwise).
std::function<double(const Vec&)> psi_cap(const ChartedMetric& m, const Vec& q_point, double A);

// The (Psi_q) family as a SchwarzFamily with the quadratic gauge
// s(t) = (c / alpha_plus^2) t^2 calibrated from the Sibony bound. Does not
// enforce the radius-3 precondition per basepoint; psi_cap does.
SchwarzFamily make_psi_family(const ChartedMetric& m, double A);

struct MpshReport {
    bool pass = true;
    int worst_disc = -1;
    int worst_node = -1;
    double worst_value = 0.0; // most negative sub-mean-value margin
};

// Discrete sub-mean-value check of rho composed with each disc: the
// arm-weighted 4-neighbor average minus the center stays >= -tau_sh.
MpshReport mpsh_test(const std::function<double(const Vec&)>& rho,
                     const std::vector<DiscMap>& discs, double tau_sh);

struct LogAConfig {
    int disc_budget = 12;      // stress discs per probe
    int resolution = 65;
    double tau_sh = 1e-3;
    double a_first = 0.25;
    double a_max = 64.0;
    double base_dist = 0.45;   // basepoint distance from the singular point
    double disc_radius = 0.18; // keeps images clear of the singularity
    int pullback_steps = 48;
    unsigned rng_seed = 31;
    double normal_radius = 1.5;
};

// Doubling search for the A making log|x| + A|x| pass mpsh_test on a stress
// family of jet discs in the normal chart at p.
double find_log_A(const ChartedMetric& m, const Vec& p, const LogAConfig& cfg = {});

struct SibonyReport {
    bool precondition_ok = false;
    int precondition_node = -1; // violating node when not ok
    bool bound_pass = false;    // u(z) <= |z|^2 + tau at all nodes
    int bound_node = -1;
    double bound_excess = 0.0;
    double delta0 = 0.0; // discrete Laplacian of u at the origin
    bool delta_pass = false;
    bool equality_bound = false; // u == |z|^2 within tau_eq everywhere
    bool equality_delta = false; // delta0 == 4 within tau_eq
    bool pass() const { return precondition_ok && bound_pass && delta_pass; }
};

struct SibonyConfig {
    double tau = 1e-6;    // conclusion slack
    double tau_eq = 1e-6; // equality diagnostics slack
    // The discrete sub-mean of log u at distance m*h from an interior zero
    // carries an irreducible -k/(4 m^4) truncation term, so this slack only
    // screens gross violations of the subharmonicity hypothesis.
    double tau_sub = 0.1;
};

// Sibony Schwarz lemma checks for a grid function u: preconditions
// 0 <= u <= 1, u(0) = 0, log u discretely subharmonic (vacuous at zeros),
// conclusions u <= |z|^2 and Lap u(0) <= 4, with equality diagnostics.
// Throws PreconditionFailed only for the range/origin preconditions; a
// failing subharmonicity precondition is reported, not thrown, so negative
// controls can be inspected.
SibonyReport sibony_verify(const DiscGrid& grid, const std::vector<double>& u,
                           const SibonyConfig& cfg = {});
SibonyReport sibony_verify(const DiscGrid& grid,
                           const std::function<double(double, double)>& u,
                           const SibonyConfig& cfg = {});

// Indexed family of maps from the closed unit disc into the chart. Values
// must be finite-difference friendly: periodic targets return universal
// cover coordinates (unwrapped).
struct MapFamily {
    std::function<Vec(int, std::complex<double>)> eval;
    int count = 16;
};

struct Witness {
    std::vector<std::complex<double>> t_tilde;
    std::vector<std::complex<double>> kappa_tilde;
};

// Bisects kappa along the positive real direction to the J-threshold k at
// t = 0 for each n; throws WitnessInvalid when no kappa reaches k.
Witness make_threshold_witness(const MapFamily& f, const SchwarzFamily& family, double k);

struct RescalingStep {
    std::complex<double> t_n;
    std::complex<double> kappa_n;
    double R_n = 0.0;
    double j_displacement = 0.0; // J_{g_n(0)}(g_n(1))
    double gauge_violation = 0.0;
};

struct RescalingSequence {
    std::vector<RescalingStep> steps;
    bool contraction_bounds_ok = true; // |t_n| + |kappa_n| < 1 for all n
    bool kappa_decreasing = true;      // strict on the tail
    bool radii_increasing = true;      // strict on the tail
};

struct ZalcmanConfig {
    int t_grid = 5;          // candidate centers around the witness
    int kappa_dirs = 4;      // candidate directions
    int bisect_iters = 40;
    int gauge_samples_t = 6; // verification samples for conclusion (b)
    int gauge_samples_u = 5;
};

// Constructive Zalcman extraction: for each n picks (t_n, kappa_n) with the
// J-threshold met and the domain margin (1-|t_n|)/|kappa_n| maximal over the
// candidate grid, sets R_n from that margin, and verifies the conclusions
// on the produced prefix.
RescalingSequence zalcman_rescale(const MapFamily& f, const SchwarzFamily& family, double k,
                                  const Witness& witness, const ZalcmanConfig& cfg = {});

enum class BrodyVerdict { NonconstantLimit, Inconclusive };

struct BrodyResult {
    BrodyVerdict verdict = BrodyVerdict::Inconclusive;
    std::string reason;
    RescalingSequence sequence;
    double j_limit = 0.0;          // J_{g(0)}(g(1)) of the limit proxy
    double limit_tension = 0.0;    // tension residual of the limit disc
    double limit_defect = 0.0;     // weak-conformality defect
    std::vector<double> cauchy_gaps;
};

struct BrodyConfig {
    ZalcmanConfig zalcman;
    std::vector<double> radius_list = {0.5, 1.0, 2.0};
    int resolution = 33;
    int cauchy_samples = 64;
    double tau_cauchy = 1e-3;
    double tau_c = 1e-2;
};

// Renormalize, check Cauchy-in-n on growing discs, and test the limit proxy
// for nonconstancy and weakly conformal harmonicity.
BrodyResult brody_extract(const MapFamily& f, const SchwarzFamily& family, double k,
                          const ChartedMetric& target, const BrodyConfig& cfg = {});

// The affine stress family f_n(z) = n z v0 into a flat torus (values on the
// universal cover).
MapFamily make_torus_affine_family(const Vec& v0, int count);

std::string rescaling_to_json(const RescalingSequence& seq);
std::string brody_to_json(const BrodyResult& res);

} // namespace koblab

#endif
