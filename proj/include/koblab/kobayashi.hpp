#ifndef KOBLAB_KOBAYASHI_HPP
#define KOBLAB_KOBAYASHI_HPP

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "koblab/disc.hpp"
#include "koblab/metric.hpp"

namespace koblab {

// P(z, v) = |v| / (1 - |z|^2), the Poincare metric of curvature -4.
double poincare_metric(std::complex<double> z, std::complex<double> v);
// rho(z, w) = 1/2 log((1+d)/(1-d)), d = |z-w| / |1 - z conj(w)|.
double poincare_distance(std::complex<double> z, std::complex<double> w);

// Disc search budget for upper estimates of the Kobayashi-Royden metric.
struct SearchBudget {
    double r_min = 0.25;
    double r_max = 2.0;   // the "budget radius"; grid is geometric, r_max included
    double growth = 2.0;
    int extra_planes = 2; // random planes through xi beyond coordinate ones (dim > 2)
    int resolution = 65;
    double tau_h = 1e-4;
    double tau_c = 1e-2;
    int max_iter = 8000;
    int seed_steps = 64;
    unsigned rng_seed = 1234;

    std::vector<double> radius_grid() const;
};

struct KobayashiEstimate {
    double upper = 0.0; // +inf when no admissible disc exists
    std::optional<double> lower;
    std::string certificate; // disc id of the argmin
    double tau_h = 0.0;
    double tau_c = 0.0;
    int discs_tried = 0;
    int discs_admissible = 0;
    bool bracket_ok(double tau_gap) const {
        return !lower || *lower <= upper * (1.0 + tau_gap);
    }
};

// Upper estimate of F_M(p, xi): min of |xi|_g / s over admissible jet discs,
// where s is the measured jet component along xi. Deterministic reduction,
// first (lowest id) disc wins ties. Returns +inf with zero admissible discs
// rather than throwing; throw_on_empty selects the NoAdmissibleDisc error.
KobayashiEstimate kobayashi_royden_upper(const ChartedMetric& m, const Vec& p, const Vec& xi,
                                         const SearchBudget& budget, bool throw_on_empty = false);

// Lower bound sqrt(c/8) |xi|_g, valid once the curvature scan certifies
// K_max <= -c (with a small numerical slack).
double kobayashi_royden_lower(const ChartedMetric& m, const Vec& p, const Vec& xi, double c,
                              int scan_samples = 64, unsigned scan_seed = 2024);

struct SchwarzReport {
    bool pass = false;
    double worst_ratio = 0.0; // max over nodes of u*g(e1,e1) / ((8/c) g_D(e1,e1))
    int worst_node = -1;
    double max_violation = 0.0; // worst_ratio - 1 when positive
};

// Nodewise check of u*g <= (8/c) g_D in the e1 direction.
SchwarzReport schwarz_check(const DiscMap& u, double c, double tau_schwarz = 1e-2);

struct ChainLink {
    std::string disc_id;
    std::complex<double> z; // parameter mapped to the link start (always 0)
    std::complex<double> w; // parameter mapped to the link end
    double rho;             // Poincare distance rho(z, w)
    Vec from, to;           // chart anchor points the link connects
};

struct ChainDistanceResult {
    double value = 0.0;
    std::vector<ChainLink> chain;
    int node_cloud_size = 0;
};

struct ChainConfig {
    int cloud_size = 6;      // intermediate cloud points
    int nearest_links = 4;   // candidate links per cloud point
    std::vector<double> radii = {2.0, 1.0};
    int resolution = 33;
    // optional second pass: links with no admissible disc at the base
    // resolution retry here (the defect floor shrinks like h^2)
    int fine_resolution = 0;
    double tau_link = 1e-3;
    double tau_h = 1e-4;
    double tau_c = 1e-2;
    int max_iter = 6000;
    int seed_steps = 48;
    unsigned rng_seed = 99;
};

// Upper bound on the chain pseudodistance: shortest path in the graph of
// disc links over a point cloud containing p and q.
ChainDistanceResult chain_distance(const ChartedMetric& m, const Vec& p, const Vec& q,
                                   const ChainConfig& cfg = {});

struct IntegratedDistanceResult {
    double value = 0.0;
    std::vector<Vec> path; // polyline vertices, p first, q last
    int samples_per_segment = 1;
    std::vector<double> sample_uppers;
};

struct PathConfig {
    int segments = 8;
    int perturbations = 32;
    int samples_per_segment = 1;
    double perturb_scale = 0.15; // relative smooth bump amplitude
    unsigned rng_seed = 7;
    SearchBudget f_budget;   // deliberately lean defaults set in the ctor
    int fine_resolution = 0; // escalation when no disc is admissible
    PathConfig() {
        f_budget.r_min = 1.0;
        f_budget.r_max = 2.0;
        f_budget.resolution = 25;
        f_budget.max_iter = 4000;
    }
};

// Quadrature of the upper F estimates along a budgeted family of polyline
// paths (geodesic seed plus random smooth perturbations); an upper bound
// for the integrated pseudodistance.
IntegratedDistanceResult integrated_distance(const ChartedMetric& m, const Vec& p, const Vec& q,
                                             const PathConfig& cfg = {});

struct DecreasingRow {
    Vec p;
    Vec xi;
    double upper_sub = 0.0;
    double upper_amb = 0.0;
    bool ok = false;
};

struct DecreasingReport {
    std::vector<DecreasingRow> rows;
    bool all_ok = true;
    double worst_excess = 0.0; // max(upper_amb - upper_sub), <= tolerance when ok
};

// Lemma-style monotonicity under domain inclusion, checked on computed upper
// estimates with identical budgets: the ambient minimum runs over a disc
// family that contains the sub-domain family.
DecreasingReport decreasing_property_check(const ChartedMetric& m_sub,
                                           const ChartedMetric& m_amb,
                                           const std::vector<std::pair<Vec, Vec>>& samples,
                                           const SearchBudget& budget, double tol = 1e-12);

struct HyperbolicityResult {
    bool known = false;
    bool hyperbolic = false;
    double constant = 0.0; // sqrt(c/8) when known
};

// Pointwise hyperbolicity via the curvature route: with a certified pinch
// K <= -c the constant sqrt(c/8) works on a neighborhood; without curvature
// information the artifact has no lower-bound mechanism and reports unknown.
HyperbolicityResult hyperbolic_at_point(const ChartedMetric& m, const Vec& p,
                                        std::optional<double> c_pinch,
                                        int scan_samples = 64, unsigned scan_seed = 2024);

// JSON record emitters (External Interfaces).
std::string estimate_to_json(const Vec& p, const Vec& xi, const KobayashiEstimate& e);
std::string chain_result_to_json(const Vec& p, const Vec& q, const ChainDistanceResult& r);
std::string integrated_result_to_json(const Vec& p, const Vec& q,
                                      const IntegratedDistanceResult& r);

} // namespace koblab

#endif
