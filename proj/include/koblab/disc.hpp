#ifndef KOBLAB_DISC_HPP
#define KOBLAB_DISC_HPP

#include <memory>
#include <string>
#include <vector>

#include "koblab/geodesic.hpp"
#include "koblab/grid.hpp"
#include "koblab/metric.hpp"

namespace koblab {

// Discretized map from the unit disc into a chart. Values are stored
// unwrapped (periodic targets live on the universal cover), flat layout
// values[node * dim + c].
struct DiscMap {
    std::shared_ptr<const DiscGrid> grid;
    ChartedMetric target;
    std::vector<double> values;

    Vec value(int node) const;
    void set_value(int node, const Vec& v);
};

struct SolveReport {
    double energy = 0.0; // composite quadrature, same value as energy(u)
    double tension_residual = 0.0;
    double conformality_defect = 0.0;
    int iterations = 0;
    bool converged = false;
    bool left_chart_recovered = false; // some step needed chart halvings
    // At coarse resolution the nodal tension and the energy quadrature can
    // disagree near strong metric gradients; when no step can decrease the
    // energy any more while sup|tau| is still above tolerance, the solver
    // falls back to the plain damped step. True when that happened; the
    // energy trace is monotone up to that point.
    bool line_search_released = false;
    int release_iteration = -1;
    // Line-search energy per accepted step (edge-midpoint Dirichlet sum,
    // the solver's Lyapunov function); filled when record_trace is set.
    std::vector<double> energy_trace;
};

struct RelaxConfig {
    double tau_h = 1e-4;
    int max_iter = 20000;
    double lambda0 = 0.0; // 0 = h^2/4 automatically
    bool record_trace = false;
};

double energy(const DiscMap& u);

// Tension tau(u)^k = Lap u^k + Gamma^k_ij(u) <grad u^i, grad u^j> at the
// interior nodes, flat layout like DiscMap::values restricted to interior.
std::vector<double> tension_field(const DiscMap& u);

double tension_residual(const DiscMap& u);

// Damped gradient flow u <- u + lambda * tau(u) with energy line search;
// boundary values stay fixed. Returns best iterate even when not converged.
std::pair<DiscMap, SolveReport> harmonic_relax(const DiscMap& seed,
                                               const std::vector<double>& boundary,
                                               const RelaxConfig& cfg = {});
std::pair<DiscMap, SolveReport> harmonic_relax(const DiscMap& seed, const RelaxConfig& cfg = {});

// Normalized nodewise defect, zero iff discretely conformal at every node.
double conformality_defect(const DiscMap& u);

struct WeaklyConformalResult {
    bool pass = false;
    std::vector<double> phi; // fitted conformal factor per interior node
    int worst_node = -1;
    double worst_defect = 0.0;
};

// Like conformality_defect but branch points (both derivatives below tau_c)
// are allowed.
WeaklyConformalResult weakly_conformal_check(const DiscMap& u, double tau_c);

struct JetConfig {
    int resolution = 65;
    double tau_h = 1e-4;
    double tau_c = 1e-2;
    int max_iter = 20000;
    int seed_steps = 64;  // geodesic steps for the exponential seed
    double jet_c = 0.5;   // tau_jet = max(tau_c, jet_c * r^2)
};

struct JetDiscResult {
    DiscMap disc;
    SolveReport report;
    Vec jet;            // measured du(0) . e1 in chart coordinates
    double jet_scale;   // component of the jet along the requested direction
    double jet_drift;   // relative transverse + scale drift against r*v
    bool admissible;    // residual, defect and drift within tolerances
};

// Conformal harmonic disc with prescribed 1-jet: exponential-chart affine
// seed relaxed with its own frozen boundary. u(0) = p exactly (the relaxed
// map is recentered); du(0).e1 = r*v within tau_jet = max(tau_c, jet_c r^2).
JetDiscResult jet_disc(const ChartedMetric& m, const Vec& p, const Vec& v, const Vec& w, double r,
                       const JetConfig& cfg = {});

// Builds a DiscMap by evaluating f at the node positions.
DiscMap make_disc_map(std::shared_ptr<const DiscGrid> grid, ChartedMetric target,
                      const std::function<Vec(double, double)>& f);

// Arm-aware central-difference derivatives of u at an interior node.
void disc_derivatives(const DiscMap& u, int node, Vec& ux, Vec& uy);

// Bilinear interpolation at a parameter point; false when the surrounding
// lattice cell is not fully interior.
bool disc_interpolate(const DiscMap& u, double px, double py, Vec& out);

// CSV dump with columns node_x, node_y, u_1..u_n.
std::string disc_to_csv(const DiscMap& u);
std::string solve_report_to_json(const SolveReport& r);

} // namespace koblab

#endif
