#ifndef KOBLAB_METRIC_HPP
#define KOBLAB_METRIC_HPP

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "koblab/linalg.hpp"

namespace koblab {

// Chart domain: axis-aligned box or round ball in coordinate space.
struct Domain {
    enum class Kind { Box, Ball };
    Kind kind = Kind::Box;
    Vec center;
    Vec halfwidth;       // Box
    double radius = 0.0; // Ball

    static Domain box(Vec center, Vec halfwidth);
    static Domain ball(Vec center, double radius);

    int dim() const { return static_cast<int>(center.size()); }
    // Periodic axes always pass the membership test; wrapping handles them.
    bool contains(const Vec& x, const Vec& periodicity) const;
    // Signed margin to the boundary (positive inside), ignoring periodic axes.
    double boundary_margin(const Vec& x, const Vec& periodicity) const;
    Domain shrunk(double factor) const;
    Domain scaled(double factor) const; // scale extent about the center
};

using MetricFn = std::function<Mat(const Vec&)>;
using MetricDerivFn = std::function<std::vector<Mat>(const Vec&)>;

// Allocation-free kernels used by inner loops; both row-major,
// dg laid out as dg[k*n*n + i*n + j] = d_k g_ij.
using RawMetricFn = std::function<void(const double*, double*)>;
using RawDerivFn = std::function<void(const double*, double*)>;

// A manifold-in-coordinates: one chart, one smooth metric tensor.
struct ChartedMetric {
    int dim = 0;
    Domain domain;
    MetricFn g;
    std::optional<MetricDerivFn> dg;
    std::string name;
    Vec periodicity; // empty, or per-axis period length (0 = aperiodic axis)

    // Optional fast kernels; builtin models provide them. Fall back to g/dg.
    RawMetricFn raw_g;
    RawDerivFn raw_dg;

    bool has_periodicity() const;
    Vec wrap(const Vec& x) const;                  // canonical representative
    Vec delta(const Vec& x, const Vec& y) const;   // min-image x - y
    double chart_dist(const Vec& x, const Vec& y) const;
    bool contains(const Vec& x) const { return domain.contains(x, periodicity); }
    bool contains_ptr(const double* x) const;

    // Checked evaluation: wraps periodic axes, throws OutOfChart.
    Mat metric_at(const Vec& x) const;
    std::vector<Mat> metric_deriv_at(const Vec& x) const; // dg or central differences
};

// Finite-difference step for first derivatives of g when dg is absent.
inline constexpr double kFdStep = 1e-4;
// Step for nested (second) differences.
inline constexpr double kFdStep2 = 1e-3;

struct MetricCheckReport {
    bool symmetric = true;
    bool positive_definite = true;
    bool dg_consistent = true;
    double worst_asymmetry = 0.0;
    double min_eigenvalue = 0.0;
    double worst_dg_error = 0.0;
    bool ok() const { return symmetric && positive_definite && dg_consistent; }
};

// Samples the ChartedMetric invariants: exact symmetry, positive
// definiteness, and dg agreement with central differences within tau_fd.
MetricCheckReport check_metric(const ChartedMetric& m, int samples, unsigned seed,
                               double tau_fd = 1e-4, double margin = 0.1);

// Uniform sample inside the domain shrunk by the given relative margin.
Vec sample_point(const ChartedMetric& m, std::mt19937_64& rng, double margin = 0.1);

// g at x written to out (row major, n*n), periodic wrap applied, no domain
// check; the allocation-light path used by the disc solver inner loops.
void metric_raw(const ChartedMetric& m, const double* x, double* out);

// Model library ------------------------------------------------------------

ChartedMetric make_euclidean(int n, double halfwidth = 10.0);
// Unit disc with g = delta / (1-|x|^2)^2, constant curvature -4.
ChartedMetric make_poincare_disc();
// Unit ball with g = 4 delta / (1-|x|^2)^2, constant curvature -1.
ChartedMetric make_hyperbolic_ball(int n);
ChartedMetric make_flat_torus(const Vec& periods);
// g = dr^2 + f(r)^2 dtheta^2 on [r0, r1] x [0, 2pi), theta periodic.
ChartedMetric make_warped_product(const std::string& f_expr, double r0, double r1);
// Full matrix of expression entries; first derivatives are symbolic.
ChartedMetric make_expression_metric(int n, const std::vector<std::vector<std::string>>& entries,
                                     Domain domain, Vec periodicity = {});

// Same tensor on a smaller domain (sub-manifold restriction).
ChartedMetric restrict_domain(const ChartedMetric& m, const Domain& smaller);

} // namespace koblab

#endif
