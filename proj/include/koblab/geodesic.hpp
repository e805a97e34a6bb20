#ifndef KOBLAB_GEODESIC_HPP
#define KOBLAB_GEODESIC_HPP

#include <vector>

#include "koblab/curvature.hpp"
#include "koblab/metric.hpp"

namespace koblab {

inline constexpr int kGeodesicStepsDefault = 256;

// Solves x'' + Gamma(x)(x', x') = 0 with x(0) = p, x'(0) = v by classical
// fixed-step RK4 and returns x(1). Steps are halved locally when a stage
// evaluation grazes the chart boundary. Periodic axes wrap the endpoint.
Vec geodesic_exp(const ChartedMetric& m, const Vec& p, const Vec& v,
                 int steps = kGeodesicStepsDefault);

struct GeodesicPath {
    std::vector<Vec> points;
    std::vector<Vec> velocities;
};

GeodesicPath geodesic_path(const ChartedMetric& m, const Vec& p, const Vec& v,
                           int steps = kGeodesicStepsDefault);

// d(exp_p) at x in T_pM, columns by central differences of geodesic_exp.
Mat exp_differential(const ChartedMetric& m, const Vec& p, const Vec& x, int steps);

// Pullback metric h_p = (exp_p)^* h on a ball in T_pM. `radius` is measured
// in the h(p) norm; the returned chart uses raw tangent coordinates, so its
// domain is the coordinate ball inscribed in the h(p)-ball. The metric
// evaluator integrates geodesics, so it is slow; immersion failures at
// evaluated points raise NotImmersion.
ChartedMetric pullback_exp_metric(const ChartedMetric& m, const Vec& p, double radius,
                                  int steps = 96);

// h^t_p(x) := h_p(t x) with the domain scaled by 1/t.
ChartedMetric rescaled_metric(const ChartedMetric& hp, double t);

// Components of a pullback metric in an h(p)-orthonormal frame, with frame
// coordinates y (so |y| equals the h(p) norm and F(0) is the identity).
// This is the uniform-in-p reading of the quasi-bounded geometry bounds.
class NormalFrameField {
  public:
    NormalFrameField(const ChartedMetric& m, const Vec& p, double radius, int steps = 96);
    int dim() const { return dim_; }
    double radius() const { return radius_; }
    Mat frame_components(const Vec& y) const; // throws NotImmersion on rank drop
    const Mat& base_metric() const { return gp_; }
    const std::vector<Vec>& frame() const { return frame_; }

  private:
    int dim_;
    double radius_;
    Mat gp_;
    std::vector<Vec> frame_;
    ChartedMetric hp_;
};

// Max over sampled lattice points of |d^mu (F(t y) - F(0))| for all
// |mu| <= order, finite differences with the given lattice spacing.
double ck_deviation(const NormalFrameField& field, double t, double ball_radius, int order,
                    double spacing);

struct QuasiBoundedReport {
    double r0 = 0.0;
    int q_max = 0;
    std::vector<double> a_q;                    // a_q[q], sup over all samples
    std::vector<Vec> sampled_points;
    std::vector<std::vector<double>> per_point; // per sampled p, a_q table
    std::vector<Vec> immersion_failures;
    bool ok() const { return immersion_failures.empty(); }
};

// Empirical A_q table of Definition-style derivative bounds on h_p - h(p)
// over the sampled base points.
QuasiBoundedReport quasi_bounded_check(const ChartedMetric& m, const std::vector<Vec>& p_samples,
                                       double r0, int q_max, int steps = 96);

} // namespace koblab

#endif
