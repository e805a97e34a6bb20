#ifndef KOBLAB_CURVATURE_HPP
#define KOBLAB_CURVATURE_HPP

#include <vector>

#include "koblab/metric.hpp"

namespace koblab {

// Gamma^k_ij, flattened as c[(k*n + i)*n + j].
struct ChristoffelTable {
    int n = 0;
    std::vector<double> c;
    explicit ChristoffelTable(int dim)
        : n(dim), c(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}
    double& at(int k, int i, int j) { return c[(static_cast<std::size_t>(k) * n + i) * n + j]; }
    double at(int k, int i, int j) const {
        return c[(static_cast<std::size_t>(k) * n + i) * n + j];
    }
};

// Reusable buffers for the allocation-free Christoffel evaluation that the
// geodesic integrator and the disc relaxation loop call per node.
struct ChristoffelWorkspace {
    int n = 0;
    std::vector<double> g, dg, ginv, gamma, xwrap, lu;
    std::vector<int> piv;
    void resize(int dim);
};

// Fills ws.gamma with Gamma^k_ij at x; x must already be inside the chart.
void christoffel_raw(const ChartedMetric& m, const double* x, ChristoffelWorkspace& ws);

ChristoffelTable christoffel(const ChartedMetric& m, const Vec& x);

// d_m Gamma^k_ij, Richardson-extrapolated nested central differences with
// base step kFdStep2. Outer index m, inner layout as ChristoffelTable.
std::vector<ChristoffelTable> christoffel_jacobian(const ChartedMetric& m, const Vec& x);

// Lowered tensor R_ijkl = g( R(e_i, e_j) e_k, e_l ), flattened.
// Sign convention: R(v,w,w,v) > 0 on spheres, < 0 in hyperbolic space.
struct RiemannTable {
    int n = 0;
    std::vector<double> r;
    explicit RiemannTable(int dim)
        : n(dim), r(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0) {}
    double& at(int i, int j, int k, int l) {
        return r[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
    }
    double at(int i, int j, int k, int l) const {
        return r[((static_cast<std::size_t>(i) * n + j) * n + k) * n + l];
    }
};

RiemannTable riemann_lowered(const ChartedMetric& m, const Vec& x);

struct CurvatureReport {
    Vec point;
    Mat metric;
    ChristoffelTable christoffel{0};
    RiemannTable riemann{0};
    // K of the plane spanned by (v, w); basis independent.
    double sectional(const Vec& v, const Vec& w) const;
};

CurvatureReport curvature_report(const ChartedMetric& m, const Vec& x);

double sectional_curvature(const ChartedMetric& m, const Vec& x, const Vec& v, const Vec& w);

struct CurvatureBounds {
    double k_min = 0.0;
    double k_max = 0.0;
    int samples = 0;
    std::vector<std::pair<Vec, double>> records; // (point, K) per sample
};

// Min/max of sectional curvature over random (point, plane) samples.
// Deterministic given the seed; degenerate planes are resampled.
CurvatureBounds curvature_bounds_scan(const ChartedMetric& m, int sample_count, unsigned rng_seed,
                                      double margin = 0.15);

} // namespace koblab

#endif
