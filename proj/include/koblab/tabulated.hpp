#ifndef KOBLAB_TABULATED_HPP
#define KOBLAB_TABULATED_HPP

#include "koblab/metric.hpp"

namespace koblab {

// Samples a slow metric (typically an exponential pullback, whose evaluator
// integrates geodesics) on a regular lattice over [-halfwidth, halfwidth]^2
// and returns a fast chart backed by Catmull-Rom interpolation; derivatives
// come from the interpolant, so the returned metric is smooth and cheap to
// relax against. Two-dimensional charts only.
ChartedMetric tabulate_metric(const ChartedMetric& src, double halfwidth, double spacing);

} // namespace koblab

#endif
