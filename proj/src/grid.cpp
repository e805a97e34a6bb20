#include "koblab/grid.hpp"

#include <cmath>

#include "koblab/errors.hpp"

namespace koblab {

namespace {

// Area of the cell [cx-h/2, cx+h/2] x [cy-h/2, cy+h/2] inside the unit disc.
double clipped_cell_area(double cx, double cy, double h) {
    const double r_far = std::hypot(std::fabs(cx) + h / 2.0, std::fabs(cy) + h / 2.0);
    if (r_far <= 1.0) return h * h;
    const double r_near = std::hypot(std::max(0.0, std::fabs(cx) - h / 2.0),
                                     std::max(0.0, std::fabs(cy) - h / 2.0));
    if (r_near >= 1.0) return 0.0;
    const int k = 16;
    const double d = h / k;
    int inside = 0;
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
            const double px = cx - h / 2.0 + (a + 0.5) * d;
            const double py = cy - h / 2.0 + (b + 0.5) * d;
            if (px * px + py * py < 1.0) ++inside;
        }
    return h * h * inside / (k * k);
}

} // namespace

std::shared_ptr<const DiscGrid> make_disc_grid(int resolution) {
    if (resolution < 5 || resolution % 2 == 0)
        throw PreconditionFailed("disc grid resolution must be odd and >= 5");
    auto grid = std::make_shared<DiscGrid>();
    DiscGrid& g = *grid;
    g.resolution = resolution;
    g.h = 2.0 / (resolution - 1);
    const int N = resolution;
    const double h = g.h;
    const double rin = 1.0 - h / 2.0;

    auto coord = [&](int i) { return -1.0 + i * h; };
    auto interior_test = [&](int i, int j) {
        const double px = coord(i), py = coord(j);
        return px * px + py * py < rin * rin;
    };

    g.lattice_to_node.assign(static_cast<std::size_t>(N) * N, -1);

    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (interior_test(i, j)) {
                g.lattice_to_node[static_cast<std::size_t>(j) * N + i] = g.num_interior++;
                g.x.push_back(coord(i));
                g.y.push_back(coord(j));
                g.node_to_lattice.push_back({i, j});
            }

    g.neighbors.resize(static_cast<std::size_t>(g.num_interior));
    g.arm.resize(static_cast<std::size_t>(g.num_interior));

    // outward arms get a boundary node where the arm crosses the circle
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int node = 0; node < g.num_interior; ++node) {
        const auto [i, j] = g.node_to_lattice[static_cast<std::size_t>(node)];
        const double px = coord(i), py = coord(j);
        for (int d = 0; d < 4; ++d) {
            const int ni = i + di[d], nj = j + dj[d];
            if (ni < 0 || nj < 0 || ni >= N || nj >= N)
                throw PreconditionFailed("disc grid stencil leaves the lattice");
            if (interior_test(ni, nj)) {
                g.neighbors[static_cast<std::size_t>(node)][d] = g.node_at(ni, nj);
                g.arm[static_cast<std::size_t>(node)][d] = h;
                continue;
            }
            double bx, by, arm_len;
            if (dj[d] == 0) {
                bx = di[d] > 0 ? std::sqrt(1.0 - py * py) : -std::sqrt(1.0 - py * py);
                by = py;
                arm_len = std::fabs(bx - px);
            } else {
                bx = px;
                by = dj[d] > 0 ? std::sqrt(1.0 - px * px) : -std::sqrt(1.0 - px * px);
                arm_len = std::fabs(by - py);
            }
            const int bnode = g.num_interior + g.num_boundary++;
            g.x.push_back(bx);
            g.y.push_back(by);
            g.node_to_lattice.push_back({ni, nj});
            g.neighbors[static_cast<std::size_t>(node)][d] = bnode;
            g.arm[static_cast<std::size_t>(node)][d] = arm_len;
        }
    }

    g.origin = g.node_at((N - 1) / 2, (N - 1) / 2);
    if (g.origin < 0 || !g.is_interior(g.origin))
        throw PreconditionFailed("disc grid lost the origin node");

    // quadrature weights: clipped cell areas normalized to the disc area
    g.weight.resize(static_cast<std::size_t>(g.num_interior));
    double total = 0.0;
    for (int node = 0; node < g.num_interior; ++node) {
        const double w = clipped_cell_area(g.x[static_cast<std::size_t>(node)],
                                           g.y[static_cast<std::size_t>(node)], h);
        g.weight[static_cast<std::size_t>(node)] = w;
        total += w;
    }
    const double scale = 3.14159265358979323846 / total;
    for (double& w : g.weight) w *= scale;

    return grid;
}

} // namespace koblab
