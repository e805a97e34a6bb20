#ifndef KOBLAB_GRID_HPP
#define KOBLAB_GRID_HPP

#include <array>
#include <memory>
#include <vector>

namespace koblab {

// Cartesian masked grid on the unit disc. Interior nodes are the lattice
// points with |x| < 1 - h/2. Every stencil arm of an interior node that
// points at a non-interior lattice point gets a boundary node placed where
// the arm meets the unit circle (the lattice point snapped to the circle
// along its axis), so boundary data is sampled exactly on the circle and
// boundary arms are shorter than h. The discrete Laplacian is the masked
// 5-point operator with those arm lengths,
//   L u = (1/h) * sum_arms (u_nb - u_c) / arm,
// which reduces to the classic stencil in the bulk, keeps the M-matrix /
// max-principle structure, and is the exact gradient of the edge Dirichlet
// sum used by the relaxation line search. Interior nodes come first in the
// numbering.
struct DiscGrid {
    int resolution = 0; // N, odd
    double h = 0.0;     // 2 / (N - 1)
    int num_interior = 0;
    int num_boundary = 0;
    int origin = -1; // node index of (0, 0)

    std::vector<double> x, y;                  // node positions
    std::vector<std::array<int, 4>> neighbors; // E, W, N, S per interior node
    std::vector<std::array<double, 4>> arm;    // arm lengths, h in the bulk
    std::vector<double> weight;                // quadrature weight, interior
    std::vector<int> lattice_to_node;          // N*N, -1 where unused
    std::vector<std::array<int, 2>> node_to_lattice;

    int total() const { return num_interior + num_boundary; }
    int node_at(int i, int j) const {
        return lattice_to_node[static_cast<std::size_t>(j) * resolution + i];
    }
    bool is_interior(int node) const { return node < num_interior; }
};

// Builds the grid; N must be odd and >= 5 so the origin node exists and the
// stencil has room.
std::shared_ptr<const DiscGrid> make_disc_grid(int resolution);

} // namespace koblab

#endif
