#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nonfick/errors.hpp"

namespace nonfick {

/// Spatial point; the second coordinate is zero on 1D grids.
using Point = std::array<double, 2>;

/// Small n-vector value (coefficient outputs, flux components).
using Vec2 = std::array<double, 2>;

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

/// Cached direct factorization of the homogeneous-Dirichlet Laplacian
/// on the interior nodes. Built once per grid and reused across all
/// Poisson solves (norms, inverse-Laplacian terms, eigenvalue iteration).
struct PoissonSolver {
    Eigen::SparseMatrix<double> minus_laplacian; // SPD, interior unknowns
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization;
    std::uint64_t grid_signature = 0;
};

/// Uniform node-centered rectangular lattice on an interval or a
/// rectangle, with Dirichlet boundary bookkeeping.
///
/// Nodes per axis = cells + 1; boundary nodes are the outermost layer.
/// Immutable after construction; share via GridPtr.
class Grid {
public:
    int dimension;                   // 1 or 2
    std::array<double, 2> lengths;   // domain side lengths
    std::array<int, 2> cells;        // cells per axis (cells[1]==0 in 1D)
    std::array<double, 2> spacing;   // lengths[a] / cells[a]

    int nx = 0;      // nodes along x = cells[0] + 1
    int ny = 1;      // node rows (1 in 1D, cells[1] + 1 in 2D)

    std::vector<int> interior_nodes;   // flat indices, lexicographic
    std::vector<int> boundary_nodes;   // flat indices, lexicographic
    std::vector<int> interior_index;   // flat -> interior enumeration or -1
    std::vector<int> boundary_index;   // flat -> boundary enumeration or -1

    int node_count() const { return nx * ny; }
    int interior_count() const { return static_cast<int>(interior_nodes.size()); }
    int boundary_count() const { return static_cast<int>(boundary_nodes.size()); }

    int flat(int i, int j) const { return j * nx + i; }
    int node_i(int flat_idx) const { return flat_idx % nx; }
    int node_j(int flat_idx) const { return flat_idx / nx; }

    bool is_boundary(int i, int j) const {
        if (i == 0 || i == nx - 1) return true;
        return dimension == 2 && (j == 0 || j == ny - 1);
    }

    Point point(int flat_idx) const {
        return {node_i(flat_idx) * spacing[0],
                dimension == 2 ? node_j(flat_idx) * spacing[1] : 0.0};
    }

    /// Integration weight of one node (cell volume of the uniform lattice).
    double node_volume() const {
        return dimension == 2 ? spacing[0] * spacing[1] : spacing[0];
    }

    // Face counts for staggered vector fields.
    int faces_x_count() const { return cells[0] * ny; }
    int faces_y_count() const { return dimension == 2 ? nx * cells[1] : 0; }
    int face_x(int i, int j) const { return j * cells[0] + i; } // i in [0, cells_x)
    int face_y(int i, int j) const { return j * nx + i; }       // j in [0, cells_y)

    std::uint64_t signature() const {
        // cheap structural checksum used to tie cached factorizations
        // to the grid they were built for
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(static_cast<std::uint64_t>(dimension));
        for (int a = 0; a < 2; ++a) {
            std::uint64_t bits;
            static_assert(sizeof(double) == sizeof(bits));
            std::memcpy(&bits, &lengths[a], sizeof(bits));
            mix(bits);
            mix(static_cast<std::uint64_t>(cells[a]));
        }
        return h;
    }

    /// Lazily built, thread-safe; the factorization always corresponds to
    /// this grid (signature checked).
    const PoissonSolver& poisson() const {
        std::call_once(poisson_once_, [this] { build_poisson(); });
        if (poisson_->grid_signature != signature())
            throw NumericsError("poisson factorization does not match grid");
        return *poisson_;
    }

private:
    mutable std::once_flag poisson_once_;
    mutable std::unique_ptr<PoissonSolver> poisson_;

    void build_poisson() const {
        auto ps = std::make_unique<PoissonSolver>();
        const int n = interior_count();
        const double ax = 1.0 / (spacing[0] * spacing[0]);
        const double ay = dimension == 2 ? 1.0 / (spacing[1] * spacing[1]) : 0.0;

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(n) * 5);
        for (int p = 0; p < n; ++p) {
            const int f = interior_nodes[static_cast<std::size_t>(p)];
            const int i = node_i(f), j = node_j(f);
            double diag = 2.0 * ax + (dimension == 2 ? 2.0 * ay : 0.0);
            auto couple = [&](int fi, int fj, double a) {
                const int q = interior_index[static_cast<std::size_t>(flat(fi, fj))];
                if (q >= 0) trips.emplace_back(p, q, -a);
            };
            couple(i - 1, j, ax);
            couple(i + 1, j, ax);
            if (dimension == 2) {
                couple(i, j - 1, ay);
                couple(i, j + 1, ay);
            }
            trips.emplace_back(p, p, diag);
        }
        ps->minus_laplacian.resize(n, n);
        ps->minus_laplacian.setFromTriplets(trips.begin(), trips.end());
        ps->factorization.compute(ps->minus_laplacian);
        if (ps->factorization.info() != Eigen::Success)
            throw NumericsError("Dirichlet Laplacian factorization failed");
        ps->grid_signature = signature();
        poisson_ = std::move(ps);
    }
};

/// Builds a validated grid. Rejects dimensions other than 1/2,
/// non-positive lengths and fewer than 4 cells per axis (the stencils
/// degenerate below that).
inline GridPtr build_grid(int dimension, std::vector<double> lengths,
                          std::vector<int> cells) {
    if (dimension != 1 && dimension != 2)
        throw ConfigError("grid dimension must be 1 or 2");
    if (lengths.size() != static_cast<std::size_t>(dimension) ||
        cells.size() != static_cast<std::size_t>(dimension))
        throw ConfigError("lengths/cells must have one entry per axis");
    for (int a = 0; a < dimension; ++a) {
        if (!(lengths[static_cast<std::size_t>(a)] > 0.0))
            throw ConfigError("grid lengths must be positive");
        if (cells[static_cast<std::size_t>(a)] < 4)
            throw ConfigError("need at least 4 cells per axis");
    }

    auto g = std::make_shared<Grid>();
    g->dimension = dimension;
    g->lengths = {lengths[0], dimension == 2 ? lengths[1] : 0.0};
    g->cells = {cells[0], dimension == 2 ? cells[1] : 0};
    g->spacing = {g->lengths[0] / g->cells[0],
                  dimension == 2 ? g->lengths[1] / g->cells[1] : 0.0};
    g->nx = g->cells[0] + 1;
    g->ny = dimension == 2 ? g->cells[1] + 1 : 1;

    const int total = g->node_count();
    g->interior_index.assign(static_cast<std::size_t>(total), -1);
    g->boundary_index.assign(static_cast<std::size_t>(total), -1);
    for (int j = 0; j < g->ny; ++j) {
        for (int i = 0; i < g->nx; ++i) {
            const int f = g->flat(i, j);
            if (g->is_boundary(i, j)) {
                g->boundary_index[static_cast<std::size_t>(f)] =
                    static_cast<int>(g->boundary_nodes.size());
                g->boundary_nodes.push_back(f);
            } else {
                g->interior_index[static_cast<std::size_t>(f)] =
                    static_cast<int>(g->interior_nodes.size());
                g->interior_nodes.push_back(f);
            }
        }
    }
    return g;
}

/// One real value per node, plus a model-time tag.
struct ScalarField {
    GridPtr grid;
    std::vector<double> values; // flat node order
    double time = 0.0;

    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0, double t = 0.0)
        : grid(std::move(g)),
          values(static_cast<std::size_t>(grid->node_count()), fill),
          time(t) {}

    double& operator[](int flat_idx) { return values[static_cast<std::size_t>(flat_idx)]; }
    double operator[](int flat_idx) const { return values[static_cast<std::size_t>(flat_idx)]; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Face-staggered vector field: one value per x-face (and per y-face in 2D).
struct VectorField {
    GridPtr grid;
    std::vector<double> fx;
    std::vector<double> fy;

    VectorField() = default;
    explicit VectorField(GridPtr g)
        : grid(std::move(g)),
          fx(static_cast<std::size_t>(grid->faces_x_count()), 0.0),
          fy(static_cast<std::size_t>(grid->faces_y_count()), 0.0) {}
};

/// Builds a field from a closure over node coordinates.
template <typename F>
ScalarField make_field(const GridPtr& g, F&& f, double t = 0.0) {
    ScalarField out(g, 0.0, t);
    for (int idx = 0; idx < g->node_count(); ++idx)
        out[idx] = f(g->point(idx));
    return out;
}

} // namespace nonfick
