#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nonfick/grid.hpp"

namespace nonfick {

/// Dirichlet trace: one value per boundary node in grid enumeration order.
struct DirichletTrace {
    std::vector<double> values;

    static DirichletTrace zero(const Grid& g) {
        return {std::vector<double>(static_cast<std::size_t>(g.boundary_count()), 0.0)};
    }
    /// Reads the trace out of the field's own boundary slots.
    static DirichletTrace from_field(const ScalarField& f) {
        const Grid& g = *f.grid;
        DirichletTrace t;
        t.values.resize(static_cast<std::size_t>(g.boundary_count()));
        for (int b = 0; b < g.boundary_count(); ++b)
            t.values[static_cast<std::size_t>(b)] = f[g.boundary_nodes[static_cast<std::size_t>(b)]];
        return t;
    }
};

namespace detail {

/// Node value with the Dirichlet trace substituted on boundary nodes.
inline double traced_value(const ScalarField& f, const DirichletTrace& bc,
                           int i, int j) {
    const Grid& g = *f.grid;
    const int idx = g.flat(i, j);
    const int b = g.boundary_index[static_cast<std::size_t>(idx)];
    return b >= 0 ? bc.values[static_cast<std::size_t>(b)] : f[idx];
}

} // namespace detail

/// Face-centered central differences; boundary values come from the trace.
/// Exact for fields linear along each axis.
inline VectorField gradient(const ScalarField& f, const DirichletTrace& bc) {
    const Grid& g = *f.grid;
    if (bc.values.size() != static_cast<std::size_t>(g.boundary_count()))
        throw ConfigError("gradient: trace size does not match boundary");
    VectorField out(f.grid);
    const double inv_hx = 1.0 / g.spacing[0];
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            out.fx[static_cast<std::size_t>(g.face_x(i, j))] =
                (detail::traced_value(f, bc, i + 1, j) -
                 detail::traced_value(f, bc, i, j)) * inv_hx;
    if (g.dimension == 2) {
        const double inv_hy = 1.0 / g.spacing[1];
        for (int j = 0; j + 1 < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                out.fy[static_cast<std::size_t>(g.face_y(i, j))] =
                    (detail::traced_value(f, bc, i, j + 1) -
                     detail::traced_value(f, bc, i, j)) * inv_hy;
    }
    return out;
}

inline VectorField gradient(const ScalarField& f) {
    return gradient(f, DirichletTrace::from_field(f));
}

/// Flux divergence on interior nodes; boundary slots stay zero. Adjoint to
/// gradient under the lattice inner products (summation by parts).
inline ScalarField divergence(const VectorField& F) {
    const Grid& g = *F.grid;
    ScalarField out(F.grid);
    const double inv_hx = 1.0 / g.spacing[0];
    const double inv_hy = g.dimension == 2 ? 1.0 / g.spacing[1] : 0.0;
    for (int f : g.interior_nodes) {
        const int i = g.node_i(f), j = g.node_j(f);
        double d = (F.fx[static_cast<std::size_t>(g.face_x(i, j))] -
                    F.fx[static_cast<std::size_t>(g.face_x(i - 1, j))]) * inv_hx;
        if (g.dimension == 2)
            d += (F.fy[static_cast<std::size_t>(g.face_y(i, j))] -
                  F.fy[static_cast<std::size_t>(g.face_y(i, j - 1))]) * inv_hy;
        out[f] = d;
    }
    return out;
}

/// Dirichlet Laplacian: divergence of the traced gradient. Interior values
/// only; boundary slots zero.
inline ScalarField laplacian(const ScalarField& f, const DirichletTrace& bc) {
    return divergence(gradient(f, bc));
}

namespace detail {

inline Eigen::VectorXd interior_vector(const ScalarField& f) {
    const Grid& g = *f.grid;
    Eigen::VectorXd v(g.interior_count());
    for (int p = 0; p < g.interior_count(); ++p)
        v(p) = f[g.interior_nodes[static_cast<std::size_t>(p)]];
    return v;
}

inline ScalarField from_interior_vector(const GridPtr& g, const Eigen::VectorXd& v,
                                        double t = 0.0) {
    ScalarField f(g, 0.0, t);
    for (int p = 0; p < g->interior_count(); ++p)
        f[g->interior_nodes[static_cast<std::size_t>(p)]] = v(p);
    return f;
}

} // namespace detail

/// Solves the homogeneous-Dirichlet Poisson problem: returns w with
/// laplacian(w, 0) = g on the interior. Only interior values of g are read.
inline ScalarField inv_laplacian(const ScalarField& g_rhs) {
    const Grid& g = *g_rhs.grid;
    const PoissonSolver& ps = g.poisson();
    Eigen::VectorXd rhs = -detail::interior_vector(g_rhs);
    Eigen::VectorXd w = ps.factorization.solve(rhs);
    if (ps.factorization.info() != Eigen::Success)
        throw NumericsError("inv_laplacian: solve failed");
    return detail::from_interior_vector(g_rhs.grid, w, g_rhs.time);
}

inline double inner(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        s += a.values[k] * b.values[k];
    return s * a.grid->node_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.fx.size(); ++k) s += a.fx[k] * b.fx[k];
    for (std::size_t k = 0; k < a.fy.size(); ++k) s += a.fy[k] * b.fy[k];
    return s * a.grid->node_volume();
}

inline double norm(const VectorField& a) { return std::sqrt(inner(a, a)); }

enum class NormKind { L2, H1_0, Hminus1 };

/// Discrete L2 / H1_0 / H^-1 norms. H1_0 uses the field's own boundary
/// slots as trace; H^-1 is the H1_0 norm of the inverse Laplacian
/// (duality with the Dirichlet form).
inline double norm(const ScalarField& f, NormKind kind) {
    switch (kind) {
    case NormKind::L2:
        return std::sqrt(inner(f, f));
    case NormKind::H1_0:
        return norm(gradient(f));
    case NormKind::Hminus1: {
        ScalarField w = inv_laplacian(f);
        return norm(gradient(w, DirichletTrace::zero(*f.grid)));
    }
    }
    return 0.0;
}

/// ||laplacian(f,0)||_L2 — the discrete H^2_0 norm.
inline double norm_h2(const ScalarField& f) {
    return norm(laplacian(f, DirichletTrace::zero(*f.grid)), NormKind::L2);
}

/// ||grad laplacian(f,0)|| — the discrete X-norm (Laplacian in H^1_0).
inline double norm_X(const ScalarField& f) {
    ScalarField lf = laplacian(f, DirichletTrace::zero(*f.grid));
    return norm(gradient(lf, DirichletTrace::zero(*f.grid)));
}

/// Dual norm over H^2_0: L2 norm of the inverse Laplacian.
inline double norm_hminus2(const ScalarField& f) {
    return norm(inv_laplacian(f), NormKind::L2);
}

/// Friedrichs constant K = 1/sqrt(lambda_1), smallest Dirichlet-Laplacian
/// eigenvalue by inverse power iteration on the cached factorization.
/// Relative tolerance 1e-10, cap 10^4 iterations.
inline double friedrichs_constant(const Grid& g) {
    const PoissonSolver& ps = g.poisson();
    const int n = g.interior_count();
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd y = ps.factorization.solve(x);
        const double rayleigh = x.dot(y) / y.squaredNorm(); // = (Ly.y)/(y.y)
        y.normalize();
        x.swap(y);
        if (it > 0 && std::abs(rayleigh - lambda) <= 1e-10 * std::abs(rayleigh)) {
            lambda = rayleigh;
            return 1.0 / std::sqrt(lambda);
        }
        lambda = rayleigh;
    }
    throw NumericsError("friedrichs_constant: power iteration did not converge");
}

} // namespace nonfick
