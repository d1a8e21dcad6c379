#include "nonfick/grid_ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nonfick;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField random_interior_field(const GridPtr& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField f(g);
    for (int idx : g->interior_nodes) f[idx] = dist(rng);
    return f;
}

VectorField random_face_field(const GridPtr& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VectorField F(g);
    for (auto& v : F.fx) v = dist(rng);
    for (auto& v : F.fy) v = dist(rng);
    return F;
}

// Direct 3/5-point stencil, independent of the divergence(gradient(...))
// composition used by the library.
ScalarField stencil_laplacian(const ScalarField& f, const DirichletTrace& bc) {
    const Grid& g = *f.grid;
    ScalarField out(f.grid);
    auto val = [&](int i, int j) {
        const int idx = g.flat(i, j);
        const int b = g.boundary_index[static_cast<std::size_t>(idx)];
        return b >= 0 ? bc.values[static_cast<std::size_t>(b)] : f[idx];
    };
    const double ax = 1.0 / (g.spacing[0] * g.spacing[0]);
    const double ay = g.dimension == 2 ? 1.0 / (g.spacing[1] * g.spacing[1]) : 0.0;
    for (int idx : g.interior_nodes) {
        const int i = g.node_i(idx), j = g.node_j(idx);
        double v = (val(i - 1, j) - 2.0 * val(i, j) + val(i + 1, j)) * ax;
        if (g.dimension == 2)
            v += (val(i, j - 1) - 2.0 * val(i, j) + val(i, j + 1)) * ay;
        out[idx] = v;
    }
    return out;
}

} // namespace

TEST(BuildGrid, UnitIntervalBookkeeping) {
    GridPtr g = build_grid(1, {1.0}, {100});
    EXPECT_DOUBLE_EQ(g->spacing[0], 0.01);
    EXPECT_EQ(g->interior_count(), 99);
    EXPECT_EQ(g->boundary_count(), 2);
    EXPECT_EQ(g->interior_count() + g->boundary_count(), g->node_count());
}

TEST(BuildGrid, RectangleBookkeeping) {
    GridPtr g = build_grid(2, {1.0, 2.0}, {10, 20});
    EXPECT_DOUBLE_EQ(g->spacing[0], 0.1);
    EXPECT_DOUBLE_EQ(g->spacing[1], 0.1);
    EXPECT_EQ(g->interior_count(), 9 * 19);
    EXPECT_EQ(g->interior_count() + g->boundary_count(), g->node_count());
}

TEST(BuildGrid, RejectsDegenerateInput) {
    EXPECT_THROW(build_grid(1, {1.0}, {2}), ConfigError);
    EXPECT_THROW(build_grid(3, {1.0, 1.0, 1.0}, {8, 8, 8}), ConfigError);
    EXPECT_THROW(build_grid(1, {-1.0}, {10}), ConfigError);
    EXPECT_THROW(build_grid(2, {1.0}, {10}), ConfigError);
}

TEST(Gradient, ExactForLinearField) {
    GridPtr g = build_grid(1, {1.0}, {64}); // dyadic spacing: differences are exact
    ScalarField f = make_field(g, [](Point p) { return p[0]; });
    VectorField grad = gradient(f, DirichletTrace::from_field(f));
    for (double v : grad.fx) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Gradient, ZeroFieldGivesZero) {
    GridPtr g = build_grid(2, {1.0, 1.0}, {8, 8});
    ScalarField f(g);
    VectorField grad = gradient(f, DirichletTrace::zero(*g));
    for (double v : grad.fx) EXPECT_EQ(v, 0.0);
    for (double v : grad.fy) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, SecondOrderOnSine) {
    // compare against pi*cos(pi x) at face centers on two resolutions
    auto max_err = [](int cells) {
        GridPtr g = build_grid(1, {1.0}, {cells});
        ScalarField f = make_field(g, [](Point p) { return std::sin(kPi * p[0]); });
        VectorField grad = gradient(f, DirichletTrace::zero(*g));
        double err = 0.0;
        for (int i = 0; i < g->cells[0]; ++i) {
            const double xf = (i + 0.5) * g->spacing[0];
            err = std::max(err, std::abs(grad.fx[static_cast<std::size_t>(i)] -
                                         kPi * std::cos(kPi * xf)));
        }
        return err;
    };
    const double e1 = max_err(64), e2 = max_err(128);
    const double order = std::log2(e1 / e2);
    EXPECT_GE(order, 1.9);
}

TEST(Divergence, ConstantFluxVanishes) {
    GridPtr g = build_grid(2, {1.0, 1.0}, {10, 10});
    VectorField F(g);
    for (auto& v : F.fx) v = 3.5;
    for (auto& v : F.fy) v = -1.25;
    ScalarField d = divergence(F);
    for (int idx : g->interior_nodes) EXPECT_NEAR(d[idx], 0.0, 1e-12);
}

TEST(Divergence, QuadraticStencilExact) {
    GridPtr g = build_grid(1, {1.0}, {40});
    ScalarField f = make_field(g, [](Point p) { return p[0] * (1.0 - p[0]); });
    ScalarField d = divergence(gradient(f, DirichletTrace::from_field(f)));
    for (int idx : g->interior_nodes) EXPECT_NEAR(d[idx], -2.0, 1e-10);
}

TEST(Divergence, SummationByPartsDuality) {
    // random interior-supported f and random F, 1D and 2D
    std::mt19937_64 rng(20240811ull);
    for (int dim : {1, 2}) {
        GridPtr g = dim == 1 ? build_grid(1, {1.0}, {37})
                             : build_grid(2, {1.0, 1.3}, {11, 13});
        for (int rep = 0; rep < 100; ++rep) {
            ScalarField f = random_interior_field(g, rng);
            VectorField F = random_face_field(g, rng);
            VectorField gf = gradient(f, DirichletTrace::zero(*g));
            ScalarField dF = divergence(F);
            const double lhs = inner(gf, F);
            const double rhs = inner(f, dF);
            const double scale = norm(gf) * norm(F) + norm(f, NormKind::L2) * norm(dF, NormKind::L2);
            EXPECT_LE(std::abs(lhs + rhs), 1e-12 * std::max(scale, 1.0));
        }
    }
}

TEST(Laplacian, MatchesDirectStencil) {
    std::mt19937_64 rng(7ull);
    GridPtr g = build_grid(2, {1.0, 1.0}, {9, 7});
    ScalarField f = random_interior_field(g, rng);
    DirichletTrace bc = DirichletTrace::zero(*g);
    for (auto& v : bc.values) v = 0.3;
    ScalarField a = laplacian(f, bc);
    ScalarField b = stencil_laplacian(f, bc);
    for (int idx : g->interior_nodes) EXPECT_NEAR(a[idx], b[idx], 1e-11);
}

TEST(Laplacian, SineIsDiscreteEigenvector) {
    GridPtr g = build_grid(1, {1.0}, {100});
    const double h = g->spacing[0];
    const double lambda_h = 2.0 * (1.0 - std::cos(kPi * h)) / (h * h);
    ScalarField f = make_field(g, [](Point p) { return std::sin(kPi * p[0]); });
    ScalarField lf = laplacian(f, DirichletTrace::zero(*g));
    for (int idx : g->interior_nodes)
        EXPECT_NEAR(lf[idx], -lambda_h * f[idx], 1e-10);
    EXPECT_NEAR(lambda_h, kPi * kPi, kPi * kPi * h * h); // O(h^2) from pi^2
}

TEST(InvLaplacian, ZeroMapsToZero) {
    GridPtr g = build_grid(1, {1.0}, {32});
    ScalarField w = inv_laplacian(ScalarField(g));
    for (double v : w.values) EXPECT_EQ(v, 0.0);
}

TEST(InvLaplacian, RoundtripOnRandomFields) {
    std::mt19937_64 rng(99ull);
    for (int dim : {1, 2}) {
        GridPtr g = dim == 1 ? build_grid(1, {1.0}, {64})
                             : build_grid(2, {1.0, 1.0}, {16, 16});
        for (int rep = 0; rep < 50; ++rep) {
            ScalarField f = random_interior_field(g, rng);
            ScalarField back = inv_laplacian(laplacian(f, DirichletTrace::zero(*g)));
            double num = 0.0, den = 0.0;
            for (int idx : g->interior_nodes) {
                num += (back[idx] - f[idx]) * (back[idx] - f[idx]);
                den += f[idx] * f[idx];
            }
            EXPECT_LE(std::sqrt(num / den), 1e-10);
        }
    }
}

TEST(Friedrichs, UnitInterval) {
    GridPtr g = build_grid(1, {1.0}, {200});
    EXPECT_NEAR(friedrichs_constant(*g), 1.0 / kPi, 1e-4);
}

TEST(Friedrichs, UnitSquare) {
    GridPtr g = build_grid(2, {1.0, 1.0}, {48, 48});
    EXPECT_NEAR(friedrichs_constant(*g), 1.0 / (kPi * std::sqrt(2.0)), 1e-3);
}

TEST(Friedrichs, ScalesWithDomainLength) {
    GridPtr g = build_grid(1, {2.0}, {200});
    EXPECT_NEAR(friedrichs_constant(*g), 2.0 / kPi, 4e-4);
}

TEST(Friedrichs, SecondOrderConvergence) {
    auto err_interval = [](int cells) {
        GridPtr g = build_grid(1, {1.0}, {cells});
        return std::abs(friedrichs_constant(*g) - 1.0 / kPi);
    };
    EXPECT_GE(std::log2(err_interval(50) / err_interval(100)), 1.9);

    auto err_square = [](int cells) {
        GridPtr g = build_grid(2, {1.0, 1.0}, {cells, cells});
        return std::abs(friedrichs_constant(*g) - 1.0 / (kPi * std::sqrt(2.0)));
    };
    EXPECT_GE(std::log2(err_square(12) / err_square(24)), 1.85);
}

TEST(Norms, ZeroFieldVanishes) {
    GridPtr g = build_grid(1, {1.0}, {16});
    ScalarField f(g);
    EXPECT_EQ(norm(f, NormKind::L2), 0.0);
    EXPECT_EQ(norm(f, NormKind::H1_0), 0.0);
    EXPECT_EQ(norm(f, NormKind::Hminus1), 0.0);
}

TEST(Norms, SineClosedForms) {
    GridPtr g = build_grid(1, {1.0}, {200});
    ScalarField f = make_field(g, [](Point p) { return std::sin(kPi * p[0]); });
    const double l2sq = std::pow(norm(f, NormKind::L2), 2);
    const double h1sq = std::pow(norm(f, NormKind::H1_0), 2);
    EXPECT_NEAR(l2sq, 0.5, 1e-3);
    EXPECT_NEAR(h1sq, kPi * kPi / 2.0, 1e-3);
}

TEST(Norms, FriedrichsExtremality) {
    std::mt19937_64 rng(4242ull);
    GridPtr g = build_grid(1, {1.0}, {80});
    const double K = friedrichs_constant(*g);
    for (int rep = 0; rep < 1000; ++rep) {
        ScalarField f = random_interior_field(g, rng);
        const double ratio = norm(f, NormKind::L2) / norm(f, NormKind::H1_0);
        EXPECT_LE(ratio, K * (1.0 + 1e-10));
    }
}

TEST(Norms, DualFriedrichs) {
    std::mt19937_64 rng(31337ull);
    GridPtr g = build_grid(1, {1.0}, {60});
    const double K = friedrichs_constant(*g);
    for (int rep = 0; rep < 200; ++rep) {
        ScalarField f = random_interior_field(g, rng);
        EXPECT_LE(norm(f, NormKind::Hminus1),
                  K * norm(f, NormKind::L2) * (1.0 + 1e-10));
    }
}
