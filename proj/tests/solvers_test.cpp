#include "nonfick/solvers.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace nonfick;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField random_field(const GridPtr& g, std::mt19937_64& rng, double lo,
                         double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    ScalarField f(g);
    for (int idx : g->interior_nodes) f[idx] = d(rng);
    return f;
}

// Dense implicit-Euler propagator over [0, T]: the oracle path for the
// abstract reproductive solve, independent of the Picard iteration.
struct DensePropagator {
    Eigen::MatrixXd S;          // b -> u_b(T) for f = 0
    Eigen::VectorXd forced_end; // u_0(T) for b = 0 with forcing
};

DensePropagator dense_propagator(const Eigen::SparseMatrix<double>& A, double T,
                                 double dt,
                                 const std::function<Eigen::VectorXd(double)>& f) {
    const int n = static_cast<int>(A.rows());
    const int steps = static_cast<int>(std::llround(T / dt));
    Eigen::SparseMatrix<double> M(n, n);
    M.setIdentity();
    M = M + dt * A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    DensePropagator out;
    out.S = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < steps; ++k) out.S = solver.solve(out.S);
    out.forced_end = Eigen::VectorXd::Zero(n);
    if (f)
        for (int k = 0; k < steps; ++k)
            out.forced_end = solver.solve((out.forced_end + dt * f((k + 1) * dt)).eval());
    return out;
}

TransformedCoefficients demo_tc() {
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = [](double, Point, double u, double) { return e_rational(u, 0.5, 0.05); };
    p.beta0 = [](double, Point, double u, double) {
        return beta_tanh(u, {2.0, 1.0, 0.5, 0.25});
    };
    p.mu0 = constant_law(0.5);
    return transform(std::move(p));
}

} // namespace

TEST(Picard, LinearContractionToZero) {
    GridPtr g = build_grid(1, {1.0}, {16});
    std::mt19937_64 rng(3ull);
    ScalarField b0 = random_field(g, rng, -1.0, 1.0);
    auto half = [](const ScalarField& b) {
        ScalarField out = b;
        for (auto& v : out.values) v *= 0.5;
        return out;
    };
    auto [fix, rep] = picard_iterate(half, b0, scalar_field_space(),
                                     {1e-10, 100, 1.0});
    EXPECT_TRUE(rep.accepted);
    EXPECT_LE(norm(fix, NormKind::L2), 1e-9);
    for (std::size_t m = 2; m + 1 < rep.ratios.size(); ++m) {
        if (rep.residuals[m] > 1e-13) {
            EXPECT_NEAR(rep.ratios[m], 0.5, 0.01);
        }
    }
}

TEST(Picard, IdentityStopsImmediately) {
    GridPtr g = build_grid(1, {1.0}, {16});
    std::mt19937_64 rng(4ull);
    ScalarField b0 = random_field(g, rng, -1.0, 1.0);
    auto [fix, rep] = picard_iterate([](const ScalarField& b) { return b; }, b0,
                                     scalar_field_space(), {1e-12, 50, 1.0});
    EXPECT_TRUE(rep.accepted);
    EXPECT_EQ(rep.iterations, 1);
    EXPECT_EQ(rep.residuals.front(), 0.0);
}

TEST(Picard, AffineMapConvergesToKnownFixedPoint) {
    GridPtr g = build_grid(1, {1.0}, {24});
    ScalarField c(g, 0.7);
    auto affine = [&](const ScalarField& b) {
        ScalarField out = b;
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.values[k] = 0.3 * b.values[k] + c.values[k];
        return out;
    };
    auto [fix, rep] = picard_iterate(affine, ScalarField(g),
                                     scalar_field_space(), {1e-12, 200, 1.0});
    EXPECT_TRUE(rep.accepted);
    for (double v : fix.values) EXPECT_NEAR(v, 1.0, 1e-10); // c/(1-0.3)
    EXPECT_NEAR(rep.rate_fit, 0.3, 0.02);
}

TEST(Picard, UnderRelaxationStillConverges) {
    GridPtr g = build_grid(1, {1.0}, {16});
    ScalarField c(g, 0.7);
    auto affine = [&](const ScalarField& b) {
        ScalarField out = b;
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.values[k] = 0.3 * b.values[k] + c.values[k];
        return out;
    };
    auto [fix, rep] = picard_iterate(affine, ScalarField(g),
                                     scalar_field_space(), {1e-11, 400, 0.5});
    EXPECT_TRUE(rep.accepted);
    for (double v : fix.values) EXPECT_NEAR(v, 1.0, 1e-9);
    // blended map contracts at 0.5 + 0.5*0.3 = 0.65
    EXPECT_NEAR(rep.rate_fit, 0.65, 0.02);
    EXPECT_THROW(picard_iterate(affine, ScalarField(g), scalar_field_space(),
                                {1e-8, 100, 1.5}),
                 ConfigError);
}

TEST(Picard, DivergenceGuardAborts) {
    GridPtr g = build_grid(1, {1.0}, {16});
    ScalarField b0(g, 1.0);
    auto blowup = [](const ScalarField& b) {
        ScalarField out = b;
        for (auto& v : out.values) v *= 20.0;
        return out;
    };
    auto [fix, rep] = picard_iterate(blowup, b0, scalar_field_space(),
                                     {1e-10, 500, 1.0});
    EXPECT_FALSE(rep.accepted);
    EXPECT_EQ(rep.tag, "diverged");
    EXPECT_LT(rep.iterations, 10);
}

TEST(Picard, MaxIterGivesNotAccepted) {
    GridPtr g = build_grid(1, {1.0}, {16});
    ScalarField b0(g, 1.0);
    auto slow = [](const ScalarField& b) {
        ScalarField out = b;
        for (auto& v : out.values) v *= 0.999;
        return out;
    };
    auto [fix, rep] = picard_iterate(slow, b0, scalar_field_space(),
                                     {1e-14, 10, 1.0});
    EXPECT_FALSE(rep.accepted);
    EXPECT_EQ(rep.iterations, 10);
}

TEST(AbstractReproductive, ZeroDataGivesZero) {
    GridPtr g = build_grid(1, {1.0}, {32});
    auto res = solve_reproductive_abstract(g, g->poisson().minus_laplacian, {},
                                           ScalarField(g), 0.1, 1e-3);
    EXPECT_TRUE(res.report.accepted);
    for (double v : res.b.values) EXPECT_EQ(v, 0.0);
}

TEST(AbstractReproductive, MatchesDensePropagatorOracle) {
    GridPtr g = build_grid(1, {1.0}, {64});
    const double T = 0.2, dt = 2e-3;
    const auto& A = g->poisson().minus_laplacian;
    ScalarField a = make_field(g, [](Point p) { return 0.8 * std::sin(kPi * p[0]); });

    auto res = solve_reproductive_abstract(g, A, {}, a, T, dt, {1e-12, 400, 1.0});
    ASSERT_TRUE(res.report.accepted);

    DensePropagator oracle = dense_propagator(A, T, dt, {});
    Eigen::VectorXd a_vec(g->interior_count());
    for (int p = 0; p < g->interior_count(); ++p)
        a_vec(p) = a[g->interior_nodes[static_cast<std::size_t>(p)]];
    Eigen::MatrixXd ImS = Eigen::MatrixXd::Identity(a_vec.size(), a_vec.size()) - oracle.S;
    Eigen::VectorXd b_oracle = ImS.partialPivLu().solve(a_vec);

    double num = 0.0, den = 0.0;
    for (int p = 0; p < g->interior_count(); ++p) {
        const double bi = res.b[g->interior_nodes[static_cast<std::size_t>(p)]];
        num += (bi - b_oracle(p)) * (bi - b_oracle(p));
        den += b_oracle(p) * b_oracle(p);
    }
    EXPECT_LE(std::sqrt(num / den), 1e-8);

    // contraction ratio against the smallest discrete eigenvalue, obtained
    // through the independent Friedrichs path
    const double K = friedrichs_constant(*g);
    const double alpha = 1.0 / (K * K);
    const double bound = std::exp(-alpha * T) * 1.05;
    for (std::size_t m = 2; m < res.report.residuals.size(); ++m) {
        if (res.report.residuals[m] < 1e-13) break;
        EXPECT_LE(res.report.ratios[m - 1], bound);
    }
    // and the fitted rate matches the dominant propagator eigenvalue
    Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(oracle.S).eigenvalues();
    double rho_S = 0.0;
    for (int i = 0; i < eigs.size(); ++i) rho_S = std::max(rho_S, std::abs(eigs(i)));
    EXPECT_NEAR(res.report.rate_fit, rho_S, 0.01 * rho_S);
}

TEST(AbstractReproductive, InitializationIndependent) {
    GridPtr g = build_grid(1, {1.0}, {48});
    const auto& A = g->poisson().minus_laplacian;
    ScalarField a = make_field(g, [](Point p) { return std::sin(2.0 * kPi * p[0]); });
    const double tol = 1e-10;
    std::mt19937_64 rng(2024ull);
    std::vector<ScalarField> sols;
    for (int s = 0; s < 3; ++s) {
        ScalarField guess = random_field(g, rng, -2.0, 2.0);
        auto res = solve_reproductive_abstract(g, A, {}, a, 0.15, 1e-3,
                                               {tol, 500, 1.0}, &guess);
        ASSERT_TRUE(res.report.accepted);
        sols.push_back(res.b);
    }
    for (int s = 1; s < 3; ++s) {
        ScalarField d = sols[static_cast<std::size_t>(s)];
        for (std::size_t k = 0; k < d.values.size(); ++k)
            d.values[k] -= sols[0].values[k];
        EXPECT_LE(norm(d, NormKind::L2), 10.0 * tol);
    }
}

TEST(AbstractReproductive, RejectsNonCoerciveOperator) {
    GridPtr g = build_grid(1, {1.0}, {16});
    Eigen::SparseMatrix<double> A = g->poisson().minus_laplacian;
    A = -A; // negative definite
    EXPECT_THROW(solve_reproductive_abstract(g, A, {}, ScalarField(g), 0.1, 1e-2),
                 ConfigError);
}

TEST(ReproductiveConcentration, SteadyStateIsImmediateFixedPoint) {
    const double c = 0.5;
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {100});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 0.05;
    pr.dt = 5e-4;
    pr.phi = Background::analytic([c](double, Point) { return c; },
                                  [](double, Point) { return 0.0; });
    // stress equilibrium: gamma(u) u / beta0(u) at u = c
    const double seq = 0.5 * c / beta_tanh(c, {2.0, 1.0, 0.5, 0.25});
    pr.varsigma0 = ScalarField(g, seq);
    pr.u0_guess = ScalarField(g, c);
    auto res = solve_reproductive_concentration(pr, tc, std::nullopt,
                                                {1e-8, 50, 1.0});
    EXPECT_TRUE(res.report.accepted);
    EXPECT_LE(res.report.iterations, 2);
    EXPECT_LE(res.report.final_residual, 1e-8);
}

TEST(ReproductiveConcentration, ZeroDataGivesZeroSolution) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {50});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 0.05;
    pr.dt = 1e-3;
    pr.phi = Background::zero();
    pr.varsigma0 = ScalarField(g);
    pr.u0_guess = ScalarField(g);
    auto res = solve_reproductive_concentration(pr, tc, std::nullopt);
    EXPECT_TRUE(res.report.accepted);
    for (double v : res.trajectory.back().u.values) EXPECT_EQ(v, 0.0);
}

TEST(ReproductiveConcentration, RandomStartsAgreeAndStressRestartsBitwise) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {100});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 0.1;
    pr.dt = 1e-3;
    pr.phi = Background::analytic([](double, Point) { return 0.5; },
                                  [](double, Point) { return 0.0; });
    pr.varsigma0 = make_field(g, [](Point p) { return 0.1 + 0.05 * std::sin(2.0 * kPi * p[0]); });

    std::mt19937_64 rng(99ull);
    std::vector<ScalarField> sols;
    const double tol = 1e-9;
    for (int s = 0; s < 2; ++s) {
        pr.u0_guess = random_field(g, rng, 0.2, 0.8);
        for (int b : g->boundary_nodes) pr.u0_guess[b] = 0.5;
        auto res = solve_reproductive_concentration(pr, tc, std::nullopt,
                                                    {tol, 300, 1.0});
        ASSERT_TRUE(res.report.accepted);
        // restart contract: the returned stress begins bitwise at varsigma0
        for (std::size_t k = 0; k < pr.varsigma0.values.size(); ++k)
            EXPECT_EQ(res.trajectory.states.front().varsigma.values[k],
                      pr.varsigma0.values[k]);
        sols.push_back(res.trajectory.states.front().u);
    }
    ScalarField d = sols[1];
    for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= sols[0].values[k];
    EXPECT_LE(norm(d, NormKind::L2), 1e-6 * norm(sols[0], NormKind::L2));
}

TEST(ReproductiveConcentration, TwoDimensionalRun) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(2, {1.0, 1.0}, {16, 16});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 0.05;
    pr.dt = 1e-3;
    pr.phi = Background::analytic(
        [](double t, Point) { return 0.5 + 0.1 * std::sin(2.0 * kPi * t / 0.05); },
        [](double t, Point) {
            return 0.1 * 2.0 * kPi / 0.05 * std::cos(2.0 * kPi * t / 0.05);
        });
    pr.varsigma0 = ScalarField(g, 0.1);
    pr.u0_guess = ScalarField(g, 0.5);
    auto res = solve_reproductive_concentration(pr, tc, std::nullopt,
                                                {1e-7, 200, 1.0});
    EXPECT_TRUE(res.report.accepted);
    EXPECT_LE(res.report.final_residual, 1e-7);
    // pair repeats only in the concentration: the stress is free at T
    ScalarField ds = res.trajectory.back().varsigma;
    for (std::size_t k = 0; k < ds.values.size(); ++k)
        ds.values[k] -= pr.varsigma0.values[k];
    EXPECT_GT(norm(ds, NormKind::L2), 1e-4);
}

TEST(ReproductiveConcentration, ShotFailureCarriesIterationIndex) {
    // a negative relaxation rate blows the stress up inside the first shot
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = constant_coeff(0.0);
    p.beta0 = constant_coeff(-25.0);
    p.mu0 = constant_law(1.0);
    TransformedCoefficients tc = transform(std::move(p));
    GridPtr g = build_grid(1, {1.0}, {32});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 2.0;
    pr.dt = 1e-2;
    pr.phi = Background::analytic([](double, Point) { return 0.5; },
                                  [](double, Point) { return 0.0; });
    pr.varsigma0 = ScalarField(g, 0.5);
    pr.u0_guess = ScalarField(g, 0.5);
    try {
        solve_reproductive_concentration(pr, tc, std::nullopt, {1e-8, 5, 1.0});
        FAIL() << "expected a NumericsError";
    } catch (const NumericsError& err) {
        EXPECT_NE(std::string(err.what()).find("shooting iteration"),
                  std::string::npos);
        EXPECT_NE(std::string(err.what()).find("step"), std::string::npos);
    }
}

TEST(ReproductiveConcentration, TagsRunsBeyondGuarantee) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {50});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Reproductive;
    pr.grid = g;
    pr.T = 0.1;
    pr.dt = 1e-3;
    pr.phi = Background::analytic([](double, Point) { return 0.5; },
                                  [](double, Point) { return 0.0; });
    pr.varsigma0 = ScalarField(g, 0.1);
    pr.u0_guess = ScalarField(g, 0.5);
    auto res = solve_reproductive_concentration(pr, tc, 0.05 /* T0 < T */,
                                                {1e-8, 200, 1.0});
    EXPECT_NE(res.report.tag.find("outside-guarantee"), std::string::npos);
}

TEST(Periodic, RefusesWithoutCoercivityGate) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {32});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Periodic;
    pr.grid = g;
    pr.T = 0.5;
    pr.dt = 1e-2;
    pr.phi = Background::zero();
    pr.u0_guess = ScalarField(g);
    pr.varsigma0_guess = ScalarField(g);
    PeriodicGate bad; // Gamma0 = 0
    EXPECT_THROW(solve_periodic(pr, tc, bad), CertificateError);
}

TEST(Periodic, SteadyStateOfAutonomousDataIsPeriodic) {
    const double c = 0.5;
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {64});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Periodic;
    pr.grid = g;
    pr.T = 0.4;
    pr.dt = 2e-3;
    pr.phi = Background::analytic([c](double, Point) { return c; },
                                  [](double, Point) { return 0.0; });
    pr.u0_guess = ScalarField(g, 0.4);
    pr.varsigma0_guess = ScalarField(g, 0.1);
    PeriodicGate gate{1.0, 0.4, 0.0, 0.0};
    auto res = solve_periodic(pr, tc, gate, {1e-8, 300, 1.0});
    ASSERT_TRUE(res.report.accepted);
    const double seq = 0.5 * c / beta_tanh(c, {2.0, 1.0, 0.5, 0.25});
    for (int idx : g->interior_nodes) {
        EXPECT_NEAR(res.trajectory.states.front().u[idx], c, 1e-6);
        EXPECT_NEAR(res.trajectory.states.front().varsigma[idx], seq, 1e-6);
    }

    // true period test: a second period returns to the same state
    State s0 = res.trajectory.back();
    s0.t = 0.0;
    Trajectory second = simulate(s0, tc, pr.phi, pr.T, pr.dt);
    ScalarField du = second.back().u;
    for (std::size_t k = 0; k < du.values.size(); ++k)
        du.values[k] -= res.trajectory.back().u.values[k];
    EXPECT_LE(norm(du, NormKind::L2), 2e-8);
}

TEST(Periodic, RejectsNonPeriodicBoundaryData) {
    TransformedCoefficients tc = demo_tc();
    GridPtr g = build_grid(1, {1.0}, {32});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Periodic;
    pr.grid = g;
    pr.T = 1.0;
    pr.dt = 1e-2;
    pr.phi = Background::analytic([](double t, Point) { return 0.5 + 0.1 * t; });
    pr.u0_guess = ScalarField(g);
    pr.varsigma0_guess = ScalarField(g);
    PeriodicGate gate{1.0, 0.4, 0.0, 0.0};
    EXPECT_THROW(solve_periodic(pr, tc, gate), ConfigError);
}

TEST(Periodic, RejectsNonPeriodicCoefficients) {
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = constant_coeff(0.0);
    p.beta0 = [](double t, Point, double, double) { return 1.0 + 0.1 * t; };
    p.mu0 = constant_law(0.5);
    TransformedCoefficients tc = transform(std::move(p));
    GridPtr g = build_grid(1, {1.0}, {32});
    ShootingProblem pr;
    pr.mode = ShootingProblem::Mode::Periodic;
    pr.grid = g;
    pr.T = 1.0;
    pr.dt = 1e-2;
    pr.phi = Background::zero();
    pr.u0_guess = ScalarField(g);
    pr.varsigma0_guess = ScalarField(g);
    PeriodicGate gate{1.0, 0.4, 0.0, 0.0};
    EXPECT_THROW(solve_periodic(pr, tc, gate), ConfigError);
}

TEST(Continuation, WarmStartedSweepApproachesMonotonically) {
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = constant_coeff(0.1);
    p.beta0 = constant_coeff(1.2);
    p.mu0 = constant_law(0.4);
    TransformedCoefficients tc = transform(std::move(p));
    GridPtr g = build_grid(1, {1.0}, {48});
    const double T = 0.25, dt = 2.5e-3;
    // space-constant periodic drive so f reduces to its nonlocal term
    Background phi = Background::analytic(
        [T](double t, Point) { return 0.4 + 0.1 * std::sin(2.0 * kPi * t / T); },
        [T](double t, Point) { return 0.1 * 2.0 * kPi / T * std::cos(2.0 * kPi * t / T); });
    HomogenizedCoefficients hc = homogenize(g, tc, phi, Background::zero());

    auto records = run_continuation(g, hc, T, dt, {1e-2, 1e-3, 1e-4},
                                    {0.0, 0.5, 1.0}, {1e-10, 200, 1.0});
    std::vector<ScalarField> finals;
    for (const auto& r : records)
        if (r.lambda == 1.0) {
            EXPECT_TRUE(r.report.accepted);
            finals.push_back(r.solution.u);
        }
    ASSERT_EQ(finals.size(), 3u);
    auto dist = [](const ScalarField& a, const ScalarField& b) {
        ScalarField d = a;
        for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= b.values[k];
        return norm(d, NormKind::L2);
    };
    EXPECT_LE(dist(finals[1], finals[2]), dist(finals[0], finals[1]));
}
