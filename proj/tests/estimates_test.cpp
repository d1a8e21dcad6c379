#include "nonfick/estimates.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nonfick;

namespace {

constexpr double kPi = std::numbers::pi;

BoundsCertificate cert_with(double K_mu, double K_g, double K_beta, double gt,
                            double K_E, double K_f, double d) {
    BoundsCertificate c;
    c.K_mu = K_mu;
    c.K_g = K_g;
    c.K_beta = K_beta;
    c.g_tilde_norm = gt;
    c.K_E = K_E;
    c.K_f = K_f;
    c.d = d;
    return c;
}

// Unit-sphere minimum of the coercivity quadratic form
//   Q(xi, eta) = D xi^2 - mu eta^2 + (E G - beta/G) xi eta
// by dense angular sampling plus golden-section refinement; the brute-force
// oracle for the eigenvalue shortcut.
double brute_force_gamma0(double D, double E, double beta, double mu,
                          double Gamma) {
    const double c = E * Gamma - beta / Gamma;
    auto q = [&](double th) {
        const double xi = std::cos(th), eta = std::sin(th);
        return D * xi * xi - mu * eta * eta + c * xi * eta;
    };
    const int n = 4096;
    double best = q(0.0), best_th = 0.0;
    for (int k = 1; k < n; ++k) {
        const double th = 2.0 * kPi * k / n;
        const double v = q(th);
        if (v < best) {
            best = v;
            best_th = th;
        }
    }
    double lo = best_th - 2.0 * kPi / n, hi = best_th + 2.0 * kPi / n;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = q(a), fb = q(b);
    for (int it = 0; it < 100; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = q(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = q(b);
        }
    }
    return std::min(fa, fb);
}

HomogenizedCoefficients raw_hc(const GridPtr& g, double D, double E,
                               double beta, double mu) {
    HomogenizedCoefficients hc;
    hc.grid = g;
    hc.D = constant_coeff(D);
    hc.E = constant_coeff(E);
    hc.beta = constant_coeff(beta);
    hc.mu = constant_coeff(mu);
    hc.g = zero_vector_coeff();
    hc.f_local = zero_vector_coeff();
    return hc;
}

} // namespace

TEST(Thresholds, TabulatedTuplesExact) {
    // K_mu = 1, everything else zero, d = 1
    EstimateReport r1 = compute_thresholds(cert_with(1, 0, 0, 0, 0, 0, 1), 0.5);
    EXPECT_EQ(r1.C1, 0.0);
    EXPECT_EQ(r1.C2, 0.0);
    EXPECT_EQ(r1.k, 6.0);
    EXPECT_EQ(r1.T0, 1.0 / 6.0);

    // all constants zero
    EstimateReport r2 = compute_thresholds(cert_with(0, 0, 0, 0, 0, 0, 1), 1.0);
    EXPECT_EQ(r2.k, 4.0);
    EXPECT_EQ(r2.T0, 0.25);

    // K_g = 1, K_Omega = 1/pi
    EstimateReport r3 = compute_thresholds(cert_with(0, 1, 0, 0, 0, 0, 1), 1.0 / kPi);
    const double expect_k = 4.0 + 1.5 / (kPi * kPi);
    EXPECT_NEAR(r3.k, expect_k, 1e-15 * expect_k);
    EXPECT_NEAR(r3.T0, 1.0 / expect_k, 1e-15);
    EXPECT_NEAR(r3.k, 4.1520, 1e-4);
    EXPECT_NEAR(r3.T0, 0.2408, 1e-4);
}

TEST(Thresholds, MonotoneInEveryConstant) {
    std::mt19937_64 rng(8ull);
    std::uniform_real_distribution<double> d01(0.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        BoundsCertificate c = cert_with(d01(rng), d01(rng), d01(rng), d01(rng),
                                        d01(rng), d01(rng), 0.5 + d01(rng));
        const double K = 0.1 + d01(rng);
        const double T0 = compute_thresholds(c, K).T0;
        auto bump = [&](auto set) {
            BoundsCertificate cc = c;
            set(cc);
            EXPECT_LE(compute_thresholds(cc, K).T0, T0 + 1e-15);
        };
        bump([](BoundsCertificate& cc) { cc.K_mu += 0.5; });
        bump([](BoundsCertificate& cc) { cc.K_g += 0.5; });
        bump([](BoundsCertificate& cc) { cc.K_beta += 0.5; });
        bump([](BoundsCertificate& cc) { cc.K_E += 0.5; });
        bump([](BoundsCertificate& cc) { cc.K_f += 0.5; });
        bump([](BoundsCertificate& cc) { cc.g_tilde_norm += 0.5; });
    }
    EXPECT_THROW(compute_thresholds(cert_with(0, 0, 0, 0, 0, 0, 0.0), 1.0),
                 CertificateError);
}

TEST(EnergyLhs, ZeroTrajectoryVanishes) {
    GridPtr g = build_grid(1, {1.0}, {16});
    RegularizedTrajectory traj;
    traj.dt = 0.1;
    traj.eps = 1e-2;
    traj.lambda = 0.5;
    RegularizedState r;
    r.v = ScalarField(g);
    r.tau = ScalarField(g);
    r.eps = traj.eps;
    r.lambda = traj.lambda;
    for (int k = 0; k < 4; ++k) traj.states.push_back(r);
    EXPECT_EQ(energy_lhs(traj), 0.0);
}

TEST(EnergyLhs, SingleDecayingModeClosedForm) {
    GridPtr g = build_grid(1, {1.0}, {64});
    const double h = g->spacing[0];
    const double lam_h = 2.0 * (1.0 - std::cos(kPi * h)) / (h * h);
    const double eps = 1e-2, dt = 1e-4, T = 0.1, lambda = 0.0;
    const double a = eps * lam_h * lam_h;

    RegularizedTrajectory traj;
    traj.dt = dt;
    traj.eps = eps;
    traj.lambda = lambda;
    ScalarField mode = make_field(g, [](Point p) { return std::sin(kPi * p[0]); });
    const int steps = static_cast<int>(std::llround(T / dt));
    for (int k = 0; k <= steps; ++k) {
        RegularizedState r;
        r.t = k * dt;
        r.eps = eps;
        r.lambda = lambda;
        r.v = mode;
        for (auto& x : r.v.values) x *= std::exp(-a * k * dt);
        r.tau = ScalarField(g);
        traj.states.push_back(std::move(r));
    }
    // lambda = 0: only the eps ||v||_2^2 term contributes
    const double h2 = norm_h2(mode);
    const double expect =
        eps * h2 * h2 * (1.0 - std::exp(-2.0 * a * T)) / (2.0 * a);
    EXPECT_NEAR(energy_lhs(traj), expect, 0.05 * expect);
}

TEST(EnergyLhs, WeightStructure) {
    GridPtr g = build_grid(1, {1.0}, {32});
    RegularizedTrajectory traj;
    traj.dt = 0.25;
    traj.eps = 0.0;
    traj.lambda = 0.0;
    RegularizedState r;
    r.eps = 0.0;
    r.lambda = 0.0;
    r.v = make_field(g, [](Point p) { return p[0] * (1.0 - p[0]); });
    r.tau = make_field(g, [](Point p) { return std::sin(kPi * p[0]); });
    traj.states.assign(3, r);
    // with lambda = 0 and eps = 0 only the tau gradient term remains
    const double h1t = norm(r.tau, NormKind::H1_0);
    EXPECT_NEAR(energy_lhs(traj), h1t * h1t * 0.5, 1e-12); // 2 intervals * dt, trapezoid
    // the periodic weighting multiplies the tau term by lambda as well
    EXPECT_EQ(energy_lhs(traj, true), 0.0);
}

TEST(Coercivity, DiagonalFormIndependentOfGamma) {
    GridPtr g = build_grid(1, {1.0}, {16});
    HomogenizedCoefficients hc = raw_hc(g, 1.0, 0.0, 0.0, -1.0);
    auto samples = sample_box(g, {{-1, 1}, {-1, 1}}, {0, 1}, 64);
    for (double gamma : {0.25, 1.0, 4.0}) {
        std::vector<double> grid_one{gamma};
        auto [gm, g0] = coercivity_gamma_search(hc, samples, grid_one);
        EXPECT_DOUBLE_EQ(gm, gamma);
        EXPECT_NEAR(g0, 1.0, 1e-12);
    }
}

TEST(Coercivity, WorkedOffDiagonalExample) {
    GridPtr g = build_grid(1, {1.0}, {16});
    HomogenizedCoefficients hc = raw_hc(g, 1.0, 0.2, -0.2, -1.0);
    auto samples = sample_box(g, {{-1, 1}, {-1, 1}}, {0, 1}, 32);
    std::vector<double> at_one{1.0};
    auto [gm, g0] = coercivity_gamma_search(hc, samples, at_one);
    EXPECT_NEAR(g0, 0.8, 1e-12); // eigenvalues of [[1, .2],[.2, 1]]
}

TEST(Coercivity, EigenvalueMatchesBruteForceOnRandomTuples) {
    std::mt19937_64 rng(123ull);
    std::uniform_real_distribution<double> dpos(0.2, 3.0), dany(-2.0, 2.0),
        dgam(0.1, 8.0);
    for (int k = 0; k < 100; ++k) {
        const double D = dpos(rng), E = dany(rng), beta = dany(rng),
                     mu = -dpos(rng), G = dgam(rng);
        const double c = E * G - beta / G;
        const double eig = 0.5 * ((D - mu) - std::hypot(D + mu, c));
        EXPECT_NEAR(eig, brute_force_gamma0(D, E, beta, mu, G), 1e-6);
    }
}

TEST(Coercivity, SearchFindsPositiveMarginWhenOneExists) {
    GridPtr g = build_grid(1, {1.0}, {16});
    // beta/Gamma balances E*Gamma near Gamma = sqrt(beta/E)
    HomogenizedCoefficients hc = raw_hc(g, 0.9, 0.15, -1.5, -1.1);
    auto samples = sample_box(g, {{-1, 1}, {-1, 1}}, {0, 1}, 64);
    auto [gamma, gamma0] = coercivity_gamma_search(hc, samples);
    EXPECT_GT(gamma0, 0.0);
    // the refined point cannot be worse than the best dyadic grid point
    double best_grid = -1e300;
    for (int e = -10; e <= 10; ++e) {
        std::vector<double> one{std::ldexp(1.0, e)};
        best_grid = std::max(best_grid,
                             coercivity_gamma_search(hc, samples, one).second);
    }
    EXPECT_GE(gamma0, best_grid - 1e-12);
}

TEST(ValidateHypotheses, FickianPresetPasses) {
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = constant_coeff(0.0);
    p.beta0 = constant_coeff(1.0);
    p.mu0 = constant_law(0.3);
    GridPtr g = build_grid(1, {1.0}, {32});
    HomogenizedCoefficients hc =
        homogenize(g, transform(p), Background::zero(), Background::zero());
    BoundsCertificate cert =
        certify_bounds(hc, {{-1, 1}, {-1, 1}}, {0, 1}, 2000);
    EXPECT_EQ(cert.K_E, 0.0);
    HypothesisReport rep =
        validate_hypotheses(cert, hc, ProblemKind::Reproductive);
    EXPECT_TRUE(rep.pass);
    for (const auto& item : rep.items) EXPECT_TRUE(item.pass) << item.name;
}

TEST(ValidateHypotheses, FlagsInjectedEllipticityFailure) {
    PrimalCoefficients good;
    good.D0 = constant_coeff(1.0);
    good.E0 = constant_coeff(0.0);
    good.beta0 = constant_coeff(1.0);
    GridPtr g = build_grid(1, {1.0}, {32});
    HomogenizedCoefficients hc_good =
        homogenize(g, transform(good), Background::zero(), Background::zero());
    BoundsCertificate cert =
        certify_bounds(hc_good, {{-1, 1}, {-1, 1}}, {0, 1}, 2000);

    HomogenizedCoefficients hc_bad = hc_good;
    hc_bad.D = [](double, Point, double v, double) { return 0.4 - v; };
    HypothesisReport rep =
        validate_hypotheses(cert, hc_bad, ProblemKind::Reproductive);
    EXPECT_FALSE(rep.pass);
    bool ellipticity_flagged = false;
    for (const auto& item : rep.items)
        if (item.name.find("ellipticity") != std::string::npos && !item.pass)
            ellipticity_flagged = true;
    EXPECT_TRUE(ellipticity_flagged);
}

TEST(ValidateHypotheses, PeriodicModeCatchesTauDependentSource) {
    GridPtr g = build_grid(1, {1.0}, {32});
    HomogenizedCoefficients hc = raw_hc(g, 1.0, 0.1, -0.2, -1.0);
    hc.f_local = [](double, Point, double, double tau) {
        return Vec2{0.3 * tau, 0.0}; // growth in tau: strict form must fail
    };
    BoundsCertificate cert = certify_bounds(hc, {{-1, 1}, {-1, 1}}, {0, 1}, 4000);
    EXPECT_NEAR(cert.K_f, 0.3 * 1.05, 0.02);
    HypothesisReport rep = validate_hypotheses(cert, hc, ProblemKind::Periodic);
    bool growth_ok = true, strict_failed = false;
    for (const auto& item : rep.items) {
        if (item.name == "|f| <= K_f|tau| + f~") growth_ok = item.pass;
        if (item.name == "strict |f| <= f~ (K_f = 0)" && !item.pass)
            strict_failed = true;
    }
    EXPECT_TRUE(growth_ok);
    EXPECT_TRUE(strict_failed);
    EXPECT_GT(rep.Gamma0, 0.0); // coercivity itself holds for this tuple
}
