#pragma once

// Acceptance criteria for the laboratory, runnable through the CLI
// (`nonfick verify`) and the test suite. Each criterion prints one
// pass/fail line; every tolerance is pinned here.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonfick/estimates.hpp"
#include "nonfick/residual.hpp"
#include "nonfick/scenario.hpp"
#include "nonfick/solvers.hpp"

namespace nonfick {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;

    CriterionResult() = default;
    CriterionResult(int id_, std::string name_)
        : id(id_), name(std::move(name_)) {}
};

namespace acceptance_detail {

constexpr double kPi = std::numbers::pi;

inline ScalarField random_interior(const GridPtr& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField f(g);
    for (int idx : g->interior_nodes) f[idx] = dist(rng);
    return f;
}

// --- criterion 1: discrete calculus -------------------------------------
inline CriterionResult discrete_calculus() {
    CriterionResult r{1, "discrete calculus (duality, Poisson roundtrip, K_Omega)"};
    std::mt19937_64 rng(11ull);
    GridPtr g1 = build_grid(1, {1.0}, {64});
    GridPtr g2 = build_grid(2, {1.0, 1.0}, {12, 12});
    double worst_dual = 0.0, worst_round = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const GridPtr& g = rep % 2 ? g2 : g1;
        ScalarField f = random_interior(g, rng);
        VectorField F(g);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (auto& v : F.fx) v = dist(rng);
        for (auto& v : F.fy) v = dist(rng);
        VectorField gf = gradient(f, DirichletTrace::zero(*g));
        ScalarField dF = divergence(F);
        const double scale = std::max(1.0, norm(gf) * norm(F) +
                                               norm(f, NormKind::L2) *
                                                   norm(dF, NormKind::L2));
        worst_dual = std::max(worst_dual,
                              std::abs(inner(gf, F) + inner(f, dF)) / scale);

        ScalarField back = inv_laplacian(laplacian(f, DirichletTrace::zero(*g)));
        double num = 0.0, den = 0.0;
        for (int idx : g->interior_nodes) {
            num += (back[idx] - f[idx]) * (back[idx] - f[idx]);
            den += f[idx] * f[idx];
        }
        worst_round = std::max(worst_round, std::sqrt(num / den));
    }
    GridPtr g200 = build_grid(1, {1.0}, {200});
    const double K = friedrichs_constant(*g200);
    const double K_err = std::abs(K - 1.0 / kPi);
    r.pass = worst_dual <= 1e-12 && worst_round <= 1e-10 && K_err <= 1e-4;
    std::ostringstream d;
    d << "duality " << format_double(worst_dual) << " (<=1e-12), roundtrip "
      << format_double(worst_round) << " (<=1e-10), |K-1/pi| "
      << format_double(K_err) << " (<=1e-4)";
    r.detail = d.str();
    return r;
}

// --- criterion 2: Fick reduction -----------------------------------------
inline CriterionResult fick_reduction() {
    CriterionResult r{2, "Fick reduction (heat kernel, spatial order)"};
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = constant_coeff(0.0);
    p.beta0 = constant_coeff(1.0);
    TransformedCoefficients tc = transform(std::move(p));
    auto linf_error = [&](int cells, double dt) {
        GridPtr g = build_grid(1, {1.0}, {cells});
        State s0;
        s0.t = 0.0;
        s0.u = make_field(g, [](Point q) { return std::sin(kPi * q[0]); });
        s0.varsigma = ScalarField(g);
        Trajectory traj = simulate(s0, tc, Background::zero(), 0.1, dt);
        double linf = 0.0;
        const State& fin = traj.back();
        for (int idx = 0; idx < g->node_count(); ++idx) {
            const double expect = std::exp(-kPi * kPi * 0.1) *
                                  std::sin(kPi * g->point(idx)[0]);
            linf = std::max(linf, std::abs(fin.u[idx] - expect));
        }
        return linf;
    };
    const double e200 = linf_error(200, 1e-4);
    const double e100 = linf_error(100, 4e-4); // dt scaled with h^2
    const double order = std::log2(e100 / e200);
    r.pass = e200 <= 1e-3 && order >= 1.9;
    std::ostringstream d;
    d << "Linf " << format_double(e200) << " (<=1e-3), spatial order "
      << format_double(order) << " (>=1.9)";
    r.detail = d.str();
    return r;
}

// --- criterion 3: stress integrator --------------------------------------
inline CriterionResult stress_exactness() {
    CriterionResult r{3, "stress integrator (constant-coefficient exactness, order)"};
    const double b = 1.7, c = 0.9, t = 0.7;
    PrimalCoefficients pc;
    pc.D0 = constant_coeff(1.0);
    pc.E0 = constant_coeff(0.0);
    pc.beta0 = constant_coeff(b);
    pc.mu0 = constant_law(c);
    TransformedCoefficients tc_const = transform(std::move(pc));
    GridPtr g = build_grid(1, {1.0}, {8});
    ScalarField s0(g, 0.4), u1(g, 1.0);
    ScalarField s1 = stress_step(s0, u1, u1, tc_const,
                                 {t, StressStepPlan::UInterp::LinearInTime, 2});
    const double expect = 0.4 * std::exp(-b * t) + (c / b) * (1.0 - std::exp(-b * t));
    double worst = 0.0;
    for (int idx = 0; idx < g->node_count(); ++idx)
        worst = std::max(worst, std::abs(s1[idx] - expect));

    PrimalCoefficients ps;
    ps.D0 = constant_coeff(1.0);
    ps.E0 = constant_coeff(0.0);
    ps.beta0 = [](double tt, Point, double u, double) {
        return 1.0 + 0.3 * std::sin(2.0 * tt) + 0.2 * u;
    };
    ps.mu0 = [](double u) { return 0.5 + 0.1 * u; };
    TransformedCoefficients tc_smooth = transform(std::move(ps));
    auto u_of_t = [](double tt) { return 0.5 + 0.4 * std::sin(3.0 * tt); };
    auto reference = [&]() { // fine RK4 of the pointwise law
        const int n = 200000;
        const double dt = 1.0 / n;
        double s = 0.8;
        auto rhs = [&](double tt, double sv) {
            const double u = u_of_t(tt);
            return tc_smooth.beta1(tt, g->point(0), u, sv) * sv +
                   tc_smooth.gamma(tt, g->point(0), u, sv) * u;
        };
        for (int k = 0; k < n; ++k) {
            const double tt = k * dt;
            const double k1 = rhs(tt, s);
            const double k2 = rhs(tt + 0.5 * dt, s + 0.5 * dt * k1);
            const double k3 = rhs(tt + 0.5 * dt, s + 0.5 * dt * k2);
            const double k4 = rhs(tt + dt, s + dt * k3);
            s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return s;
    }();
    auto run = [&](double dt) {
        ScalarField s(g, 0.8);
        s.time = 0.0;
        const int n = static_cast<int>(std::llround(1.0 / dt));
        for (int k = 0; k < n; ++k) {
            ScalarField ua(g, u_of_t(k * dt)), ub(g, u_of_t((k + 1) * dt));
            s = stress_step(s, ua, ub, tc_smooth,
                            {dt, StressStepPlan::UInterp::LinearInTime, 2});
        }
        return std::abs(s[0] - reference);
    };
    const double order = std::log2(run(0.02) / run(0.01));
    r.pass = worst <= 1e-12 && order >= 1.9;
    std::ostringstream d;
    d << "constant-coefficient error " << format_double(worst)
      << " (<=1e-12), refinement order " << format_double(order) << " (>=1.9)";
    r.detail = d.str();
    return r;
}

// --- criterion 4: abstract contraction vs linear-algebra oracle ----------
inline CriterionResult abstract_oracle() {
    CriterionResult r{4, "abstract time-offset solve vs dense propagator oracle"};
    GridPtr g = build_grid(1, {1.0}, {64});
    const double T = 0.2, dt = 2e-3;
    const auto& A = g->poisson().minus_laplacian;
    ScalarField a = make_field(g, [](Point p) { return 0.8 * std::sin(kPi * p[0]); });
    auto res = solve_reproductive_abstract(g, A, {}, a, T, dt, {1e-12, 400, 1.0});

    // oracle: dense implicit-Euler propagator, (I - S) b = a solved directly
    const int n = g->interior_count();
    Eigen::SparseMatrix<double> M(n, n);
    M.setIdentity();
    M = M + dt * A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(M);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n, n);
    const int steps = static_cast<int>(std::llround(T / dt));
    for (int k = 0; k < steps; ++k) S = fact.solve(S);
    Eigen::VectorXd a_vec(n);
    for (int p = 0; p < n; ++p)
        a_vec(p) = a[g->interior_nodes[static_cast<std::size_t>(p)]];
    Eigen::VectorXd b_oracle =
        (Eigen::MatrixXd::Identity(n, n) - S).partialPivLu().solve(a_vec);

    double num = 0.0, den = 0.0;
    for (int p = 0; p < n; ++p) {
        const double bi = res.b[g->interior_nodes[static_cast<std::size_t>(p)]];
        num += (bi - b_oracle(p)) * (bi - b_oracle(p));
        den += b_oracle(p) * b_oracle(p);
    }
    const double rel = std::sqrt(num / den);

    const double K = friedrichs_constant(*g);
    const double alpha = 1.0 / (K * K); // smallest discrete eigenvalue
    const double bound = std::exp(-alpha * T) * 1.05;
    double worst_ratio = 0.0;
    for (std::size_t m = 2; m < res.report.residuals.size(); ++m) {
        if (res.report.residuals[m] < 1e-13) break;
        worst_ratio = std::max(worst_ratio, res.report.ratios[m - 1]);
    }
    r.pass = res.report.accepted && rel <= 1e-8 && worst_ratio <= bound;
    std::ostringstream d;
    d << "relative gap to oracle " << format_double(rel)
      << " (<=1e-8), worst ratio " << format_double(worst_ratio) << " (<= "
      << format_double(bound) << ")";
    r.detail = d.str();
    return r;
}

// --- criterion 5: threshold arithmetic ------------------------------------
inline CriterionResult threshold_arithmetic() {
    CriterionResult r{5, "threshold constants k, T0, C1, C2"};
    auto cert = [](double K_mu, double K_g, double d) {
        BoundsCertificate c;
        c.K_mu = K_mu;
        c.K_g = K_g;
        c.d = d;
        return c;
    };
    EstimateReport r1 = compute_thresholds(cert(1, 0, 1), 0.7);
    EstimateReport r2 = compute_thresholds(cert(0, 0, 1), 1.0);
    EstimateReport r3 = compute_thresholds(cert(0, 1, 1), 1.0 / kPi);
    const double k3 = 4.0 + 1.5 / (kPi * kPi);
    const bool ok1 = r1.k == 6.0 && r1.T0 == 1.0 / 6.0;
    const bool ok2 = r2.k == 4.0 && r2.T0 == 0.25;
    const bool ok3 = std::abs(r3.k - k3) <= 1e-15 * k3 &&
                     std::abs(r3.T0 - 1.0 / k3) <= 1e-15;
    r.pass = ok1 && ok2 && ok3;
    std::ostringstream d;
    d << "k(6, 4, " << format_double(r3.k) << "), T0(1/6, 0.25, "
      << format_double(r3.T0) << ")";
    r.detail = d.str();
    return r;
}

// --- criterion 6: reproductive demo ---------------------------------------
inline std::string scratch_dir(const std::string& name) {
    return (std::filesystem::temp_directory_path() / "nonfick_acceptance" / name)
        .string();
}

inline CriterionResult reproductive_demo() {
    CriterionResult r{6, "reproductive run (3 starts, monitors, within T0)"};
    ScenarioConfig cfg = load_scenario("reproductive_demo", {});
    ScenarioObjects sc = build_scenario(cfg);
    const bool within = cfg.T <= sc.estimates.T0;
    RunOutcome out = run_scenario(cfg, scratch_dir("reproductive_demo"));
    r.pass = within && out.exit_code == 0;
    std::ostringstream d;
    d << "T=" << format_double(cfg.T) << " vs T0="
      << format_double(sc.estimates.T0) << (within ? " (inside)" : " (OUTSIDE)")
      << ", run " << (out.exit_code == 0 ? "accepted" : "not accepted");
    r.detail = d.str();
    return r;
}

// --- criterion 7: periodic demo + forced linear mode ----------------------
inline CriterionResult periodic_demo() {
    CriterionResult r{7, "periodic run (T=1) and forced-mode closed form"};
    ScenarioConfig cfg = load_scenario("periodic_demo", {});
    RunOutcome out = run_scenario(cfg, scratch_dir("periodic_demo"));

    // linear forced-mode variant: u' + L u = sin(2 pi t) sin(pi x), periodic;
    // per discrete mode the response has the single-frequency closed form
    GridPtr g = build_grid(1, {1.0}, {64});
    const double T = 1.0, dt = 1e-4, om = 2.0 * kPi / T;
    const auto& A = g->poisson().minus_laplacian;
    const double h = g->spacing[0];
    const double lam = 2.0 * (1.0 - std::cos(kPi * h)) / (h * h);
    Eigen::VectorXd mode(g->interior_count());
    for (int p = 0; p < g->interior_count(); ++p)
        mode(p) = std::sin(kPi * g->point(g->interior_nodes[static_cast<std::size_t>(p)])[0]);
    auto forcing = [&](double t) { return (std::sin(om * t) * mode).eval(); };
    auto res = solve_reproductive_abstract(g, A, forcing, ScalarField(g), T, dt,
                                           {1e-11, 100, 1.0});
    // project the propagated solution onto the mode over one period
    Eigen::SparseMatrix<double> M(g->interior_count(), g->interior_count());
    M.setIdentity();
    M = M + dt * A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(M);
    Eigen::VectorXd u(g->interior_count());
    for (int p = 0; p < g->interior_count(); ++p)
        u(p) = res.b[g->interior_nodes[static_cast<std::size_t>(p)]];
    const double denom = lam * lam + om * om;
    double worst = 0.0, amp = 0.0;
    const int steps = static_cast<int>(std::llround(T / dt));
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        const double a_num = u.dot(mode) / mode.squaredNorm();
        const double a_exact = (lam * std::sin(om * t) - om * std::cos(om * t)) / denom;
        worst = std::max(worst, std::abs(a_num - a_exact));
        amp = std::max(amp, std::abs(a_exact));
        if (k < steps) u = fact.solve((u + dt * forcing((k + 1) * dt)).eval());
    }
    const bool mode_ok = worst <= 0.01 * amp;
    r.pass = out.exit_code == 0 && mode_ok;
    std::ostringstream d;
    d << "run " << (out.exit_code == 0 ? "accepted" : "not accepted")
      << ", forced-mode error " << format_double(worst) << " vs 1% of "
      << format_double(amp);
    r.detail = d.str();
    return r;
}

// --- criterion 8: coercivity checker --------------------------------------
inline CriterionResult coercivity_checker() {
    CriterionResult r{8, "coercivity margin vs unit-sphere brute force"};
    auto brute = [](double D, double E, double beta, double mu, double Gamma) {
        const double c = E * Gamma - beta / Gamma;
        auto q = [&](double th) {
            const double xi = std::cos(th), eta = std::sin(th);
            return D * xi * xi - mu * eta * eta + c * xi * eta;
        };
        const int n = 4096;
        double best = q(0.0), best_th = 0.0;
        for (int k = 1; k < n; ++k) {
            const double th = 2.0 * kPi * k / n;
            if (q(th) < best) {
                best = q(th);
                best_th = th;
            }
        }
        double lo = best_th - 2.0 * kPi / n, hi = best_th + 2.0 * kPi / n;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = hi - gr * (hi - lo), bpt = lo + gr * (hi - lo);
        double fa = q(a), fb = q(bpt);
        for (int it = 0; it < 100; ++it) {
            if (fa < fb) {
                hi = bpt;
                bpt = a;
                fb = fa;
                a = hi - gr * (hi - lo);
                fa = q(a);
            } else {
                lo = a;
                a = bpt;
                fa = fb;
                bpt = lo + gr * (hi - lo);
                fb = q(bpt);
            }
        }
        return std::min(fa, fb);
    };
    std::mt19937_64 rng(321ull);
    std::uniform_real_distribution<double> dpos(0.2, 3.0), dany(-2.0, 2.0),
        dgam(0.1, 8.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double D = dpos(rng), E = dany(rng), beta = dany(rng),
                     mu = -dpos(rng), G = dgam(rng);
        const double c = E * G - beta / G;
        const double eig = 0.5 * ((D - mu) - std::hypot(D + mu, c));
        worst = std::max(worst, std::abs(eig - brute(D, E, beta, mu, G)));
    }
    const double c_ex = 0.2 * 1.0 - (-0.2) / 1.0;
    const double worked = 0.5 * ((1.0 - (-1.0)) - std::hypot(1.0 + (-1.0), c_ex));
    r.pass = worst <= 1e-6 && std::abs(worked - 0.8) <= 1e-12;
    std::ostringstream d;
    d << "eigenvalue vs brute force " << format_double(worst)
      << " (<=1e-6), worked example Gamma0 " << format_double(worked)
      << " (=0.8)";
    r.detail = d.str();
    return r;
}

// --- criterion 9: uniform energy bound and derivative norms ----------------
inline CriterionResult uniform_energy() {
    CriterionResult r{9, "uniform energy bound across lambda/eps and sqrt(eps) fit"};
    PrimalCoefficients p;
    p.D0 = constant_coeff(1.0);
    p.E0 = [](double, Point, double u, double) { return e_rational(u, 0.5, 0.05); };
    p.beta0 = [](double, Point, double u, double) {
        return beta_tanh(u, {2.0, 1.0, 0.5, 0.25});
    };
    p.mu0 = constant_law(0.5);
    TransformedCoefficients tc = transform(std::move(p));
    // length-2 domain keeps eps*lambda_1^2 small across the whole eps sweep,
    // so the energy is dominated by its regularization-independent part
    GridPtr g = build_grid(1, {2.0}, {100});
    const double T = 0.1, dt = 1e-3;
    Background phi = Background::analytic(
        [T](double t, Point) { return 0.4 + 0.05 * std::sin(2.0 * kPi * t / T); },
        [T](double t, Point) {
            return 0.05 * 2.0 * kPi / T * std::cos(2.0 * kPi * t / T);
        });
    ScalarField s0(g, 0.1);
    auto table = scenario_detail::integrate_psi_table(g, tc, phi, s0, T, dt, false);
    Background psi = scenario_detail::background_from_table(table);
    HomogenizedCoefficients hc = homogenize(g, tc, phi, psi);

    RegularizedState r0;
    r0.t = 0.0;
    r0.v = make_field(g, [](Point q) { return 0.1 * std::sin(kPi * q[0] / 2.0); });
    r0.tau = make_field(g, [](Point q) { return 0.3 * std::sin(kPi * q[0] / 2.0); });

    std::vector<double> energies;
    std::vector<double> deriv_norms; // lambda = 1 runs, per eps
    const std::vector<double> lambdas{0.25, 0.5, 1.0};
    const std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
    for (double lambda : lambdas) {
        for (double eps : epsilons) {
            r0.eps = eps;
            r0.lambda = lambda;
            RegularizedTrajectory traj = simulate_regularized(r0, hc, T, dt);
            energies.push_back(energy_lhs(traj));
            if (lambda == 1.0) {
                auto [nv, nt] = derivative_norm_report(traj);
                deriv_norms.push_back(nv + nt);
            }
        }
    }
    std::vector<double> sorted = energies;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double emax = sorted.back();
    const bool uniform = emax <= 2.0 * median;

    // affine fit y = c0 + c1 sqrt(eps) over the lambda = 1 sweep
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const int n = static_cast<int>(deriv_norms.size());
    for (int i = 0; i < n; ++i) {
        const double x = std::sqrt(epsilons[static_cast<std::size_t>(i)]);
        sx += x;
        sy += deriv_norms[static_cast<std::size_t>(i)];
        sxx += x * x;
        sxy += x * deriv_norms[static_cast<std::size_t>(i)];
    }
    const double c1 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double c0 = (sy - c1 * sx) / n;
    double res2 = 0.0, mean = sy / n;
    for (int i = 0; i < n; ++i) {
        const double x = std::sqrt(epsilons[static_cast<std::size_t>(i)]);
        const double e = deriv_norms[static_cast<std::size_t>(i)] - (c0 + c1 * x);
        res2 += e * e;
    }
    const double rel_res = std::sqrt(res2 / n) / mean;
    const bool fit_ok = c1 >= -1e-6 * mean && rel_res <= 0.10;

    r.pass = uniform && fit_ok;
    std::ostringstream d;
    d << "energy max/median " << format_double(emax / median)
      << " (<=2), sqrt(eps) slope " << format_double(c1) << ", fit residual "
      << format_double(rel_res) << " (<=0.1)";
    r.detail = d.str();
    return r;
}

// --- criterion 10: homogenized-system consistency --------------------------
inline CriterionResult homogenized_consistency() {
    CriterionResult r{10, "homogenized residual (manufactured exactness, refinement)"};
    // manufactured polynomial pair with grid-aware forcing
    const double D = 0.8, E = 0.15, beta = 0.4, mu = -1.1;
    const double a0 = 0.3, a1 = 0.7, b0 = 0.2, b1 = -0.5;
    GridPtr g = build_grid(1, {1.0}, {50});
    const double h = g->spacing[0];
    HomogenizedCoefficients hc;
    hc.grid = g;
    hc.D = constant_coeff(D);
    hc.E = constant_coeff(E);
    hc.beta = constant_coeff(beta);
    hc.mu = constant_coeff(mu);
    hc.f_local = [=](double t, Point x, double, double) {
        const double p2 = -a1, p1 = a1;
        const double p0 = 2.0 * D * (a0 + a1 * t) + 2.0 * E * (b0 + b1 * t);
        const double xx = x[0];
        return Vec2{p2 / 3.0 * xx * xx * xx + p1 / 2.0 * xx * xx +
                        (p0 - p2 * h * h / 3.0) * xx,
                    0.0};
    };
    hc.g = [=](double t, Point x, double, double) {
        const double q0 = -2.0 * b1 + 2.0 * beta * (a0 + a1 * t) +
                          2.0 * mu * (b0 + b1 * t);
        return Vec2{q0 * x[0], 0.0};
    };
    Trajectory mtraj;
    mtraj.dt = 0.01;
    for (int k = 0; k <= 20; ++k) {
        State s;
        s.t = k * mtraj.dt;
        s.u = make_field(g, [&](Point q) {
            return (a0 + a1 * s.t) * q[0] * (1.0 - q[0]);
        });
        s.varsigma = make_field(g, [&](Point q) {
            return (b0 + b1 * s.t) * q[0] * (1.0 - q[0]);
        });
        mtraj.states.push_back(std::move(s));
    }
    auto [mv, mt] = homogenized_residual(mtraj, Background::zero(),
                                         Background::zero(), hc);

    // refinement on a smooth simulated run
    const double b = 1.2, mval = 0.5, c = 0.5, s0b = 0.2;
    PrimalCoefficients p;
    p.D0 = [](double, Point, double u, double) { return 1.0 + 0.2 * u * u; };
    p.E0 = [](double, Point, double u, double) { return 0.2 + 0.1 * u; };
    p.beta0 = constant_coeff(b);
    p.mu0 = constant_law(mval);
    TransformedCoefficients tc = transform(std::move(p));
    Background phi = Background::analytic([c](double, Point) { return c; },
                                          [](double, Point) { return 0.0; });
    const double sinf = mval * c / b;
    Background psi = Background::analytic(
        [=](double t, Point) {
            return s0b * std::exp(-b * t) + sinf * (1.0 - std::exp(-b * t));
        },
        [=](double t, Point) { return -b * (s0b - sinf) * std::exp(-b * t); });
    auto residual_at = [&](int cells, double dt) {
        GridPtr gg = build_grid(1, {1.0}, {cells});
        HomogenizedCoefficients hh = homogenize(gg, tc, phi, psi);
        State st;
        st.t = 0.0;
        st.u = make_field(gg, [c](Point q) { return c + 0.3 * std::sin(kPi * q[0]); });
        st.varsigma = make_field(gg, [=](Point q) {
            return s0b + 0.1 * std::sin(2.0 * kPi * q[0]);
        });
        Trajectory traj = simulate(st, tc, phi, 0.04, dt);
        return homogenized_residual(traj, phi, psi, hh);
    };
    auto [rv1, rt1] = residual_at(64, 2e-3);
    auto [rv2, rt2] = residual_at(128, 1e-3);
    const double ratio = std::min(rv1 / rv2, rt1 / rt2);
    r.pass = mv <= 1e-8 && mt <= 1e-8 && ratio >= 1.8;
    std::ostringstream d;
    d << "manufactured residuals (" << format_double(mv) << ", "
      << format_double(mt) << ") (<=1e-8), refinement ratio "
      << format_double(ratio) << " (>=1.8)";
    r.detail = d.str();
    return r;
}

} // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance_criteria() {
    using namespace acceptance_detail;
    std::vector<std::function<CriterionResult()>> criteria{
        discrete_calculus,    fick_reduction,     stress_exactness,
        abstract_oracle,      threshold_arithmetic, reproductive_demo,
        periodic_demo,        coercivity_checker, uniform_energy,
        homogenized_consistency};
    std::vector<CriterionResult> results;
    for (auto& fn : criteria) {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult res = fn();
        res.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        results.push_back(std::move(res));
    }
    return results;
}

/// Runs every acceptance criterion, prints one line each, returns true iff
/// all pass.
inline bool run_acceptance(std::ostream& out) {
    bool all = true;
    for (const CriterionResult& r : run_acceptance_criteria()) {
        all = all && r.pass;
        out << "[" << (r.pass ? "PASS" : "FAIL") << "] criterion " << r.id
            << ": " << r.name << "\n       " << r.detail << "  ("
            << format_double(r.seconds) << " s)\n";
    }
    out << (all ? "acceptance: all criteria passed"
                : "acceptance: FAILURES present")
        << "\n";
    return all;
}

} // namespace nonfick
