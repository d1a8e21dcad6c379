#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nonfick/evolution.hpp"

namespace nonfick {

struct PicardOptions {
    double tol = 1e-8;
    int max_iter = 200;
    double relaxation = 1.0; // in (0, 1]

    void validate() const {
        if (!(tol > 0.0)) throw ConfigError("picard: tol must be positive");
        if (max_iter < 1) throw ConfigError("picard: max_iter must be >= 1");
        if (!(relaxation > 0.0) || relaxation > 1.0)
            throw ConfigError("picard: relaxation must be in (0,1]");
    }
};

/// Iteration history of a fixed-point solve.
struct ConvergenceReport {
    std::vector<double> residuals; // ||b_{m+1} - b_m||
    std::vector<double> ratios;    // residual ratios
    double final_residual = std::numeric_limits<double>::quiet_NaN();
    double stress_residual = std::numeric_limits<double>::quiet_NaN();
    double rate_fit = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool accepted = false;
    std::string tag;

    void finish_rates() {
        ratios.clear();
        for (std::size_t m = 0; m + 1 < residuals.size(); ++m)
            ratios.push_back(residuals[m] > 0.0
                                 ? residuals[m + 1] / residuals[m]
                                 : 0.0);
        // geometric fit: least-squares slope of log r over iterations with
        // residuals above the roundoff floor
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        int n = 0;
        for (std::size_t m = 0; m < residuals.size(); ++m) {
            if (!(residuals[m] > 1e-15)) continue;
            const double x = static_cast<double>(m), y = std::log(residuals[m]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        if (n >= 2 && sxx * n - sx * sx > 0.0)
            rate_fit = std::exp((sxy * n - sx * sy) / (sxx * n - sx * sx));
    }
};

/// Vector-space callbacks for picard_iterate over an arbitrary iterate type.
template <typename V>
struct PicardSpace {
    std::function<double(const V&, const V&)> distance;
    std::function<V(double, const V&, double, const V&)> blend; // a*x + b*y
};

inline PicardSpace<ScalarField> scalar_field_space() {
    PicardSpace<ScalarField> s;
    s.distance = [](const ScalarField& a, const ScalarField& b) {
        ScalarField d = a;
        for (std::size_t k = 0; k < d.values.size(); ++k)
            d.values[k] -= b.values[k];
        return norm(d, NormKind::L2);
    };
    s.blend = [](double ca, const ScalarField& a, double cb, const ScalarField& b) {
        ScalarField out = a;
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.values[k] = ca * a.values[k] + cb * b.values[k];
        return out;
    };
    return s;
}

/// Concentration-stress pair iterated by the periodic solver.
struct FieldPair {
    ScalarField u;
    ScalarField s;
};

inline PicardSpace<FieldPair> field_pair_space() {
    PicardSpace<FieldPair> sp;
    sp.distance = [](const FieldPair& a, const FieldPair& b) {
        double du = 0.0, ds = 0.0;
        for (std::size_t k = 0; k < a.u.values.size(); ++k) {
            const double xu = a.u.values[k] - b.u.values[k];
            const double xs = a.s.values[k] - b.s.values[k];
            du += xu * xu;
            ds += xs * xs;
        }
        return std::sqrt((du + ds) * a.u.grid->node_volume());
    };
    sp.blend = [](double ca, const FieldPair& a, double cb, const FieldPair& b) {
        FieldPair out = a;
        for (std::size_t k = 0; k < out.u.values.size(); ++k) {
            out.u.values[k] = ca * a.u.values[k] + cb * b.u.values[k];
            out.s.values[k] = ca * a.s.values[k] + cb * b.s.values[k];
        }
        return out;
    };
    return sp;
}

/// Banach iteration engine with under-relaxation, residual history and a
/// divergence guard (three consecutive ratios above 10 abort early).
template <typename V, typename Map>
std::pair<V, ConvergenceReport> picard_iterate(Map&& G, V b0,
                                               const PicardSpace<V>& space,
                                               const PicardOptions& opts) {
    opts.validate();
    ConvergenceReport rep;
    V b = std::move(b0);
    int bad_streak = 0;
    for (int m = 0; m < opts.max_iter; ++m) {
        V gb = G(b);
        V b_next = opts.relaxation == 1.0
                       ? std::move(gb)
                       : space.blend(1.0 - opts.relaxation, b, opts.relaxation, gb);
        const double r = space.distance(b_next, b);
        rep.residuals.push_back(r);
        rep.iterations = m + 1;
        if (rep.residuals.size() >= 2) {
            const double prev = rep.residuals[rep.residuals.size() - 2];
            if (prev > 1e-14 && r / prev > 10.0) {
                if (++bad_streak >= 3) {
                    b = std::move(b_next);
                    rep.tag = "diverged";
                    rep.finish_rates();
                    rep.final_residual = r;
                    return {std::move(b), std::move(rep)};
                }
            } else {
                bad_streak = 0;
            }
        }
        b = std::move(b_next);
        if (r <= opts.tol) {
            rep.accepted = true;
            break;
        }
    }
    rep.final_residual = rep.residuals.empty() ? 0.0 : rep.residuals.back();
    rep.finish_rates();
    return {std::move(b), std::move(rep)};
}

/// Abstract time-offset problem u' + A u = f(t), u(T) + a = u(0) on the
/// interior unknowns, propagated by implicit Euler. A must be coercive
/// (checked on seeded random Rayleigh quotients).
struct AbstractReproductiveResult {
    ScalarField b; // fixed initial value
    ConvergenceReport report;
};

inline AbstractReproductiveResult solve_reproductive_abstract(
    const GridPtr& grid, const Eigen::SparseMatrix<double>& A,
    const std::function<Eigen::VectorXd(double)>& forcing, const ScalarField& a,
    double T, double dt, const PicardOptions& opts = {},
    const ScalarField* initial_guess = nullptr) {
    const Grid& g = *grid;
    const int n = g.interior_count();
    if (A.rows() != n || A.cols() != n)
        throw ConfigError("solve_reproductive_abstract: operator size mismatch");
    const double steps_real = T / dt;
    const int steps = static_cast<int>(std::llround(steps_real));
    if (steps < 1 || std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("solve_reproductive_abstract: T must be a multiple of dt");

    {
        std::mt19937_64 rng(0xA11CEull);
        std::normal_distribution<double> dist;
        for (int probe = 0; probe < 16; ++probe) {
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x(i) = dist(rng);
            const double rayleigh = x.dot(A * x) / x.squaredNorm();
            if (!(rayleigh > 0.0))
                throw ConfigError(
                    "solve_reproductive_abstract: operator is not coercive");
        }
    }

    Eigen::SparseMatrix<double> M =
        detail::sparse_identity(n) + dt * A;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
    if (solver.info() != Eigen::Success)
        throw NumericsError("solve_reproductive_abstract: factorization failed");

    const Eigen::VectorXd a_vec = detail::interior_vector(a);
    auto propagate = [&](const Eigen::VectorXd& b0) {
        Eigen::VectorXd u = b0;
        for (int k = 0; k < steps; ++k) {
            Eigen::VectorXd rhs = u;
            if (forcing) rhs += dt * forcing((k + 1) * dt);
            u = solver.solve(rhs);
        }
        return u;
    };

    const double vol = std::sqrt(g.node_volume());
    PicardSpace<Eigen::VectorXd> space;
    space.distance = [vol](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return vol * (x - y).norm();
    };
    space.blend = [](double ca, const Eigen::VectorXd& x, double cb,
                     const Eigen::VectorXd& y) {
        return (ca * x + cb * y).eval();
    };
    Eigen::VectorXd b0 = initial_guess ? detail::interior_vector(*initial_guess)
                                       : Eigen::VectorXd::Zero(n).eval();
    auto [b_vec, rep] = picard_iterate(
        [&](const Eigen::VectorXd& b) { return (propagate(b) + a_vec).eval(); },
        std::move(b0), space, opts);

    rep.final_residual = vol * (propagate(b_vec) + a_vec - b_vec).norm();
    AbstractReproductiveResult out;
    out.b = detail::from_interior_vector(grid, b_vec);
    out.report = std::move(rep);
    return out;
}

/// Shooting problem description shared by the reproductive and periodic
/// solvers.
struct ShootingProblem {
    enum class Mode { Reproductive, Periodic };
    Mode mode = Mode::Reproductive;
    GridPtr grid;
    double T = 0.0;
    double dt = 0.0;
    Background phi;                      // boundary concentration data
    ScalarField varsigma0;               // fixed initial stress (reproductive)
    const BoundaryTrace* psi = nullptr;  // prescribed stress trace (periodic)
    ScalarField u0_guess;
    ScalarField varsigma0_guess;         // periodic mode initial stress iterate
};

namespace detail {

inline void check_boundary_time_periodicity(const ShootingProblem& pr) {
    const Grid& g = *pr.grid;
    for (int b = 0; b < g.boundary_count(); ++b) {
        const Point x = g.point(g.boundary_nodes[static_cast<std::size_t>(b)]);
        if (std::abs(pr.phi.v(0.0, x) - pr.phi.v(pr.T, x)) > 1e-12)
            throw ConfigError(
                "shooting: boundary data must repeat, phi(0) != phi(T)");
    }
}

inline void check_coefficient_time_periodicity(const ShootingProblem& pr,
                                               const TransformedCoefficients& tc) {
    const Grid& g = *pr.grid;
    std::mt19937_64 rng(0x9e3779b9ull);
    std::uniform_real_distribution<double> uu(-1.0, 1.5), us(-1.0, 1.0);
    std::uniform_int_distribution<int> unode(0, g.node_count() - 1);
    for (int k = 0; k < 32; ++k) {
        const Point x = g.point(unode(rng));
        const double u = uu(rng), s = us(rng);
        auto close = [&](double a, double b) { return std::abs(a - b) <= 1e-12; };
        if (!close(tc.D1(0.0, x, u, s), tc.D1(pr.T, x, u, s)) ||
            !close(tc.E1(0.0, x, u, s), tc.E1(pr.T, x, u, s)) ||
            !close(tc.beta1(0.0, x, u, s), tc.beta1(pr.T, x, u, s)) ||
            !close(tc.gamma(0.0, x, u, s), tc.gamma(pr.T, x, u, s)) ||
            !close(tc.M1(0.0, x, u, s)[0], tc.M1(pr.T, x, u, s)[0]))
            throw ConfigError(
                "shooting: coefficients are not time-periodic with period T");
    }
}

} // namespace detail

struct ReproductiveResult {
    Trajectory trajectory;
    ConvergenceReport report;
};

/// Shooting iteration for the repeating-concentration problem: the map
/// takes an initial concentration through [0, T] with the stress restarted
/// from the fixed varsigma0 on every shot, and feeds u(T) back as the next
/// initial guess. When T exceeds the certified threshold T0 the solve still
/// runs but the report is tagged outside-guarantee.
inline ReproductiveResult solve_reproductive_concentration(
    const ShootingProblem& problem, const TransformedCoefficients& tc,
    std::optional<double> T0, const PicardOptions& popts = {},
    const EvolveOptions& eopts = {}) {
    if (problem.mode != ShootingProblem::Mode::Reproductive)
        throw ConfigError("solve_reproductive_concentration: wrong mode");
    detail::check_boundary_time_periodicity(problem);

    int shot_index = 0;
    auto shoot = [&](const ScalarField& b) {
        State s0;
        s0.t = 0.0;
        s0.u = b;
        s0.varsigma = problem.varsigma0; // the stress restarts on every shot
        try {
            return simulate(s0, tc, problem.phi, problem.T, problem.dt, eopts);
        } catch (const NumericsError& err) {
            throw NumericsError("shooting iteration " +
                                std::to_string(shot_index) + ": " + err.what());
        }
    };

    auto [b_star, rep] = picard_iterate(
        [&](const ScalarField& b) {
            ++shot_index;
            return shoot(b).back().u;
        },
        problem.u0_guess, scalar_field_space(), popts);

    Trajectory traj = shoot(b_star);
    {
        ScalarField diff = traj.back().u;
        for (std::size_t k = 0; k < diff.values.size(); ++k)
            diff.values[k] -= traj.states.front().u.values[k];
        rep.final_residual = norm(diff, NormKind::L2);
    }
    rep.accepted = rep.accepted && rep.final_residual <= popts.tol;
    if (T0 && problem.T > *T0)
        rep.tag = rep.tag.empty() ? "outside-guarantee"
                                  : rep.tag + ",outside-guarantee";
    return {std::move(traj), std::move(rep)};
}

/// Coercivity gate carried into the periodic solver (condition vi plus the
/// strict majorant form of condition v).
struct PeriodicGate {
    double Gamma = 0.0;
    double Gamma0 = 0.0;
    double K_f = 0.0;
    double K_g = 0.0;

    bool valid() const {
        return Gamma0 > 0.0 && K_f <= 1e-8 && K_g <= 1e-8;
    }
};

struct PeriodicResult {
    Trajectory trajectory;
    ConvergenceReport report;
};

/// Picard iteration on the (u(0), varsigma(0)) pair for the time-periodic
/// problem. Refuses to run without a valid coercivity gate.
inline PeriodicResult solve_periodic(const ShootingProblem& problem,
                                     const TransformedCoefficients& tc,
                                     const PeriodicGate& gate,
                                     const PicardOptions& popts = {},
                                     const EvolveOptions& eopts = {}) {
    if (problem.mode != ShootingProblem::Mode::Periodic)
        throw ConfigError("solve_periodic: wrong mode");
    if (!gate.valid())
        throw CertificateError(
            "solve_periodic: coercivity gate missing or invalid (needs "
            "Gamma0 > 0 and the strict f/g majorant form)");
    detail::check_boundary_time_periodicity(problem);
    detail::check_coefficient_time_periodicity(problem, tc);

    EvolveOptions inner = eopts;
    inner.psi_override = problem.psi;

    int shot_index = 0;
    auto shoot = [&](const FieldPair& p) {
        State s0;
        s0.t = 0.0;
        s0.u = p.u;
        s0.varsigma = p.s;
        try {
            return simulate(s0, tc, problem.phi, problem.T, problem.dt, inner);
        } catch (const NumericsError& err) {
            throw NumericsError("shooting iteration " +
                                std::to_string(shot_index) + ": " + err.what());
        }
    };

    FieldPair guess{problem.u0_guess, problem.varsigma0_guess};
    auto [pair_star, rep] = picard_iterate(
        [&](const FieldPair& p) {
            ++shot_index;
            Trajectory tr = shoot(p);
            return FieldPair{tr.back().u, tr.back().varsigma};
        },
        std::move(guess), field_pair_space(), popts);

    Trajectory traj = shoot(pair_star);
    {
        ScalarField du = traj.back().u, ds = traj.back().varsigma;
        for (std::size_t k = 0; k < du.values.size(); ++k) {
            du.values[k] -= traj.states.front().u.values[k];
            ds.values[k] -= traj.states.front().varsigma.values[k];
        }
        rep.final_residual = norm(du, NormKind::L2);
        rep.stress_residual = norm(ds, NormKind::L2);
    }
    rep.accepted = rep.accepted && rep.final_residual <= popts.tol &&
                   rep.stress_residual <= popts.tol;
    return {std::move(traj), std::move(rep)};
}

/// Periodic solve of the regularized homogenized system at fixed (eps,
/// lambda): Picard on the (v(0), tau(0)) pair.
inline std::pair<FieldPair, ConvergenceReport> solve_periodic_regularized(
    const GridPtr& grid, const HomogenizedCoefficients& hc, double T, double dt,
    double eps, double lambda, FieldPair warm, const PicardOptions& popts = {}) {
    RegularizedStepper stepper(grid, hc, dt, eps, lambda);
    const double steps_real = T / dt;
    const int steps = static_cast<int>(std::llround(steps_real));
    if (steps < 1 || std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("solve_periodic_regularized: T must be a multiple of dt");
    auto shoot = [&](const FieldPair& p) {
        RegularizedState r;
        r.t = 0.0;
        r.v = p.u;
        r.tau = p.s;
        r.eps = eps;
        r.lambda = lambda;
        for (int k = 0; k < steps; ++k) r = stepper.step(r);
        return FieldPair{r.v, r.tau};
    };
    return picard_iterate([&](const FieldPair& p) { return shoot(p); },
                          std::move(warm), field_pair_space(), popts);
}

struct ContinuationRecord {
    double eps = 0.0;
    double lambda = 0.0;
    FieldPair solution;
    ConvergenceReport report;
};

/// Warm-started eps-lambda continuation: for each regularization strength
/// (descending) the homotopy parameter ramps up to 1, each solve seeding
/// the next. Numerical counterpart of the degree-theoretic continuation;
/// no topological index is computed.
inline std::vector<ContinuationRecord> run_continuation(
    const GridPtr& grid, const HomogenizedCoefficients& hc, double T, double dt,
    const std::vector<double>& epsilons, const std::vector<double>& lambdas,
    const PicardOptions& popts = {}) {
    if (epsilons.empty() || lambdas.empty())
        throw ConfigError("continuation: need nonempty eps and lambda lists");
    std::vector<ContinuationRecord> records;
    FieldPair warm{ScalarField(grid), ScalarField(grid)};
    for (double eps : epsilons) {
        for (double lam : lambdas) {
            auto [sol, rep] =
                solve_periodic_regularized(grid, hc, T, dt, eps, lam, warm, popts);
            warm = sol;
            records.push_back({eps, lam, std::move(sol), std::move(rep)});
        }
    }
    return records;
}

} // namespace nonfick
