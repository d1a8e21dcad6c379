#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nonfick/coefficients.hpp"
#include "nonfick/grid_ops.hpp"
#include "nonfick/stress.hpp"

namespace nonfick {

/// Time instant of the coupled concentration-stress pair.
struct State {
    double t = 0.0;
    ScalarField u;
    ScalarField varsigma;
};

struct MonitorRow {
    double t = 0.0;
    double mass = 0.0;
    double l2_u = 0.0;
    double h1_u = 0.0;
    double max_u = 0.0;
    double min_u = 0.0;
};

struct Trajectory {
    std::vector<State> states;
    std::vector<MonitorRow> monitors;
    double dt = 0.0;
    std::string scheme;

    const State& back() const { return states.back(); }
    std::vector<ScalarField> stress_history() const {
        std::vector<ScalarField> h;
        h.reserve(states.size());
        for (const State& s : states) {
            h.push_back(s.varsigma);
            h.back().time = s.t;
        }
        return h;
    }
};

struct EvolveOptions {
    int picard_passes = 1;     // extra coefficient re-evaluation passes
    int stress_quad_nodes = 2; // quadrature nodes of the stress integrator
    double blowup_guard = 1e9;
    const BoundaryTrace* psi_override = nullptr; // prescribed stress trace
};

namespace detail {

struct FaceValues {
    std::vector<double> ax, ay;
};

// arithmetic mean of node values at the shared face; keeps the implicit
// diffusion operator symmetric
inline FaceValues face_mean(const Grid& g, const std::vector<double>& node_vals) {
    FaceValues f;
    f.ax.resize(static_cast<std::size_t>(g.faces_x_count()));
    f.ay.resize(static_cast<std::size_t>(g.faces_y_count()));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            f.ax[static_cast<std::size_t>(g.face_x(i, j))] =
                0.5 * (node_vals[static_cast<std::size_t>(g.flat(i, j))] +
                       node_vals[static_cast<std::size_t>(g.flat(i + 1, j))]);
    if (g.dimension == 2)
        for (int j = 0; j + 1 < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                f.ay[static_cast<std::size_t>(g.face_y(i, j))] =
                    0.5 * (node_vals[static_cast<std::size_t>(g.flat(i, j))] +
                           node_vals[static_cast<std::size_t>(g.flat(i, j + 1))]);
    return f;
}

// scale * (-div(a grad .)) with homogeneous Dirichlet, interior unknowns
inline Eigen::SparseMatrix<double> diffusion_matrix(const Grid& g,
                                                    const FaceValues& a,
                                                    double scale) {
    const int n = g.interior_count();
    const double ix2 = scale / (g.spacing[0] * g.spacing[0]);
    const double iy2 =
        g.dimension == 2 ? scale / (g.spacing[1] * g.spacing[1]) : 0.0;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 5);
    for (int p = 0; p < n; ++p) {
        const int f = g.interior_nodes[static_cast<std::size_t>(p)];
        const int i = g.node_i(f), j = g.node_j(f);
        const double al = a.ax[static_cast<std::size_t>(g.face_x(i - 1, j))];
        const double ar = a.ax[static_cast<std::size_t>(g.face_x(i, j))];
        double diag = (al + ar) * ix2;
        auto couple = [&](int fi, int fj, double w) {
            const int q = g.interior_index[static_cast<std::size_t>(g.flat(fi, fj))];
            if (q >= 0) trips.emplace_back(p, q, -w);
        };
        couple(i - 1, j, al * ix2);
        couple(i + 1, j, ar * ix2);
        if (g.dimension == 2) {
            const double ab = a.ay[static_cast<std::size_t>(g.face_y(i, j - 1))];
            const double at = a.ay[static_cast<std::size_t>(g.face_y(i, j))];
            diag += (ab + at) * iy2;
            couple(i, j - 1, ab * iy2);
            couple(i, j + 1, at * iy2);
        }
        trips.emplace_back(p, p, diag);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// Dirichlet coupling of the implicit diffusion operator moved to the RHS
inline void add_dirichlet_lift(const Grid& g, const FaceValues& a, double scale,
                               const DirichletTrace& trace, Eigen::VectorXd& rhs) {
    const double ix2 = scale / (g.spacing[0] * g.spacing[0]);
    const double iy2 =
        g.dimension == 2 ? scale / (g.spacing[1] * g.spacing[1]) : 0.0;
    for (int p = 0; p < g.interior_count(); ++p) {
        const int f = g.interior_nodes[static_cast<std::size_t>(p)];
        const int i = g.node_i(f), j = g.node_j(f);
        auto lift = [&](int fi, int fj, double w) {
            const int b = g.boundary_index[static_cast<std::size_t>(g.flat(fi, fj))];
            if (b >= 0) rhs(p) += w * trace.values[static_cast<std::size_t>(b)];
        };
        lift(i - 1, j, a.ax[static_cast<std::size_t>(g.face_x(i - 1, j))] * ix2);
        lift(i + 1, j, a.ax[static_cast<std::size_t>(g.face_x(i, j))] * ix2);
        if (g.dimension == 2) {
            lift(i, j - 1, a.ay[static_cast<std::size_t>(g.face_y(i, j - 1))] * iy2);
            lift(i, j + 1, a.ay[static_cast<std::size_t>(g.face_y(i, j))] * iy2);
        }
    }
}

inline Eigen::SparseMatrix<double> sparse_identity(int n) {
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    return id;
}

inline std::vector<double> node_coeff(const Grid& g,
                                      const std::function<double(int)>& eval) {
    std::vector<double> out(static_cast<std::size_t>(g.node_count()));
    for (int idx = 0; idx < g.node_count(); ++idx) out[static_cast<std::size_t>(idx)] = eval(idx);
    return out;
}

inline void check_finite(const ScalarField& f, double guard, const char* what) {
    for (double v : f.values)
        if (!std::isfinite(v) || std::abs(v) > guard)
            throw NumericsError(std::string(what) + ": blow-up guard tripped");
}

} // namespace detail

/// One linearly implicit IMEX step of the transformed concentration-stress
/// system: provisional exponential stress update, implicit diffusion solve
/// for u with the stress and convection fluxes explicit, optional Picard
/// coefficient re-evaluation, final stress re-update along the linear-in-
/// time concentration path.
inline State step_primal(const State& s, const TransformedCoefficients& tc,
                         const Background& phi, double dt,
                         const EvolveOptions& opts = {}) {
    if (!(dt > 0.0)) throw ConfigError("step_primal: dt must be positive");
    const GridPtr grid = s.u.grid;
    const Grid& g = *grid;
    const double tn = s.t, tn1 = s.t + dt;

    DirichletTrace trace_new = DirichletTrace::zero(g);
    for (int b = 0; b < g.boundary_count(); ++b)
        trace_new.values[static_cast<std::size_t>(b)] =
            phi.v(tn1, g.point(g.boundary_nodes[static_cast<std::size_t>(b)]));

    ScalarField u_new = s.u;
    ScalarField sig_new = s.varsigma;
    const int total_passes = 1 + std::max(opts.picard_passes, 0);
    for (int pass = 0; pass < total_passes; ++pass) {
        // stress update: held concentration on the predictor pass, linear
        // path toward the current iterate afterwards
        StressStepPlan plan{dt,
                            pass == 0 ? StressStepPlan::UInterp::HeldLeft
                                      : StressStepPlan::UInterp::LinearInTime,
                            opts.stress_quad_nodes};
        ScalarField sig_arg = s.varsigma;
        sig_arg.time = tn;
        sig_new = stress_step(sig_arg, s.u, u_new, tc, plan);

        // coefficients frozen at the pass state
        const double tc_time = pass == 0 ? tn : tn1;
        const ScalarField& uc = pass == 0 ? s.u : u_new;
        const ScalarField& sc = pass == 0 ? s.varsigma : sig_new;
        auto dvals = detail::node_coeff(g, [&](int idx) {
            return tc.D1(tc_time, g.point(idx), uc[idx], sc[idx]);
        });
        auto evals = detail::node_coeff(g, [&](int idx) {
            return tc.E1(tc_time, g.point(idx), uc[idx], sc[idx]);
        });
        detail::FaceValues dface = detail::face_mean(g, dvals);
        detail::FaceValues eface = detail::face_mean(g, evals);

        // explicit fluxes: E1 grad(varsigma_new) + M1 * u_n
        VectorField flux = gradient(sig_new, DirichletTrace::from_field(sig_new));
        for (std::size_t k = 0; k < flux.fx.size(); ++k) flux.fx[k] *= eface.ax[k];
        for (std::size_t k = 0; k < flux.fy.size(); ++k) flux.fy[k] *= eface.ay[k];
        auto mxvals = detail::node_coeff(g, [&](int idx) {
            return tc.M1(tc_time, g.point(idx), uc[idx], sc[idx])[0] * s.u[idx];
        });
        detail::FaceValues mx = detail::face_mean(g, mxvals);
        for (std::size_t k = 0; k < flux.fx.size(); ++k) flux.fx[k] += mx.ax[k];
        if (g.dimension == 2) {
            auto myvals = detail::node_coeff(g, [&](int idx) {
                return tc.M1(tc_time, g.point(idx), uc[idx], sc[idx])[1] * s.u[idx];
            });
            detail::FaceValues my = detail::face_mean(g, myvals);
            for (std::size_t k = 0; k < flux.fy.size(); ++k) flux.fy[k] += my.ay[k];
        }
        ScalarField div_flux = divergence(flux);

        Eigen::VectorXd rhs = detail::interior_vector(s.u) +
                              dt * detail::interior_vector(div_flux);
        detail::add_dirichlet_lift(g, dface, dt, trace_new, rhs);

        Eigen::SparseMatrix<double> A =
            detail::sparse_identity(g.interior_count()) +
            detail::diffusion_matrix(g, dface, dt);
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
        if (solver.info() != Eigen::Success)
            throw NumericsError("step_primal: diffusion factorization failed");
        Eigen::VectorXd sol = solver.solve(rhs);
        if (solver.info() != Eigen::Success)
            throw NumericsError("step_primal: diffusion solve failed");

        u_new = detail::from_interior_vector(grid, sol, tn1);
        for (int b = 0; b < g.boundary_count(); ++b)
            u_new[g.boundary_nodes[static_cast<std::size_t>(b)]] =
                trace_new.values[static_cast<std::size_t>(b)];
        detail::check_finite(u_new, opts.blowup_guard, "step_primal u");
    }

    // final stress re-update along the accepted concentration path
    ScalarField sig_arg = s.varsigma;
    sig_arg.time = tn;
    sig_new = stress_step(sig_arg, s.u, u_new, tc,
                          {dt, StressStepPlan::UInterp::LinearInTime,
                           opts.stress_quad_nodes});
    detail::check_finite(sig_new, opts.blowup_guard, "step_primal stress");

    return State{tn1, std::move(u_new), std::move(sig_new)};
}

namespace detail {

inline MonitorRow monitor_state(const State& s) {
    MonitorRow row;
    row.t = s.t;
    const Grid& g = *s.u.grid;
    double sum = 0.0, mx = -std::numeric_limits<double>::infinity(),
           mn = std::numeric_limits<double>::infinity();
    for (double v : s.u.values) {
        sum += v;
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    row.mass = sum * g.node_volume();
    row.l2_u = norm(s.u, NormKind::L2);
    row.h1_u = norm(gradient(s.u));
    row.max_u = mx;
    row.min_u = mn;
    return row;
}

} // namespace detail

/// Integrates the primal pair over [t0, t0+T] with uniform step dt
/// (T must be an integer multiple of dt). The initial concentration's
/// boundary slots are clamped to phi(t0); the stress starts bitwise at
/// the supplied field.
inline Trajectory simulate(const State& s0, const TransformedCoefficients& tc,
                           const Background& phi, double T, double dt,
                           const EvolveOptions& opts = {}) {
    if (!(dt > 0.0) || !(T > 0.0))
        throw ConfigError("simulate: need positive T and dt");
    const double steps_real = T / dt;
    const int steps = static_cast<int>(std::llround(steps_real));
    if (std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("simulate: T must be an integer multiple of dt");
    if (opts.psi_override &&
        (std::abs(opts.psi_override->dt - dt) > 1e-12 * std::max(1.0, dt) ||
         opts.psi_override->steps() < steps))
        throw ConfigError("simulate: psi override does not cover the horizon "
                          "at this step size");

    Trajectory traj;
    traj.dt = dt;
    traj.scheme = "imex-exp1";
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);

    State cur = s0;
    const Grid& g = *cur.u.grid;
    for (int b = 0; b < g.boundary_count(); ++b)
        cur.u[g.boundary_nodes[static_cast<std::size_t>(b)]] =
            phi.v(s0.t, g.point(g.boundary_nodes[static_cast<std::size_t>(b)]));
    if (opts.psi_override)
        for (int b = 0; b < g.boundary_count(); ++b)
            cur.varsigma[g.boundary_nodes[static_cast<std::size_t>(b)]] =
                opts.psi_override->at(0, b);
    cur.u.time = cur.t;
    cur.varsigma.time = cur.t;
    traj.states.push_back(cur);
    traj.monitors.push_back(detail::monitor_state(cur));

    for (int k = 0; k < steps; ++k) {
        try {
            cur = step_primal(cur, tc, phi, dt, opts);
        } catch (const NumericsError& err) {
            throw NumericsError("simulate: step " + std::to_string(k + 1) +
                                ": " + err.what());
        }
        if (opts.psi_override)
            for (int b = 0; b < g.boundary_count(); ++b)
                cur.varsigma[g.boundary_nodes[static_cast<std::size_t>(b)]] =
                    opts.psi_override->at(k + 1, b);
        cur.u.time = cur.t;
        cur.varsigma.time = cur.t;
        traj.states.push_back(cur);
        traj.monitors.push_back(detail::monitor_state(cur));
    }
    return traj;
}

/// State of the biharmonic-regularized homogenized system (zero boundary).
struct RegularizedState {
    double t = 0.0;
    ScalarField v;
    ScalarField tau;
    double eps = 0.0;
    double lambda = 1.0;
};

struct RegularizedTrajectory {
    std::vector<RegularizedState> states;
    double dt = 0.0;
    double eps = 0.0;
    double lambda = 1.0;
};

/// IMEX stepper for the regularized system: the biharmonic term (square of
/// the Dirichlet Laplacian) and the D-diffusion are implicit, transport and
/// coupling terms explicit with the homotopy prefactor lambda. The tau
/// equation applies the inverse Laplacian to its divergence right side.
class RegularizedStepper {
public:
    RegularizedStepper(GridPtr grid, HomogenizedCoefficients hc, double dt,
                       double eps, double lambda, double blowup_guard = 1e9)
        : grid_(std::move(grid)), hc_(std::move(hc)), dt_(dt), eps_(eps),
          lambda_(lambda), guard_(blowup_guard) {
        if (!(dt_ > 0.0)) throw ConfigError("regularized stepper: dt must be positive");
        if (eps_ < 0.0) throw ConfigError("regularized stepper: eps must be >= 0");
        if (lambda_ < 0.0 || lambda_ > 1.0)
            throw ConfigError("regularized stepper: lambda must be in [0,1]");
        const Grid& g = *grid_;
        const auto& L = g.poisson().minus_laplacian;
        if (eps_ > 0.0) {
            biharmonic_ = (L * L).pruned();
            tau_matrix_ = detail::sparse_identity(g.interior_count()) +
                          (eps_ * dt_) * biharmonic_;
            tau_solver_.compute(tau_matrix_);
            if (tau_solver_.info() != Eigen::Success)
                throw NumericsError("regularized stepper: tau factorization failed");
        }
    }

    RegularizedState step(const RegularizedState& r) const {
        const Grid& g = *grid_;
        const double tn = r.t;

        auto node_vals = [&](auto&& closure) {
            return detail::node_coeff(g, [&](int idx) {
                return closure(tn, g.point(idx), r.v[idx], r.tau[idx]);
            });
        };
        detail::FaceValues dface = detail::face_mean(g, node_vals(hc_.D));
        detail::FaceValues eface = detail::face_mean(g, node_vals(hc_.E));
        detail::FaceValues bface = detail::face_mean(g, node_vals(hc_.beta));
        detail::FaceValues mface = detail::face_mean(g, node_vals(hc_.mu));

        const DirichletTrace zero = DirichletTrace::zero(g);
        VectorField grad_v = gradient(r.v, zero);
        VectorField grad_tau = gradient(r.tau, zero);

        // nonlocal part of f: -grad of the phi' potential
        ScalarField w;
        const bool has_w = static_cast<bool>(hc_.inv_lap_phi_prime);
        if (has_w) w = hc_.inv_lap_phi_prime(tn);

        // v-equation explicit flux: E grad(tau) + f
        VectorField vflux(grid_);
        {
            auto fx = detail::node_coeff(g, [&](int idx) {
                return hc_.f_local(tn, g.point(idx), r.v[idx], r.tau[idx])[0];
            });
            detail::FaceValues ffx = detail::face_mean(g, fx);
            for (std::size_t k = 0; k < vflux.fx.size(); ++k)
                vflux.fx[k] = eface.ax[k] * grad_tau.fx[k] + ffx.ax[k];
            if (g.dimension == 2) {
                auto fy = detail::node_coeff(g, [&](int idx) {
                    return hc_.f_local(tn, g.point(idx), r.v[idx], r.tau[idx])[1];
                });
                detail::FaceValues ffy = detail::face_mean(g, fy);
                for (std::size_t k = 0; k < vflux.fy.size(); ++k)
                    vflux.fy[k] = eface.ay[k] * grad_tau.fy[k] + ffy.ay[k];
            }
            if (has_w) {
                VectorField gw = gradient(w, zero);
                for (std::size_t k = 0; k < vflux.fx.size(); ++k)
                    vflux.fx[k] -= gw.fx[k];
                for (std::size_t k = 0; k < vflux.fy.size(); ++k)
                    vflux.fy[k] -= gw.fy[k];
            }
        }

        // tau-equation explicit flux: beta grad(v) + mu grad(tau) + g
        VectorField tflux(grid_);
        {
            auto gx = detail::node_coeff(g, [&](int idx) {
                return hc_.g(tn, g.point(idx), r.v[idx], r.tau[idx])[0];
            });
            detail::FaceValues gfx = detail::face_mean(g, gx);
            for (std::size_t k = 0; k < tflux.fx.size(); ++k)
                tflux.fx[k] = bface.ax[k] * grad_v.fx[k] +
                              mface.ax[k] * grad_tau.fx[k] + gfx.ax[k];
            if (g.dimension == 2) {
                auto gy = detail::node_coeff(g, [&](int idx) {
                    return hc_.g(tn, g.point(idx), r.v[idx], r.tau[idx])[1];
                });
                detail::FaceValues gfy = detail::face_mean(g, gy);
                for (std::size_t k = 0; k < tflux.fy.size(); ++k)
                    tflux.fy[k] = bface.ay[k] * grad_v.fy[k] +
                                  mface.ay[k] * grad_tau.fy[k] + gfy.ay[k];
            }
        }

        // v update: (I + eps dt L^2 + lambda dt L_D) v_new = v + lambda dt div(vflux)
        Eigen::VectorXd vrhs = detail::interior_vector(r.v) +
                               (lambda_ * dt_) *
                                   detail::interior_vector(divergence(vflux));
        Eigen::SparseMatrix<double> A =
            detail::sparse_identity(g.interior_count()) +
            detail::diffusion_matrix(g, dface, lambda_ * dt_);
        if (eps_ > 0.0) A = A + (eps_ * dt_) * biharmonic_;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> vsolver(A);
        if (vsolver.info() != Eigen::Success)
            throw NumericsError("regularized step: v factorization failed");
        Eigen::VectorXd vnew = vsolver.solve(vrhs);

        // tau update: (I + eps dt L^2) tau_new = tau + lambda dt invlap(div(tflux))
        ScalarField lifted = inv_laplacian(divergence(tflux));
        Eigen::VectorXd trhs = detail::interior_vector(r.tau) +
                               (lambda_ * dt_) * detail::interior_vector(lifted);
        Eigen::VectorXd tnew =
            eps_ > 0.0 ? tau_solver_.solve(trhs).eval() : trhs;

        RegularizedState out;
        out.t = tn + dt_;
        out.eps = eps_;
        out.lambda = lambda_;
        out.v = detail::from_interior_vector(grid_, vnew, out.t);
        out.tau = detail::from_interior_vector(grid_, tnew, out.t);
        detail::check_finite(out.v, guard_, "regularized v");
        detail::check_finite(out.tau, guard_, "regularized tau");
        return out;
    }

private:
    GridPtr grid_;
    HomogenizedCoefficients hc_;
    double dt_, eps_, lambda_, guard_;
    Eigen::SparseMatrix<double> biharmonic_;
    Eigen::SparseMatrix<double> tau_matrix_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> tau_solver_;
};

/// One-off step of the regularized system (the state carries eps, lambda).
inline RegularizedState step_regularized(const RegularizedState& r,
                                         const HomogenizedCoefficients& hc,
                                         double dt) {
    RegularizedStepper stepper(r.v.grid, hc, dt, r.eps, r.lambda);
    return stepper.step(r);
}

inline RegularizedTrajectory simulate_regularized(const RegularizedState& r0,
                                                  const HomogenizedCoefficients& hc,
                                                  double T, double dt) {
    const double steps_real = T / dt;
    const int steps = static_cast<int>(std::llround(steps_real));
    if (std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("simulate_regularized: T must be a multiple of dt");
    RegularizedStepper stepper(r0.v.grid, hc, dt, r0.eps, r0.lambda);
    RegularizedTrajectory traj;
    traj.dt = dt;
    traj.eps = r0.eps;
    traj.lambda = r0.lambda;
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.states.push_back(r0);
    for (int k = 0; k < steps; ++k) {
        try {
            traj.states.push_back(stepper.step(traj.states.back()));
        } catch (const NumericsError& err) {
            throw NumericsError("simulate_regularized: step " +
                                std::to_string(k + 1) + ": " + err.what());
        }
    }
    return traj;
}

/// Time-integrated dual norms of the discrete time derivatives:
/// ||v'|| in L2(0,T;H^-2) and ||tau'|| in L2(0,T;H^-1).
inline std::pair<double, double>
derivative_norm_report(const RegularizedTrajectory& traj) {
    double vsum = 0.0, tsum = 0.0;
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        const RegularizedState& a = traj.states[k];
        const RegularizedState& b = traj.states[k + 1];
        ScalarField dv = a.v, dtau = a.tau;
        for (std::size_t i = 0; i < dv.values.size(); ++i) {
            dv.values[i] = (b.v.values[i] - a.v.values[i]) / traj.dt;
            dtau.values[i] = (b.tau.values[i] - a.tau.values[i]) / traj.dt;
        }
        const double nv = norm_hminus2(dv);
        const double nt = norm(dtau, NormKind::Hminus1);
        vsum += nv * nv * traj.dt;
        tsum += nt * nt * traj.dt;
    }
    return {std::sqrt(vsum), std::sqrt(tsum)};
}

} // namespace nonfick
