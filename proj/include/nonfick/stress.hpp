#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nonfick/coefficients.hpp"
#include "nonfick/grid_ops.hpp"

namespace nonfick {

namespace detail {

// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2, stable near z = 0.
inline double phi1(double z) {
    if (z == 0.0) return 1.0;
    return std::expm1(z) / z;
}
inline double phi2(double z) {
    if (std::abs(z) < 1e-2) {
        // Taylor tail; |z|^7/7! < 3e-19 at the threshold
        return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 +
               z * (1.0 / 720.0 + z / 5040.0))));
    }
    return (std::expm1(z) - z) / (z * z);
}

} // namespace detail

/// Plan for one exponential stress step.
struct StressStepPlan {
    enum class UInterp { HeldLeft, LinearInTime };
    double dt = 0.0;
    UInterp u_interp = UInterp::LinearInTime;
    int quad_nodes = 2; // quadrature nodes across the step, 2..5

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("stress step: dt must be positive");
        if (quad_nodes < 2 || quad_nodes > 5)
            throw ConfigError("stress step: quadrature nodes must be in [2,5]");
    }
};

/// One exponential-integrator update of the pointwise stress equation
/// following its representation formula: decay factor exp(int beta1) times
/// the state plus the exponentially weighted source int exp(..) gamma*u.
/// Exact to roundoff when beta1 and gamma*u are constant across the step;
/// second order for smooth coefficient paths (per-subinterval exponential
/// trapezoid with a predictor pass for the stress argument).
inline ScalarField stress_step(const ScalarField& varsigma_n,
                               const ScalarField& u_n, const ScalarField& u_np1,
                               const TransformedCoefficients& tc,
                               const StressStepPlan& plan) {
    plan.validate();
    const Grid& g = *varsigma_n.grid;
    if (u_n.grid.get() != &g || u_np1.grid.get() != &g)
        throw ConfigError("stress_step: fields on different grids");

    const double t0 = varsigma_n.time;
    const int m = plan.quad_nodes;
    const double delta = plan.dt / (m - 1);

    ScalarField out(varsigma_n.grid, 0.0, t0 + plan.dt);
    for (int idx = 0; idx < g.node_count(); ++idx) {
        const Point x = g.point(idx);
        auto u_at = [&](int jnode) {
            if (plan.u_interp == StressStepPlan::UInterp::HeldLeft)
                return u_n[idx];
            const double w = static_cast<double>(jnode) / (m - 1);
            return (1.0 - w) * u_n[idx] + w * u_np1[idx];
        };

        double s = varsigma_n[idx];
        for (int j = 0; j + 1 < m; ++j) {
            const double tl = t0 + j * delta, tr = tl + delta;
            const double ul = u_at(j), ur = u_at(j + 1);
            const double bl = tc.beta1(tl, x, ul, s);
            const double gul = tc.gamma(tl, x, ul, s) * ul;
            // explicit exponential predictor for the right-end stress argument
            const double s_hat =
                s * std::exp(bl * delta) + delta * gul * detail::phi1(bl * delta);
            const double br = tc.beta1(tr, x, ur, s_hat);
            const double gur = tc.gamma(tr, x, ur, s_hat) * ur;
            const double bbar = 0.5 * (bl + br); // trapezoid of int beta1
            const double z = bbar * delta;
            const double p1 = detail::phi1(z), p2 = detail::phi2(z);
            s = s * std::exp(z) + delta * (gul * (p1 - p2) + gur * p2);
            if (!std::isfinite(s))
                throw NumericsError("stress_step: non-finite update at node " +
                                    std::to_string(idx));
        }
        out[idx] = s;
    }
    return out;
}

/// Boundary-trace time series of the stress variable on [0, T].
struct BoundaryTrace {
    GridPtr grid;
    double dt = 0.0;
    std::vector<std::vector<double>> values; // [step][boundary node]
    std::vector<double> initial;

    int steps() const { return static_cast<int>(values.size()) - 1; }
    double at(int step, int bnode) const {
        return values[static_cast<std::size_t>(step)][static_cast<std::size_t>(bnode)];
    }
};

/// Boundary concentration drive: phi evaluated at (t, boundary node).
using BoundaryDrive = std::function<double(double, int)>;

inline BoundaryDrive drive_from_background(const GridPtr& g, const Background& phi) {
    return [g, phi](double t, int bnode) {
        return phi.v(t, g->point(g->boundary_nodes[static_cast<std::size_t>(bnode)]));
    };
}

/// Integrates the boundary Cauchy problem for psi with the classical
/// fourth-order one-step method at the field time step. Guards against
/// blow-up (|psi| beyond 1e6*(|initial|+1) signals a certificate violation).
inline BoundaryTrace solve_boundary_psi(const GridPtr& grid,
                                        const TransformedCoefficients& tc,
                                        const BoundaryDrive& phi,
                                        const std::vector<double>& varsigma0_trace,
                                        double T, double dt) {
    const Grid& g = *grid;
    if (varsigma0_trace.size() != static_cast<std::size_t>(g.boundary_count()))
        throw ConfigError("solve_boundary_psi: initial trace size mismatch");
    if (!(dt > 0.0) || !(T > 0.0))
        throw ConfigError("solve_boundary_psi: need positive T and dt");
    const double steps_real = T / dt;
    const int steps = static_cast<int>(std::llround(steps_real));
    if (std::abs(steps_real - steps) > 1e-9 * std::max(1.0, steps_real))
        throw ConfigError("solve_boundary_psi: T must be a multiple of dt");

    BoundaryTrace tr;
    tr.grid = grid;
    tr.dt = dt;
    tr.initial = varsigma0_trace;
    tr.values.assign(static_cast<std::size_t>(steps) + 1, varsigma0_trace);

    for (int b = 0; b < g.boundary_count(); ++b) {
        const Point x = g.point(g.boundary_nodes[static_cast<std::size_t>(b)]);
        const double guard =
            1e6 * (std::abs(varsigma0_trace[static_cast<std::size_t>(b)]) + 1.0);
        auto rhs = [&](double t, double psi) {
            const double ph = phi(t, b);
            return tc.beta1(t, x, ph, psi) * psi + tc.gamma(t, x, ph, psi) * ph;
        };
        double psi = varsigma0_trace[static_cast<std::size_t>(b)];
        for (int n = 0; n < steps; ++n) {
            const double t = n * dt;
            const double k1 = rhs(t, psi);
            const double k2 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1);
            const double k3 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2);
            const double k4 = rhs(t + dt, psi + dt * k3);
            psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!std::isfinite(psi) || std::abs(psi) > guard)
                throw NumericsError(
                    "solve_boundary_psi: trace blow-up at boundary node " +
                    std::to_string(b) + " (relaxation-rate certificate violated?)");
            tr.values[static_cast<std::size_t>(n) + 1][static_cast<std::size_t>(b)] = psi;
        }
    }
    return tr;
}

/// Monitor verdict for the exponential stress bound.
struct StressBoundReport {
    double worst_margin = 0.0; // min over (t,x) of bound - |stress|
    int violations = 0;
    double C_gamma = 0.0;
    double beta_G = 0.0;
    bool ok() const { return violations == 0; }
};

/// Checks |varsigma(t,x)| <= exp(-t*beta_G)|varsigma0(x)| + C_gamma/beta_G
/// + 1e-8 on a stored history; time is measured from the first frame.
inline StressBoundReport stress_bound_check(std::span<const ScalarField> history,
                                            const ScalarField& varsigma0,
                                            double beta_G, double C_gamma) {
    if (!(beta_G > 0.0))
        throw ConfigError("stress_bound_check: beta_G must be positive");
    StressBoundReport rep;
    rep.C_gamma = C_gamma;
    rep.beta_G = beta_G;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    if (history.empty()) return rep;
    const double t0 = history.front().time;
    const double tail = C_gamma / beta_G + 1e-8;
    for (const ScalarField& f : history) {
        const double t = f.time - t0;
        for (std::size_t k = 0; k < f.values.size(); ++k) {
            const double bound =
                std::exp(-t * beta_G) * std::abs(varsigma0.values[k]) + tail;
            const double margin = bound - std::abs(f.values[k]);
            if (margin < rep.worst_margin) rep.worst_margin = margin;
            if (margin < 0.0) ++rep.violations;
        }
    }
    return rep;
}

/// sigma = varsigma + int_0^u nu0 and its inverse (shared quadrature table).
inline ScalarField sigma_of_varsigma(const ScalarField& varsigma,
                                     const ScalarField& u,
                                     const TransformedCoefficients& tc) {
    ScalarField out = varsigma;
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] += tc.nu_integral(u.values[k]);
    return out;
}

inline ScalarField varsigma_of_sigma(const ScalarField& sigma,
                                     const ScalarField& u,
                                     const TransformedCoefficients& tc) {
    ScalarField out = sigma;
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] -= tc.nu_integral(u.values[k]);
    return out;
}

} // namespace nonfick
