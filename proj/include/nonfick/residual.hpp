#pragma once

#include <cmath>
#include <utility>

#include "nonfick/evolution.hpp"

namespace nonfick {

/// Time-integrated discrete H^-1 residual norms of the homogenized system
/// evaluated on a stored (u, varsigma) trajectory: first the concentration
/// equation v' = div[D grad v + E grad tau + f], then the stress equation
/// lap(tau') = div[beta grad v + mu grad tau + g]. Fluxes are assembled the
/// same way the steppers assemble them (face means, explicit left-endpoint
/// coefficients), so the residual measures the modeling gap, not the
/// particular time discretization used to produce the trajectory.
inline std::pair<double, double>
homogenized_residual(const Trajectory& traj, const Background& phi,
                     const Background& psi, const HomogenizedCoefficients& hc) {
    if (traj.states.size() < 2)
        throw ConfigError("homogenized_residual: need a dense trajectory");
    const GridPtr grid = traj.states.front().u.grid;
    const Grid& g = *grid;
    const double dt = traj.dt;

    auto to_vtau = [&](const State& s, ScalarField& v, ScalarField& tau) {
        v = ScalarField(grid, 0.0, s.t);
        tau = ScalarField(grid, 0.0, s.t);
        for (int idx = 0; idx < g.node_count(); ++idx) {
            const Point x = g.point(idx);
            v[idx] = s.u[idx] - phi.v(s.t, x);
            tau[idx] = s.varsigma[idx] - psi.v(s.t, x);
        }
    };

    double sum_v = 0.0, sum_tau = 0.0;
    ScalarField v_n, tau_n, v_np1, tau_np1;
    to_vtau(traj.states.front(), v_n, tau_n);
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
        const double t = traj.states[n].t;
        to_vtau(traj.states[n + 1], v_np1, tau_np1);

        auto node_vals = [&](auto&& closure) {
            return detail::node_coeff(g, [&](int idx) {
                return closure(t, g.point(idx), v_n[idx], tau_n[idx]);
            });
        };
        detail::FaceValues dface = detail::face_mean(g, node_vals(hc.D));
        detail::FaceValues eface = detail::face_mean(g, node_vals(hc.E));
        detail::FaceValues bface = detail::face_mean(g, node_vals(hc.beta));
        detail::FaceValues mface = detail::face_mean(g, node_vals(hc.mu));

        VectorField grad_v = gradient(v_n);
        VectorField grad_tau = gradient(tau_n);

        // concentration-equation flux and residual
        VectorField vflux(grid);
        {
            auto fx = detail::node_coeff(g, [&](int idx) {
                return hc.f_local(t, g.point(idx), v_n[idx], tau_n[idx])[0];
            });
            detail::FaceValues ffx = detail::face_mean(g, fx);
            for (std::size_t k = 0; k < vflux.fx.size(); ++k)
                vflux.fx[k] = dface.ax[k] * grad_v.fx[k] +
                              eface.ax[k] * grad_tau.fx[k] + ffx.ax[k];
            if (g.dimension == 2) {
                auto fy = detail::node_coeff(g, [&](int idx) {
                    return hc.f_local(t, g.point(idx), v_n[idx], tau_n[idx])[1];
                });
                detail::FaceValues ffy = detail::face_mean(g, fy);
                for (std::size_t k = 0; k < vflux.fy.size(); ++k)
                    vflux.fy[k] = dface.ay[k] * grad_v.fy[k] +
                                  eface.ay[k] * grad_tau.fy[k] + ffy.ay[k];
            }
            if (hc.inv_lap_phi_prime) {
                ScalarField w = hc.inv_lap_phi_prime(t);
                VectorField gw = gradient(w, DirichletTrace::zero(g));
                for (std::size_t k = 0; k < vflux.fx.size(); ++k)
                    vflux.fx[k] -= gw.fx[k];
                for (std::size_t k = 0; k < vflux.fy.size(); ++k)
                    vflux.fy[k] -= gw.fy[k];
            }
        }
        ScalarField div_v = divergence(vflux);
        ScalarField res_v(grid);
        for (int idx : g.interior_nodes)
            res_v[idx] = (v_np1[idx] - v_n[idx]) / dt - div_v[idx];
        const double nv = norm(res_v, NormKind::Hminus1);
        sum_v += nv * nv * dt;

        // stress-equation flux and residual
        VectorField tflux(grid);
        {
            auto gx = detail::node_coeff(g, [&](int idx) {
                return hc.g(t, g.point(idx), v_n[idx], tau_n[idx])[0];
            });
            detail::FaceValues gfx = detail::face_mean(g, gx);
            for (std::size_t k = 0; k < tflux.fx.size(); ++k)
                tflux.fx[k] = bface.ax[k] * grad_v.fx[k] +
                              mface.ax[k] * grad_tau.fx[k] + gfx.ax[k];
            if (g.dimension == 2) {
                auto gy = detail::node_coeff(g, [&](int idx) {
                    return hc.g(t, g.point(idx), v_n[idx], tau_n[idx])[1];
                });
                detail::FaceValues gfy = detail::face_mean(g, gy);
                for (std::size_t k = 0; k < tflux.fy.size(); ++k)
                    tflux.fy[k] = bface.ay[k] * grad_v.fy[k] +
                                  mface.ay[k] * grad_tau.fy[k] + gfy.ay[k];
            }
        }
        ScalarField dtau(grid);
        for (int idx = 0; idx < g.node_count(); ++idx)
            dtau[idx] = (tau_np1[idx] - tau_n[idx]) / dt;
        ScalarField lap_dtau = laplacian(dtau, DirichletTrace::from_field(dtau));
        ScalarField div_tau = divergence(tflux);
        ScalarField res_tau(grid);
        for (int idx : g.interior_nodes)
            res_tau[idx] = lap_dtau[idx] - div_tau[idx];
        const double nt = norm(res_tau, NormKind::Hminus1);
        sum_tau += nt * nt * dt;

        v_n = v_np1;
        tau_n = tau_np1;
    }
    return {std::sqrt(sum_v), std::sqrt(sum_tau)};
}

} // namespace nonfick
