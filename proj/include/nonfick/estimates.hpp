#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "nonfick/coefficients.hpp"
#include "nonfick/evolution.hpp"

namespace nonfick {

/// Computed constants of the short-horizon contraction argument plus the
/// periodic coercivity pair.
struct EstimateReport {
    double K_Omega = 0.0;
    double k = 0.0;
    double T0 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double Gamma = 0.0;
    double Gamma0 = 0.0;
    BoundsCertificate certificate;
    std::vector<std::tuple<double, double, double>> energy_sweep; // (lambda, eps, energy)
};

/// Sufficient constants, taken verbatim:
///   C1 = K_beta^2/2 + (3/2) K_g^2 K^2 + (3/2) ||g~||^2
///   C2 = C1 e (3 K_E^2/(4d) + (9/(4d)) K_f^2 K^2)
///   k  = max(4 + 2 K_mu + (3/2) K_g^2 K^2, 6 C2 / d),  T0 = 1/k.
inline EstimateReport compute_thresholds(const BoundsCertificate& cert,
                                         double K_Omega) {
    if (!(cert.d > 0.0))
        throw CertificateError("compute_thresholds: certificate has d <= 0");
    EstimateReport rep;
    rep.K_Omega = K_Omega;
    rep.certificate = cert;
    const double K2 = K_Omega * K_Omega;
    rep.C1 = cert.K_beta * cert.K_beta / 2.0 +
             1.5 * cert.K_g * cert.K_g * K2 +
             1.5 * cert.g_tilde_norm * cert.g_tilde_norm;
    rep.C2 = rep.C1 * std::exp(1.0) *
             (3.0 * cert.K_E * cert.K_E / (4.0 * cert.d) +
              9.0 / (4.0 * cert.d) * cert.K_f * cert.K_f * K2);
    rep.k = std::max(4.0 + 2.0 * cert.K_mu + 1.5 * cert.K_g * cert.K_g * K2,
                     6.0 * rep.C2 / cert.d);
    rep.T0 = 1.0 / rep.k;
    return rep;
}

/// Left side of the uniform a priori energy estimate on a regularized
/// trajectory, trapezoid-integrated in time:
///   eps ||v||^2_{L2 H^2_0} + eps ||tau||^2_{L2 X}
///   + lambda ||v||^2_{L2 H^1_0} + ||tau||^2_{L2 H^1_0}.
/// The periodic variant carries lambda on the tau term as well.
inline double energy_lhs(const RegularizedTrajectory& traj,
                         bool periodic_weighting = false) {
    if (traj.states.empty()) return 0.0;
    const double eps = traj.eps, lambda = traj.lambda;
    double sum = 0.0;
    const std::size_t n = traj.states.size();
    for (std::size_t k = 0; k < n; ++k) {
        const RegularizedState& s = traj.states[k];
        const double h2v = norm_h2(s.v);
        const double xt = norm_X(s.tau);
        const double h1v = norm(s.v, NormKind::H1_0);
        const double h1t = norm(s.tau, NormKind::H1_0);
        double val = eps * h2v * h2v + eps * xt * xt + lambda * h1v * h1v +
                     (periodic_weighting ? lambda : 1.0) * h1t * h1t;
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0; // trapezoid
        sum += w * val * traj.dt;
    }
    return sum;
}

struct CoeffSample {
    double t;
    int node; // flat node index
    Point x;
    double v;
    double tau;
};

inline std::vector<CoeffSample> sample_box(const GridPtr& grid,
                                           const SampleBox& box,
                                           std::array<double, 2> t_range,
                                           int count,
                                           std::uint64_t seed = 0xC0FFEEull) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(t_range[0], t_range[1]);
    std::uniform_real_distribution<double> uv(box.v_range[0], box.v_range[1]);
    std::uniform_real_distribution<double> utau(box.tau_range[0], box.tau_range[1]);
    std::uniform_int_distribution<int> unode(0, grid->interior_count() - 1);
    std::vector<CoeffSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int flat = grid->interior_nodes[static_cast<std::size_t>(unode(rng))];
        out.push_back({ut(rng), flat, grid->point(flat), uv(rng), utau(rng)});
    }
    return out;
}

namespace detail {

// smallest eigenvalue of the symmetric per-axis block
//   [ D          c/2 ]        c = E*Gamma - beta/Gamma
//   [ c/2        -mu ]
inline double coercivity_block_min(double D, double E, double beta, double mu,
                                   double Gamma) {
    const double c = E * Gamma - beta / Gamma;
    return 0.5 * ((D - mu) - std::hypot(D + mu, c));
}

} // namespace detail

/// Searches for the weight Gamma maximizing the coercivity margin Gamma0 of
/// the joint quadratic form over the sample set: log2 grid 2^-10..2^10 with
/// golden-section refinement around the best point. Returns (Gamma, Gamma0);
/// a nonpositive Gamma0 means the condition could not be verified.
inline std::pair<double, double>
coercivity_gamma_search(const HomogenizedCoefficients& hc,
                        std::span<const CoeffSample> samples,
                        std::span<const double> gamma_grid = {}) {
    if (samples.empty())
        throw ConfigError("coercivity_gamma_search: empty sample set");

    struct Tuple {
        double D, E, beta, mu;
    };
    std::vector<Tuple> vals;
    vals.reserve(samples.size());
    for (const CoeffSample& s : samples)
        vals.push_back({hc.D(s.t, s.x, s.v, s.tau), hc.E(s.t, s.x, s.v, s.tau),
                        hc.beta(s.t, s.x, s.v, s.tau), hc.mu(s.t, s.x, s.v, s.tau)});

    auto gamma0_at = [&](double gamma) {
        double worst = std::numeric_limits<double>::infinity();
        for (const Tuple& c : vals)
            worst = std::min(worst, detail::coercivity_block_min(c.D, c.E, c.beta,
                                                                 c.mu, gamma));
        return worst;
    };

    std::vector<double> grid;
    if (gamma_grid.empty()) {
        for (int e = -10; e <= 10; ++e) grid.push_back(std::ldexp(1.0, e));
    } else {
        grid.assign(gamma_grid.begin(), gamma_grid.end());
    }

    double best_gamma = grid.front();
    double best = gamma0_at(best_gamma);
    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double g0 = gamma0_at(grid[i]);
        if (g0 > best) {
            best = g0;
            best_gamma = grid[i];
            best_idx = i;
        }
    }

    // golden-section refinement in log(Gamma) between the grid neighbors
    double lo = std::log(grid[best_idx == 0 ? 0 : best_idx - 1]);
    double hi = std::log(grid[std::min(best_idx + 1, grid.size() - 1)]);
    if (hi > lo) {
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        double fc = gamma0_at(std::exp(c)), fd = gamma0_at(std::exp(d));
        for (int it = 0; it < 80; ++it) {
            if (fc > fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - gr * (hi - lo);
                fc = gamma0_at(std::exp(c));
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + gr * (hi - lo);
                fd = gamma0_at(std::exp(d));
            }
        }
        const double refined = 0.5 * (lo + hi);
        const double fref = gamma0_at(std::exp(refined));
        if (fref > best) {
            best = fref;
            best_gamma = std::exp(refined);
        }
    }
    return {best_gamma, best};
}

struct HypothesisItem {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double limit = 0.0;
};

struct HypothesisReport {
    std::vector<HypothesisItem> items;
    bool pass = true;
    double Gamma = 0.0;
    double Gamma0 = 0.0;

    void add(std::string name, bool ok, double value, double limit) {
        pass = pass && ok;
        items.push_back({std::move(name), ok, value, limit});
    }
};

enum class ProblemKind { Reproductive, Periodic };

/// Re-checks the certified bounds on fresh samples (different seed) and, in
/// periodic mode, the strict majorant form of condition v plus the
/// existence of a positive coercivity pair.
inline HypothesisReport validate_hypotheses(const BoundsCertificate& cert,
                                            const HomogenizedCoefficients& hc,
                                            ProblemKind mode,
                                            int samples = 2000,
                                            std::uint64_t seed = 0xFEEDull) {
    HypothesisReport rep;
    const SampleBox box{cert.v_range, cert.tau_range};
    detail::CoeffStats st =
        detail::sample_coeff_stats(hc, box, cert.t_range, samples, seed);

    double worstF = -std::numeric_limits<double>::infinity();
    double worstG = -std::numeric_limits<double>::infinity();
    for (const auto& o : st.fobs)
        worstF = std::max(worstF, o.y - (cert.K_f * o.a + cert.f_tilde_sup));
    for (const auto& o : st.gobs)
        worstG = std::max(worstG, o.y - (cert.K_g * o.a + cert.g_tilde_sup));

    const double slack = 1e-9;
    rep.add("|D| <= K_D", st.supD <= cert.K_D * (1.0 + slack), st.supD, cert.K_D);
    rep.add("|E| <= K_E", st.supE <= cert.K_E * (1.0 + slack) + 1e-300, st.supE,
            cert.K_E);
    rep.add("|beta| <= K_beta", st.supBeta <= cert.K_beta * (1.0 + slack) + 1e-300,
            st.supBeta, cert.K_beta);
    rep.add("|mu| <= K_mu", st.supMu <= cert.K_mu * (1.0 + slack) + 1e-300,
            st.supMu, cert.K_mu);
    rep.add("|f| <= K_f|tau| + f~", worstF <= 1e-9, worstF, 0.0);
    rep.add("|g| <= K_g(|v|+|tau|) + g~", worstG <= 1e-9, worstG, 0.0);
    rep.add("ellipticity (D >= d > 0)", st.infD >= cert.d && cert.d > 0.0,
            st.infD, cert.d);
    rep.add("relaxation-rate floor (beta_G > 0)", cert.beta_G > 0.0, cert.beta_G,
            0.0);

    if (mode == ProblemKind::Periodic) {
        // strict condition v: the fresh paired-difference slopes must vanish
        const double kf_fresh = std::max(0.0, st.slope_f);
        const double kg_fresh = std::max(0.0, st.slope_g);
        rep.add("strict |f| <= f~ (K_f = 0)",
                cert.K_f <= 1e-8 && kf_fresh <= 1e-8,
                std::max(cert.K_f, kf_fresh), 0.0);
        rep.add("strict |g| <= g~ (K_g = 0)",
                cert.K_g <= 1e-8 && kg_fresh <= 1e-8,
                std::max(cert.K_g, kg_fresh), 0.0);
        std::vector<CoeffSample> fresh =
            sample_box(hc.grid, box, cert.t_range, samples, seed + 1);
        auto [gamma, gamma0] = coercivity_gamma_search(hc, fresh);
        rep.Gamma = gamma;
        rep.Gamma0 = gamma0;
        rep.add("coercivity pair (Gamma0 > 0)", gamma0 > 0.0, gamma0, 0.0);
    }
    return rep;
}

} // namespace nonfick
