#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "nonfick/grid_ops.hpp"
#include "nonfick/quadrature.hpp"

namespace nonfick {

// Closure signatures. Scalar coefficients take (t, x, u, s) where s is the
// fourth model argument (sigma for primal laws, varsigma after the change
// of variables, tau for the homogenized ones).
using Coeff4 = std::function<double(double, Point, double, double)>;
using CoeffVec4 = std::function<Vec2(double, Point, double, double)>;
using Coeff1 = std::function<double(double)>;

inline Coeff4 constant_coeff(double c) {
    return [c](double, Point, double, double) { return c; };
}
inline Coeff1 constant_law(double c) {
    return [c](double) { return c; };
}
inline CoeffVec4 zero_vector_coeff() {
    return [](double, Point, double, double) { return Vec2{0.0, 0.0}; };
}

/// Relaxation-rate law: smooth switch between the glassy rate beta_G and
/// the rubbery rate beta_R around concentration u_RG.
struct BetaTanhParams {
    double beta_r;
    double beta_g;
    double u_rg;
    double delta;
};

inline double beta_tanh(double u, const BetaTanhParams& p) {
    if (!(p.beta_r > p.beta_g) || !(p.beta_g > 0.0))
        throw ConfigError("beta_tanh: requires beta_r > beta_g > 0");
    if (!(p.delta > 0.0)) throw ConfigError("beta_tanh: requires delta > 0");
    return 0.5 * (p.beta_r + p.beta_g) +
           0.5 * (p.beta_r - p.beta_g) * std::tanh((u - p.u_rg) / p.delta);
}

/// Stress-diffusivity law alpha1*u*(u-1)^2 / (alpha2 + (u-1)^2): vanishes at
/// u = 0 and u = 1, nonnegative between them.
inline double e_rational(double u, double alpha1, double alpha2) {
    if (!(alpha2 > 0.0)) throw ConfigError("e_rational: requires alpha2 > 0");
    const double w = (u - 1.0) * (u - 1.0);
    return alpha1 * u * w / (alpha2 + w);
}

/// Coefficient laws of the primal concentration-stress system, scalar
/// realization. Partial-derivative closures are optional; consumers fall
/// back to centered finite differences with step fd_step*(1+|arg|).
struct PrimalCoefficients {
    Coeff4 D0;
    Coeff4 E0;
    Coeff4 beta0;
    CoeffVec4 M0 = zero_vector_coeff();
    Coeff1 mu0 = constant_law(0.0);
    Coeff1 nu0 = constant_law(0.0);

    // optional analytic partials of beta0
    Coeff4 beta0_du;
    Coeff4 beta0_ds; // d/d(sigma)
    CoeffVec4 beta0_dx;
    // optional analytic partials of the derived gamma (w.r.t. u, varsigma, x)
    Coeff4 gamma_du;
    Coeff4 gamma_ds;
    CoeffVec4 gamma_dx;

    double fd_step = 1e-6;
    double nu_table_range = 8.0; // working range of the nu0 antiderivative
    bool allow_fd_partials = true; // when false, missing analytic partials throw
};

/// Coefficients of the transformed (u, varsigma) system: the purely
/// non-Fickian stress varsigma = sigma - int_0^u nu0 absorbs the u'-term of
/// the stress law, flipping signs of beta and M and producing gamma.
class TransformedCoefficients {
public:
    explicit TransformedCoefficients(PrimalCoefficients primal)
        : p_(std::move(primal)),
          nu_int_(std::make_shared<MemoizedAntiderivative>(
              p_.nu0, p_.nu_table_range)) {}

    const PrimalCoefficients& primal() const { return p_; }

    double nu_integral(double u) const { return (*nu_int_)(u); }

    /// Average of nu0 over [0, u]; continuously extended by nu0(0) at u = 0.
    double nu_average(double u) const {
        return u == 0.0 ? p_.nu0(0.0) : nu_integral(u) / u;
    }

    double sigma_argument(double u, double s) const { return s + nu_integral(u); }

    double D1(double t, Point x, double u, double s) const {
        const double sg = sigma_argument(u, s);
        return p_.D0(t, x, u, sg) + p_.nu0(u) * p_.E0(t, x, u, sg);
    }
    double E1(double t, Point x, double u, double s) const {
        return p_.E0(t, x, u, sigma_argument(u, s));
    }
    Vec2 M1(double t, Point x, double u, double s) const {
        Vec2 m = p_.M0(t, x, u, sigma_argument(u, s));
        return {-m[0], -m[1]};
    }
    double beta1(double t, Point x, double u, double s) const {
        return -p_.beta0(t, x, u, sigma_argument(u, s));
    }
    double gamma(double t, Point x, double u, double s) const {
        return p_.mu0(u) -
               p_.beta0(t, x, u, sigma_argument(u, s)) * nu_average(u);
    }

    // Partials of beta1 and gamma in the transformed variables. Chain rule
    // over the supplied primal partials when available, centered differences
    // otherwise (unless the fallback was disabled).
    double beta1_du(double t, Point x, double u, double s) const {
        if (p_.beta0_du && p_.beta0_ds) {
            const double sg = sigma_argument(u, s);
            return -(p_.beta0_du(t, x, u, sg) +
                     p_.beta0_ds(t, x, u, sg) * p_.nu0(u));
        }
        require_fd("beta0 partials");
        const double h = p_.fd_step * (1.0 + std::abs(u));
        return (beta1(t, x, u + h, s) - beta1(t, x, u - h, s)) / (2.0 * h);
    }
    double beta1_ds(double t, Point x, double u, double s) const {
        if (p_.beta0_ds)
            return -p_.beta0_ds(t, x, u, sigma_argument(u, s));
        require_fd("beta0 partials");
        const double h = p_.fd_step * (1.0 + std::abs(s));
        return (beta1(t, x, u, s + h) - beta1(t, x, u, s - h)) / (2.0 * h);
    }
    Vec2 beta1_dx(double t, Point x, double u, double s) const {
        if (p_.beta0_dx) {
            Vec2 b = p_.beta0_dx(t, x, u, sigma_argument(u, s));
            return {-b[0], -b[1]};
        }
        require_fd("beta0 partials");
        return fd_space([&](Point q) { return beta1(t, q, u, s); }, x);
    }
    double gamma_du(double t, Point x, double u, double s) const {
        if (p_.gamma_du) return p_.gamma_du(t, x, u, s);
        require_fd("gamma partials");
        const double h = p_.fd_step * (1.0 + std::abs(u));
        return (gamma(t, x, u + h, s) - gamma(t, x, u - h, s)) / (2.0 * h);
    }
    double gamma_ds(double t, Point x, double u, double s) const {
        if (p_.gamma_ds) return p_.gamma_ds(t, x, u, s);
        require_fd("gamma partials");
        const double h = p_.fd_step * (1.0 + std::abs(s));
        return (gamma(t, x, u, s + h) - gamma(t, x, u, s - h)) / (2.0 * h);
    }
    Vec2 gamma_dx(double t, Point x, double u, double s) const {
        if (p_.gamma_dx) return p_.gamma_dx(t, x, u, s);
        require_fd("gamma partials");
        return fd_space([&](Point q) { return gamma(t, q, u, s); }, x);
    }

private:
    PrimalCoefficients p_;
    std::shared_ptr<const MemoizedAntiderivative> nu_int_;

    void require_fd(const char* what) const {
        if (!p_.allow_fd_partials)
            throw ConfigError(std::string("analytic ") + what +
                              " missing and the finite-difference fallback "
                              "is disabled");
    }

    template <typename F>
    Vec2 fd_space(F&& f, Point x) const {
        Vec2 out{0.0, 0.0};
        for (int a = 0; a < 2; ++a) {
            const double h = p_.fd_step * (1.0 + std::abs(x[static_cast<std::size_t>(a)]));
            Point xp = x, xm = x;
            xp[static_cast<std::size_t>(a)] += h;
            xm[static_cast<std::size_t>(a)] -= h;
            out[static_cast<std::size_t>(a)] = (f(xp) - f(xm)) / (2.0 * h);
        }
        return out;
    }
};

inline TransformedCoefficients transform(PrimalCoefficients primal) {
    return TransformedCoefficients(std::move(primal));
}

/// Space-time background field (boundary extension phi, stress trace psi).
/// Value closure is required; time derivative and spatial gradients fall
/// back to centered finite differences.
struct Background {
    std::function<double(double, Point)> value;
    std::function<double(double, Point)> ddt;
    std::function<Vec2(double, Point)> grad;
    std::function<Vec2(double, Point)> grad_ddt;
    double fd_step = 1e-6;

    static Background zero() {
        Background b;
        b.value = [](double, Point) { return 0.0; };
        b.ddt = b.value;
        b.grad = [](double, Point) { return Vec2{0.0, 0.0}; };
        b.grad_ddt = b.grad;
        return b;
    }
    static Background analytic(std::function<double(double, Point)> v,
                               std::function<double(double, Point)> dv = {}) {
        Background b;
        b.value = std::move(v);
        b.ddt = std::move(dv);
        return b;
    }

    double v(double t, Point x) const { return value(t, x); }
    double dt(double t, Point x) const {
        if (ddt) return ddt(t, x);
        const double h = fd_step * (1.0 + std::abs(t));
        return (value(t + h, x) - value(t - h, x)) / (2.0 * h);
    }
    Vec2 gr(double t, Point x) const {
        if (grad) return grad(t, x);
        return fd_grad([&](Point q) { return value(t, q); }, x);
    }
    Vec2 gr_dt(double t, Point x) const {
        if (grad_ddt) return grad_ddt(t, x);
        return fd_grad([&](Point q) { return dt(t, q); }, x);
    }

private:
    template <typename F>
    Vec2 fd_grad(F&& f, Point x) const {
        Vec2 out{0.0, 0.0};
        for (int a = 0; a < 2; ++a) {
            const double h = fd_step * (1.0 + std::abs(x[static_cast<std::size_t>(a)]));
            Point xp = x, xm = x;
            xp[static_cast<std::size_t>(a)] += h;
            xm[static_cast<std::size_t>(a)] -= h;
            out[static_cast<std::size_t>(a)] = (f(xp) - f(xm)) / (2.0 * h);
        }
        return out;
    }
};

/// Coefficients of the homogenized (v, tau) system with zero boundary data.
/// D, E, beta, mu are pointwise closures of (t, x, v, tau); g is fully
/// pointwise; f splits into a pointwise part and the nonlocal contribution
/// -grad inv_laplacian(phi'), exposed as the potential field w(t).
struct HomogenizedCoefficients {
    GridPtr grid;
    Coeff4 D, E, beta, mu;
    CoeffVec4 g;
    CoeffVec4 f_local;
    std::function<ScalarField(double)> inv_lap_phi_prime; // w(t); may be null
    Coeff4 beta1; // primal relaxation rate in (v,tau) variables; may be null
    Background phi, psi;
    bool has_backgrounds = false;

    /// Node-centered f including -grad w via central differences; w may be
    /// null or precomputed by the caller for the current time.
    Vec2 f_at_node(double t, int flat, double v, double tau,
                   const ScalarField* w) const {
        Vec2 f = f_local(t, grid->point(flat), v, tau);
        if (w) {
            const Grid& g2 = *grid;
            const int i = g2.node_i(flat), j = g2.node_j(flat);
            if (i > 0 && i + 1 < g2.nx)
                f[0] -= ((*w)[g2.flat(i + 1, j)] - (*w)[g2.flat(i - 1, j)]) /
                        (2.0 * g2.spacing[0]);
            if (g2.dimension == 2 && j > 0 && j + 1 < g2.ny)
                f[1] -= ((*w)[g2.flat(i, j + 1)] - (*w)[g2.flat(i, j - 1)]) /
                        (2.0 * g2.spacing[1]);
        }
        return f;
    }
};

/// Assembles the homogenized closures from the transformed coefficients and
/// the (phi, psi) backgrounds.
inline HomogenizedCoefficients homogenize(GridPtr grid,
                                          const TransformedCoefficients& tc,
                                          Background phi, Background psi) {
    struct Shared {
        TransformedCoefficients tc;
        Background phi, psi;
    };
    auto sh = std::make_shared<Shared>(Shared{tc, phi, psi});

    HomogenizedCoefficients hc;
    hc.grid = std::move(grid);
    hc.phi = std::move(phi);
    hc.psi = std::move(psi);
    hc.has_backgrounds = true;

    hc.D = [sh](double t, Point x, double v, double tau) {
        return sh->tc.D1(t, x, v + sh->phi.v(t, x), tau + sh->psi.v(t, x));
    };
    hc.E = [sh](double t, Point x, double v, double tau) {
        return sh->tc.E1(t, x, v + sh->phi.v(t, x), tau + sh->psi.v(t, x));
    };
    hc.beta = [sh](double t, Point x, double v, double tau) {
        const double u = v + sh->phi.v(t, x), s = tau + sh->psi.v(t, x);
        return sh->tc.beta1_du(t, x, u, s) * s + sh->tc.gamma(t, x, u, s) +
               sh->tc.gamma_du(t, x, u, s) * u;
    };
    hc.mu = [sh](double t, Point x, double v, double tau) {
        const double u = v + sh->phi.v(t, x), s = tau + sh->psi.v(t, x);
        return sh->tc.beta1(t, x, u, s) + sh->tc.beta1_ds(t, x, u, s) * s +
               sh->tc.gamma_ds(t, x, u, s) * u;
    };
    hc.beta1 = [sh](double t, Point x, double v, double tau) {
        return sh->tc.beta1(t, x, v + sh->phi.v(t, x), tau + sh->psi.v(t, x));
    };
    hc.g = [sh](double t, Point x, double v, double tau) {
        const double u = v + sh->phi.v(t, x), s = tau + sh->psi.v(t, x);
        const double beta_val = sh->tc.beta1_du(t, x, u, s) * s +
                                sh->tc.gamma(t, x, u, s) +
                                sh->tc.gamma_du(t, x, u, s) * u;
        const double mu_val = sh->tc.beta1(t, x, u, s) +
                              sh->tc.beta1_ds(t, x, u, s) * s +
                              sh->tc.gamma_ds(t, x, u, s) * u;
        const Vec2 gphi = sh->phi.gr(t, x), gpsi = sh->psi.gr(t, x);
        const Vec2 gpsi_dt = sh->psi.gr_dt(t, x);
        const Vec2 b1x = sh->tc.beta1_dx(t, x, u, s);
        const Vec2 gmx = sh->tc.gamma_dx(t, x, u, s);
        Vec2 out;
        for (std::size_t a = 0; a < 2; ++a)
            out[a] = -gpsi_dt[a] + beta_val * gphi[a] + mu_val * gpsi[a] +
                     b1x[a] * s + gmx[a] * u;
        return out;
    };
    hc.f_local = [sh](double t, Point x, double v, double tau) {
        const double u = v + sh->phi.v(t, x), s = tau + sh->psi.v(t, x);
        const Vec2 gphi = sh->phi.gr(t, x), gpsi = sh->psi.gr(t, x);
        const Vec2 m1 = sh->tc.M1(t, x, u, s);
        const double d1 = sh->tc.D1(t, x, u, s), e1 = sh->tc.E1(t, x, u, s);
        Vec2 out;
        for (std::size_t a = 0; a < 2; ++a)
            out[a] = d1 * gphi[a] + e1 * gpsi[a] + u * m1[a];
        return out;
    };
    hc.inv_lap_phi_prime = [sh, gr = hc.grid](double t) {
        ScalarField rhs(gr, 0.0, t);
        for (int idx : gr->interior_nodes)
            rhs[idx] = sh->phi.dt(t, gr->point(idx));
        return inv_laplacian(rhs);
    };
    return hc;
}

/// Sampled-supremum certificate for the homogenized coefficient bounds and
/// ellipticity, with 5% safety margins; the f/g growth constants are
/// least-squares fits against |tau| and |v|+|tau|.
struct BoundsCertificate {
    double K_D = 0.0, K_E = 0.0, K_beta = 0.0, K_mu = 0.0;
    double K_f = 0.0, K_g = 0.0;
    double d = 0.0;
    double beta_G = 0.0;
    double f_tilde_norm = 0.0, g_tilde_norm = 0.0; // L2((0,T) x Omega)
    double f_tilde_sup = 0.0, g_tilde_sup = 0.0;
    std::array<double, 2> v_range{0.0, 0.0}, tau_range{0.0, 0.0};
    std::array<double, 2> u_range{0.0, 0.0}, s_range{0.0, 0.0};
    std::array<double, 2> t_range{0.0, 0.0};
    int sample_count = 0;
    std::uint64_t seed = 0;
};

struct SampleBox {
    std::array<double, 2> v_range;
    std::array<double, 2> tau_range;
};

namespace detail {

/// Sampled statistics of a homogenized coefficient bundle over a box. The
/// f/g growth slopes are least-squares fits on paired differences that share
/// (t, x) (and v, for f), so a (v,tau)-independent source fits slope zero
/// exactly instead of absorbing its baseline into a spurious slope.
struct CoeffStats {
    double supD = 0.0, supE = 0.0, supBeta = 0.0, supMu = 0.0;
    double infD = std::numeric_limits<double>::infinity();
    double infRate = std::numeric_limits<double>::infinity();
    double u_lo = std::numeric_limits<double>::infinity();
    double u_hi = -std::numeric_limits<double>::infinity();
    double s_lo = std::numeric_limits<double>::infinity();
    double s_hi = -std::numeric_limits<double>::infinity();
    double slope_f = 0.0, slope_g = 0.0; // unclipped paired-difference fits

    struct Obs {
        double y, a;
    };
    std::vector<Obs> fobs, gobs; // |f| vs |tau|, |g| vs |v|+|tau|
};

inline CoeffStats sample_coeff_stats(const HomogenizedCoefficients& hc,
                                     const SampleBox& box,
                                     std::array<double, 2> t_range, int samples,
                                     std::uint64_t seed) {
    const Grid& g = *hc.grid;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(t_range[0], t_range[1]);
    std::uniform_real_distribution<double> uv(box.v_range[0], box.v_range[1]);
    std::uniform_real_distribution<double> utau(box.tau_range[0], box.tau_range[1]);
    std::uniform_int_distribution<int> unode(0, g.interior_count() - 1);

    // time levels are quantized so the nonlocal f-term is solved once per level
    constexpr int kTimeLevels = 64;
    std::vector<ScalarField> w_cache(kTimeLevels);
    std::vector<bool> w_have(kTimeLevels, false);
    const double span = t_range[1] - t_range[0];
    auto level_time = [&](double t) {
        if (span <= 0.0) return t_range[0];
        int k = static_cast<int>((t - t_range[0]) / span * kTimeLevels);
        k = std::min(std::max(k, 0), kTimeLevels - 1);
        return t_range[0] + (k + 0.5) * span / kTimeLevels;
    };
    auto w_at = [&](double t) -> const ScalarField* {
        if (!hc.inv_lap_phi_prime) return nullptr;
        int k = span <= 0.0 ? 0
                            : std::min(std::max(static_cast<int>(
                                                    (t - t_range[0]) / span *
                                                    kTimeLevels),
                                                0),
                                       kTimeLevels - 1);
        if (!w_have[static_cast<std::size_t>(k)]) {
            w_cache[static_cast<std::size_t>(k)] = hc.inv_lap_phi_prime(level_time(t));
            w_have[static_cast<std::size_t>(k)] = true;
        }
        return &w_cache[static_cast<std::size_t>(k)];
    };

    CoeffStats st;
    st.fobs.reserve(static_cast<std::size_t>(samples) * 2);
    st.gobs.reserve(static_cast<std::size_t>(samples) * 2);
    double sfaa = 0.0, sfay = 0.0, sgaa = 0.0, sgay = 0.0;

    for (int sidx = 0; sidx < samples; ++sidx) {
        const double t = level_time(ut(rng));
        const int flat = g.interior_nodes[static_cast<std::size_t>(unode(rng))];
        const Point x = g.point(flat);
        const double va = uv(rng), vb = uv(rng);
        const double ta = utau(rng), tb = utau(rng);

        for (auto [v, tau] : {std::pair{va, ta}, std::pair{vb, tb}}) {
            st.supD = std::max(st.supD, std::abs(hc.D(t, x, v, tau)));
            st.supE = std::max(st.supE, std::abs(hc.E(t, x, v, tau)));
            st.supBeta = std::max(st.supBeta, std::abs(hc.beta(t, x, v, tau)));
            st.supMu = std::max(st.supMu, std::abs(hc.mu(t, x, v, tau)));
            st.infD = std::min(st.infD, hc.D(t, x, v, tau));
            if (hc.beta1) st.infRate = std::min(st.infRate, -hc.beta1(t, x, v, tau));
            if (hc.has_backgrounds) {
                const double u = v + hc.phi.v(t, x), s = tau + hc.psi.v(t, x);
                st.u_lo = std::min(st.u_lo, u);
                st.u_hi = std::max(st.u_hi, u);
                st.s_lo = std::min(st.s_lo, s);
                st.s_hi = std::max(st.s_hi, s);
            }
        }

        const ScalarField* w = w_at(t);
        auto fnorm = [&](double v, double tau) {
            const Vec2 fv = hc.f_at_node(t, flat, v, tau, w);
            return std::hypot(fv[0], fv[1]);
        };
        auto gnorm = [&](double v, double tau) {
            const Vec2 gv = hc.g(t, x, v, tau);
            return std::hypot(gv[0], gv[1]);
        };

        // f: pair shares (t, x, v) and varies tau
        const double fa = fnorm(va, ta), fb = fnorm(va, tb);
        st.fobs.push_back({fa, std::abs(ta)});
        st.fobs.push_back({fb, std::abs(tb)});
        const double dfa = std::abs(ta) - std::abs(tb);
        sfaa += dfa * dfa;
        sfay += dfa * (fa - fb);

        // g: pair shares (t, x) and varies both v and tau
        const double ga = gnorm(va, ta), gb = gnorm(vb, tb);
        st.gobs.push_back({ga, std::abs(va) + std::abs(ta)});
        st.gobs.push_back({gb, std::abs(vb) + std::abs(tb)});
        const double dga = (std::abs(va) + std::abs(ta)) -
                           (std::abs(vb) + std::abs(tb));
        sgaa += dga * dga;
        sgay += dga * (ga - gb);
    }
    st.slope_f = sfaa > 0.0 ? sfay / sfaa : 0.0;
    st.slope_g = sgaa > 0.0 ? sgay / sgaa : 0.0;
    return st;
}

} // namespace detail

inline BoundsCertificate certify_bounds(const HomogenizedCoefficients& hc,
                                        const SampleBox& box,
                                        std::array<double, 2> t_range,
                                        int samples,
                                        std::uint64_t seed = 0x5eedULL) {
    if (samples < 1000)
        throw ConfigError("certify_bounds: need at least 1000 samples");
    if (!std::isfinite(box.v_range[0]) || !std::isfinite(box.v_range[1]) ||
        !std::isfinite(box.tau_range[0]) || !std::isfinite(box.tau_range[1]))
        throw ConfigError("certify_bounds: box must be finite");

    const Grid& g = *hc.grid;
    detail::CoeffStats st =
        detail::sample_coeff_stats(hc, box, t_range, samples, seed);

    BoundsCertificate cert;
    cert.v_range = box.v_range;
    cert.tau_range = box.tau_range;
    cert.t_range = t_range;
    cert.sample_count = samples;
    cert.seed = seed;
    cert.K_D = 1.05 * st.supD;
    cert.K_E = 1.05 * st.supE;
    cert.K_beta = 1.05 * st.supBeta;
    cert.K_mu = 1.05 * st.supMu;
    cert.d = 0.95 * st.infD;
    cert.beta_G = std::isfinite(st.infRate) ? 0.95 * st.infRate : 0.0;
    cert.u_range = {st.u_lo, st.u_hi};
    cert.s_range = {st.s_lo, st.s_hi};
    if (cert.d <= 0.0)
        throw CertificateError("certify_bounds: ellipticity violated (d <= 0)");

    const double domain_measure =
        g.lengths[0] * (g.dimension == 2 ? g.lengths[1] : 1.0);
    const double time_measure = std::max(t_range[1] - t_range[0], 0.0);
    auto finish = [&](const std::vector<detail::CoeffStats::Obs>& obs,
                      double slope, double& K, double& sup_res, double& norm_res) {
        K = 1.05 * std::max(0.0, slope);
        if (K < 1e-12) K = 0.0;
        double sup = 0.0, sq = 0.0;
        for (const auto& o : obs) {
            const double r = std::max(0.0, o.y - K * o.a);
            sup = std::max(sup, r);
            sq += r * r;
        }
        sup_res = sup;
        norm_res = std::sqrt(sq / static_cast<double>(obs.size()) *
                             std::max(time_measure, 1e-300) * domain_measure);
    };
    finish(st.fobs, st.slope_f, cert.K_f, cert.f_tilde_sup, cert.f_tilde_norm);
    finish(st.gobs, st.slope_g, cert.K_g, cert.g_tilde_sup, cert.g_tilde_norm);
    return cert;
}

} // namespace nonfick
