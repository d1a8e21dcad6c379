#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nonfick/config.hpp"
#include "nonfick/csv.hpp"
#include "nonfick/estimates.hpp"
#include "nonfick/residual.hpp"
#include "nonfick/solvers.hpp"

namespace nonfick {

namespace scenario_detail {

inline double pi() { return std::numbers::pi; }

// piecewise-linear table in one variable, clamped outside the knots
inline Coeff1 tabulated_law(const std::vector<double>& args,
                            const std::string& where) {
    if (args.size() < 4 || args.size() % 2 != 0)
        throw ConfigError(where + ": tabulated needs (x0,y0,x1,y1,...) pairs");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < args.size(); i += 2) {
        xs.push_back(args[i]);
        ys.push_back(args[i + 1]);
    }
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw ConfigError(where + ": table knots must increase");
    return [xs, ys](double u) {
        if (u <= xs.front()) return ys.front();
        if (u >= xs.back()) return ys.back();
        std::size_t k = 1;
        while (xs[k] < u) ++k;
        const double w = (u - xs[k - 1]) / (xs[k] - xs[k - 1]);
        return (1.0 - w) * ys[k - 1] + w * ys[k];
    };
}

inline void expect_args(const ConfigValue& call, std::size_t lo, std::size_t hi,
                        const std::string& where) {
    if (call.list.size() < lo || call.list.size() > hi)
        throw ConfigError(where + ": preset '" + call.word +
                          "' has the wrong number of arguments");
}

// scalar laws of u: constant, zero, tabulated
inline Coeff1 build_u_law(const ConfigValue& call, const std::string& where) {
    if (call.word == "zero") {
        expect_args(call, 0, 0, where);
        return constant_law(0.0);
    }
    if (call.word == "constant") {
        expect_args(call, 1, 1, where);
        return constant_law(call.list[0]);
    }
    if (call.word == "tabulated") return tabulated_law(call.list, where);
    throw ConfigError(where + ": unknown law preset '" + call.word + "'");
}

struct TimeFactor {
    double amp = 0.0;
    double period = 1.0;
    double operator()(double t) const {
        return 1.0 + amp * std::sin(2.0 * pi() * t / period);
    }
};

inline std::optional<TimeFactor>
build_time_factor(const std::optional<ConfigValue>& call, const std::string& where) {
    if (!call) return std::nullopt;
    if (call->word == "none") return std::nullopt;
    if (call->word != "sine")
        throw ConfigError(where + ": time modulation must be sine(amp, period)");
    expect_args(*call, 2, 2, where);
    if (!(call->list[1] > 0.0)) throw ConfigError(where + ": period must be positive");
    return TimeFactor{call->list[0], call->list[1]};
}

inline Coeff4 lift_u_law(Coeff1 law, std::optional<TimeFactor> tf) {
    if (!tf)
        return [law = std::move(law)](double, Point, double u, double) {
            return law(u);
        };
    return [law = std::move(law), f = *tf](double t, Point, double u, double) {
        return f(t) * law(u);
    };
}

inline PrimalCoefficients build_primal(const ScenarioConfig& cfg) {
    PrimalCoefficients p;

    auto diffusivity = [&](const ConfigValue& call, const std::string& where,
                           std::optional<TimeFactor> tf) -> Coeff4 {
        if (call.word == "constant" || call.word == "zero" ||
            call.word == "tabulated")
            return lift_u_law(build_u_law(call, where), tf);
        if (call.word == "E_rational") {
            expect_args(call, 2, 2, where);
            const double a1 = call.list[0], a2 = call.list[1];
            (void)e_rational(0.5, a1, a2); // validates a2 > 0
            Coeff1 law = [a1, a2](double u) { return e_rational(u, a1, a2); };
            return lift_u_law(std::move(law), tf);
        }
        if (call.word == "beta_tanh") {
            expect_args(call, 4, 4, where);
            BetaTanhParams bp{call.list[0], call.list[1], call.list[2], call.list[3]};
            (void)beta_tanh(0.0, bp); // validates the rate ordering
            Coeff1 law = [bp](double u) { return beta_tanh(u, bp); };
            return lift_u_law(std::move(law), tf);
        }
        throw ConfigError(where + ": unknown coefficient preset '" + call.word + "'");
    };

    p.D0 = diffusivity(cfg.D0, "coefficients.D0",
                       build_time_factor(cfg.D0_time, "coefficients.D0_time"));
    p.E0 = diffusivity(cfg.E0, "coefficients.E0", std::nullopt);
    p.beta0 = diffusivity(cfg.beta0, "coefficients.beta0",
                          build_time_factor(cfg.beta0_time, "coefficients.beta0_time"));
    p.mu0 = build_u_law(cfg.mu0, "coefficients.mu0");
    p.nu0 = build_u_law(cfg.nu0, "coefficients.nu0");

    if (cfg.M0.word == "zero") {
        p.M0 = zero_vector_coeff();
    } else if (cfg.M0.word == "constant") {
        expect_args(cfg.M0, 1, 2, "coefficients.M0");
        const double mx = cfg.M0.list[0];
        const double my = cfg.M0.list.size() > 1 ? cfg.M0.list[1] : 0.0;
        p.M0 = [mx, my](double, Point, double, double) { return Vec2{mx, my}; };
    } else {
        throw ConfigError("coefficients.M0: expected zero or constant(...)");
    }
    return p;
}

inline Background build_phi(const ConfigValue& call) {
    const std::string where = "data.phi";
    if (call.word == "zero") return Background::zero();
    if (call.word == "constant") {
        expect_args(call, 1, 1, where);
        const double c = call.list[0];
        return Background::analytic([c](double, Point) { return c; },
                                    [](double, Point) { return 0.0; });
    }
    if (call.word == "time_sine") {
        expect_args(call, 3, 4, where);
        const double base = call.list[0], amp = call.list[1], period = call.list[2];
        const double phase = call.list.size() > 3 ? call.list[3] : 0.0;
        if (!(period > 0.0)) throw ConfigError(where + ": period must be positive");
        const double om = 2.0 * pi() / period;
        Background b = Background::analytic(
            [=](double t, Point) { return base + amp * std::sin(om * t + phase); },
            [=](double t, Point) { return amp * om * std::cos(om * t + phase); });
        b.grad = [](double, Point) { return Vec2{0.0, 0.0}; };
        b.grad_ddt = b.grad;
        return b;
    }
    if (call.word == "ramp") {
        expect_args(call, 3, 3, where);
        const double c0 = call.list[0], c1 = call.list[1], tr = call.list[2];
        if (!(tr > 0.0)) throw ConfigError(where + ": ramp time must be positive");
        Background b = Background::analytic(
            [=](double t, Point) {
                return t >= tr ? c1 : c0 + (c1 - c0) * (t / tr);
            },
            [=](double t, Point) { return t >= tr ? 0.0 : (c1 - c0) / tr; });
        b.grad = [](double, Point) { return Vec2{0.0, 0.0}; };
        b.grad_ddt = b.grad;
        return b;
    }
    throw ConfigError(where + ": unknown boundary preset '" + call.word + "'");
}

inline ScalarField build_field(const ConfigValue& call, const GridPtr& g,
                               const std::string& where) {
    if (call.word == "zero") return ScalarField(g);
    if (call.word == "constant") {
        expect_args(call, 1, 1, where);
        return ScalarField(g, call.list[0]);
    }
    if (call.word == "sine_x") {
        expect_args(call, 2, 3, where);
        const double amp = call.list[0];
        const double k = call.list[1];
        const double off = call.list.size() > 2 ? call.list[2] : 0.0;
        const double lx = g->lengths[0];
        const double ly = g->dimension == 2 ? g->lengths[1] : 1.0;
        const int dim = g->dimension;
        return make_field(g, [=](Point p) {
            double v = amp * std::sin(k * pi() * p[0] / lx);
            if (dim == 2) v *= std::sin(k * pi() * p[1] / ly);
            return v + off;
        });
    }
    throw ConfigError(where + ": unknown field preset '" + call.word + "'");
}

// Node-sampled psi background: the boundary Cauchy problem integrated at
// every node with the classical one-step method, Hermite-interpolated in
// time. In periodic mode the initial value is first iterated to the
// periodic orbit of the node ODE.
struct PsiTable {
    GridPtr grid;
    double dt = 0.0;
    int steps = 0;
    std::vector<std::vector<double>> val; // [step][node]
    std::vector<std::vector<double>> rhs;
};

inline std::shared_ptr<PsiTable>
integrate_psi_table(const GridPtr& grid, const TransformedCoefficients& tc,
                    const Background& phi, const ScalarField& psi0, double T,
                    double dt, bool periodic) {
    const Grid& g = *grid;
    auto table = std::make_shared<PsiTable>();
    table->grid = grid;
    table->dt = dt;
    table->steps = static_cast<int>(std::llround(T / dt));
    if (table->steps < 1 ||
        std::abs(T / dt - table->steps) > 1e-9 * std::max(1.0, T / dt))
        throw ConfigError("psi table: T must be a multiple of dt");

    const int n = g.node_count();
    std::vector<double> start(psi0.values.begin(), psi0.values.end());

    auto rhs_at = [&](double t, int node, double psi) {
        const Point x = g.point(node);
        const double ph = phi.v(t, x);
        return tc.beta1(t, x, ph, psi) * psi + tc.gamma(t, x, ph, psi) * ph;
    };
    auto sweep = [&](const std::vector<double>& init,
                     std::vector<std::vector<double>>* record) {
        std::vector<double> cur = init;
        if (record) (*record)[0] = cur;
        for (int k = 0; k < table->steps; ++k) {
            const double t = k * dt;
            for (int node = 0; node < n; ++node) {
                double& psi = cur[static_cast<std::size_t>(node)];
                const double guard = 1e6 * (std::abs(init[static_cast<std::size_t>(node)]) + 1.0);
                const double k1 = rhs_at(t, node, psi);
                const double k2 = rhs_at(t + 0.5 * dt, node, psi + 0.5 * dt * k1);
                const double k3 = rhs_at(t + 0.5 * dt, node, psi + 0.5 * dt * k2);
                const double k4 = rhs_at(t + dt, node, psi + dt * k3);
                psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if (!std::isfinite(psi) || std::abs(psi) > guard)
                    throw NumericsError("psi table: trace blow-up at node " +
                                        std::to_string(node));
            }
            if (record) (*record)[static_cast<std::size_t>(k) + 1] = cur;
        }
        return cur;
    };

    if (periodic) {
        // the node ODE contracts at rate exp(-beta_G T); iterate to its
        // periodic point before recording
        for (int it = 0; it < 400; ++it) {
            std::vector<double> end = sweep(start, nullptr);
            double worst = 0.0;
            for (int node = 0; node < n; ++node)
                worst = std::max(worst, std::abs(end[static_cast<std::size_t>(node)] -
                                                 start[static_cast<std::size_t>(node)]));
            start = std::move(end);
            if (worst <= 1e-13) break;
            if (it == 399)
                throw NumericsError("psi table: periodic trace did not converge");
        }
    }

    table->val.assign(static_cast<std::size_t>(table->steps) + 1,
                      std::vector<double>(static_cast<std::size_t>(n), 0.0));
    sweep(start, &table->val);
    table->rhs.assign(table->val.size(),
                      std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int k = 0; k <= table->steps; ++k)
        for (int node = 0; node < n; ++node)
            table->rhs[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)] =
                rhs_at(k * dt, node, table->val[static_cast<std::size_t>(k)][static_cast<std::size_t>(node)]);
    return table;
}

inline Background background_from_table(std::shared_ptr<PsiTable> table) {
    auto node_of = [table](Point x) {
        const Grid& g = *table->grid;
        int i = static_cast<int>(std::lround(x[0] / g.spacing[0]));
        i = std::min(std::max(i, 0), g.nx - 1);
        int j = 0;
        if (g.dimension == 2) {
            j = static_cast<int>(std::lround(x[1] / g.spacing[1]));
            j = std::min(std::max(j, 0), g.ny - 1);
        }
        return g.flat(i, j);
    };
    auto sample = [table](const std::vector<std::vector<double>>& rows, double t,
                          int node, bool hermite) {
        const double dt = table->dt;
        double s = t / dt;
        s = std::min(std::max(s, 0.0), static_cast<double>(table->steps));
        int k = std::min(static_cast<int>(s), table->steps - 1);
        const double w = s - k;
        const auto ku = static_cast<std::size_t>(k);
        const auto nu = static_cast<std::size_t>(node);
        const double a = rows[ku][nu], b = rows[ku + 1][nu];
        if (!hermite) return (1.0 - w) * a + w * b;
        const double da = table->rhs[ku][nu] * dt, db = table->rhs[ku + 1][nu] * dt;
        const double w2 = w * w, w3 = w2 * w;
        return (2 * w3 - 3 * w2 + 1) * a + (w3 - 2 * w2 + w) * da +
               (-2 * w3 + 3 * w2) * b + (w3 - w2) * db;
    };

    Background bg;
    bg.value = [table, node_of, sample](double t, Point x) {
        return sample(table->val, t, node_of(x), true);
    };
    bg.ddt = [table, node_of, sample](double t, Point x) {
        return sample(table->rhs, t, node_of(x), false);
    };
    auto node_grad = [table, node_of, sample](const std::vector<std::vector<double>>& rows,
                                              bool hermite, double t, Point x) {
        const Grid& g = *table->grid;
        const int node = node_of(x);
        const int i = g.node_i(node), j = g.node_j(node);
        Vec2 out{0.0, 0.0};
        auto at = [&](int ii, int jj) { return sample(rows, t, g.flat(ii, jj), hermite); };
        if (i == 0)
            out[0] = (at(1, j) - at(0, j)) / g.spacing[0];
        else if (i == g.nx - 1)
            out[0] = (at(i, j) - at(i - 1, j)) / g.spacing[0];
        else
            out[0] = (at(i + 1, j) - at(i - 1, j)) / (2.0 * g.spacing[0]);
        if (g.dimension == 2) {
            if (j == 0)
                out[1] = (at(i, 1) - at(i, 0)) / g.spacing[1];
            else if (j == g.ny - 1)
                out[1] = (at(i, j) - at(i, j - 1)) / g.spacing[1];
            else
                out[1] = (at(i, j + 1) - at(i, j - 1)) / (2.0 * g.spacing[1]);
        }
        return out;
    };
    bg.grad = [table, node_grad](double t, Point x) {
        return node_grad(table->val, true, t, x);
    };
    bg.grad_ddt = [table, node_grad](double t, Point x) {
        return node_grad(table->rhs, false, t, x);
    };
    return bg;
}

inline BoundaryTrace trace_from_table(const PsiTable& table) {
    BoundaryTrace tr;
    tr.grid = table.grid;
    tr.dt = table.dt;
    const Grid& g = *table.grid;
    tr.values.assign(table.val.size(),
                     std::vector<double>(static_cast<std::size_t>(g.boundary_count()), 0.0));
    for (std::size_t k = 0; k < table.val.size(); ++k)
        for (int b = 0; b < g.boundary_count(); ++b)
            tr.values[k][static_cast<std::size_t>(b)] =
                table.val[k][static_cast<std::size_t>(g.boundary_nodes[static_cast<std::size_t>(b)])];
    tr.initial = tr.values.front();
    return tr;
}

} // namespace scenario_detail

/// Everything a configured scenario needs to run: grid, laws, data fields,
/// backgrounds, certificate and thresholds.
struct ScenarioObjects {
    ScenarioConfig cfg;
    GridPtr grid;
    std::shared_ptr<TransformedCoefficients> tc;
    Background phi;
    Background psi;
    std::shared_ptr<scenario_detail::PsiTable> psi_table;
    ScalarField u0;
    ScalarField varsigma0;
    HomogenizedCoefficients hc;
    BoundsCertificate certificate;
    EstimateReport estimates;
    HypothesisReport hypotheses;
};

inline ScenarioObjects build_scenario(const ScenarioConfig& cfg) {
    ScenarioObjects sc;
    sc.cfg = cfg;
    sc.grid = build_grid(cfg.dimension, cfg.lengths, cfg.cells);
    sc.tc = std::make_shared<TransformedCoefficients>(
        transform(scenario_detail::build_primal(cfg)));
    sc.phi = scenario_detail::build_phi(cfg.phi);
    sc.u0 = scenario_detail::build_field(cfg.u0, sc.grid, "data.u0");
    sc.varsigma0 = scenario_detail::build_field(cfg.varsigma0, sc.grid, "data.varsigma0");

    sc.psi_table = scenario_detail::integrate_psi_table(
        sc.grid, *sc.tc, sc.phi, sc.varsigma0, cfg.T, cfg.dt,
        cfg.mode == "periodic");
    sc.psi = scenario_detail::background_from_table(sc.psi_table);

    sc.hc = homogenize(sc.grid, *sc.tc, sc.phi, sc.psi);
    sc.certificate = certify_bounds(sc.hc, {cfg.v_box, cfg.tau_box},
                                    {0.0, cfg.T}, cfg.samples, cfg.seed);
    sc.estimates = compute_thresholds(sc.certificate, friedrichs_constant(*sc.grid));
    sc.hypotheses = validate_hypotheses(sc.certificate, sc.hc,
                                        cfg.mode == "periodic"
                                            ? ProblemKind::Periodic
                                            : ProblemKind::Reproductive,
                                        std::max(cfg.samples, 1000),
                                        cfg.seed + 17);
    sc.estimates.Gamma = sc.hypotheses.Gamma;
    sc.estimates.Gamma0 = sc.hypotheses.Gamma0;
    return sc;
}

struct RunOutcome {
    int exit_code = 0;
    bool accepted = false;
    std::string summary;
};

namespace scenario_detail {

inline void export_frame(const std::string& path, const State& s,
                         const TransformedCoefficients& tc) {
    const Grid& g = *s.u.grid;
    std::vector<std::string> header{"t", "x"};
    if (g.dimension == 2) header.push_back("y");
    header.insert(header.end(), {"u", "varsigma", "sigma"});
    CsvWriter csv(path, header);
    ScalarField sigma = sigma_of_varsigma(s.varsigma, s.u, tc);
    for (int idx = 0; idx < g.node_count(); ++idx) {
        const Point p = g.point(idx);
        std::vector<double> row{s.t, p[0]};
        if (g.dimension == 2) row.push_back(p[1]);
        row.insert(row.end(), {s.u[idx], s.varsigma[idx], sigma[idx]});
        csv.row(row);
    }
}

inline double sampled_gamma_u_sup(const Trajectory& traj,
                                  const TransformedCoefficients& tc) {
    double sup = 0.0;
    for (const State& s : traj.states) {
        const Grid& g = *s.u.grid;
        for (int idx = 0; idx < g.node_count(); ++idx)
            sup = std::max(sup, std::abs(tc.gamma(s.t, g.point(idx), s.u[idx],
                                                  s.varsigma[idx]) *
                                         s.u[idx]));
    }
    return sup;
}

inline void export_monitors(const std::string& path, const Trajectory& traj,
                            const ScalarField& varsigma0, double beta_G,
                            double c_gamma) {
    CsvWriter csv(path, {"t", "mass", "l2_u", "h1_u", "max_u", "min_u",
                         "stress_bound_margin"});
    const double tail = beta_G > 0.0
                            ? c_gamma / beta_G + 1e-8
                            : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.monitors.size(); ++k) {
        const MonitorRow& m = traj.monitors[k];
        double margin = std::numeric_limits<double>::infinity();
        if (beta_G > 0.0) {
            const State& s = traj.states[k];
            const double t = s.t - traj.states.front().t;
            for (std::size_t i = 0; i < s.varsigma.values.size(); ++i) {
                const double bound =
                    std::exp(-t * beta_G) * std::abs(varsigma0.values[i]) + tail;
                margin = std::min(margin, bound - std::abs(s.varsigma.values[i]));
            }
        }
        csv.row({m.t, m.mass, m.l2_u, m.h1_u, m.max_u, m.min_u, margin});
    }
}

inline void export_convergence(const std::string& path,
                               const ConvergenceReport& rep) {
    CsvWriter csv(path, {"iteration", "residual", "ratio"});
    for (std::size_t m = 0; m < rep.residuals.size(); ++m)
        csv.row({static_cast<double>(m + 1), rep.residuals[m],
                 m < rep.ratios.size() ? rep.ratios[m] : 0.0});
}

inline void export_estimates(const std::string& path, const EstimateReport& est) {
    CsvWriter csv(path, {"K_Omega", "k", "T0", "C1", "C2", "Gamma", "Gamma0",
                         "K_D", "K_E", "K_beta", "K_mu", "K_f", "K_g", "d",
                         "beta_G", "f_tilde_norm", "g_tilde_norm"});
    const BoundsCertificate& c = est.certificate;
    csv.row({est.K_Omega, est.k, est.T0, est.C1, est.C2, est.Gamma, est.Gamma0,
             c.K_D, c.K_E, c.K_beta, c.K_mu, c.K_f, c.K_g, c.d, c.beta_G,
             c.f_tilde_norm, c.g_tilde_norm});
}

struct MonitorVerdict {
    bool max_principle = true;
    bool stress_bound = true;
    double min_u = 0.0, max_u = 0.0, worst_margin = 0.0;
};

inline MonitorVerdict check_monitors(const Trajectory& traj,
                                     const ScalarField& varsigma0,
                                     double beta_G, double c_gamma) {
    MonitorVerdict v;
    v.min_u = std::numeric_limits<double>::infinity();
    v.max_u = -v.min_u;
    for (const MonitorRow& m : traj.monitors) {
        v.min_u = std::min(v.min_u, m.min_u);
        v.max_u = std::max(v.max_u, m.max_u);
    }
    v.max_principle = v.min_u >= -1e-8 && v.max_u <= 1.0 + 1e-8;
    if (beta_G > 0.0) {
        auto hist = traj.stress_history();
        StressBoundReport rep = stress_bound_check(hist, varsigma0, beta_G, c_gamma);
        v.stress_bound = rep.ok();
        v.worst_margin = rep.worst_margin;
    }
    return v;
}

} // namespace scenario_detail

/// Executes a configured scenario and writes CSV artifacts plus a summary
/// into out_dir. Exit codes: 0 accepted, 2 completed but not accepted,
/// 3 configuration/certificate rejection, 4 numerical failure (3 and 4 are
/// raised as ConfigError/CertificateError/NumericsError by the callees and
/// mapped by the CLI).
inline RunOutcome run_scenario(const ScenarioConfig& cfg,
                               const std::string& out_dir) {
    namespace sd = scenario_detail;
    std::filesystem::create_directories(out_dir);
    auto path = [&](const std::string& name) { return out_dir + "/" + name; };

    ScenarioObjects sc = build_scenario(cfg);
    std::ostringstream sum;
    sum << "mode: " << cfg.mode << "\n";
    sum << "grid: dim=" << cfg.dimension << " cells=" << cfg.cells[0]
        << (cfg.dimension == 2 ? "x" + std::to_string(cfg.cells[1]) : "") << "\n";
    sum << "constants: K_Omega=" << format_double(sc.estimates.K_Omega)
        << " k=" << format_double(sc.estimates.k)
        << " T0=" << format_double(sc.estimates.T0)
        << " C1=" << format_double(sc.estimates.C1)
        << " C2=" << format_double(sc.estimates.C2) << "\n";
    sum << "certificate: d=" << format_double(sc.certificate.d)
        << " beta_G=" << format_double(sc.certificate.beta_G)
        << " K_D=" << format_double(sc.certificate.K_D)
        << " K_E=" << format_double(sc.certificate.K_E)
        << " K_beta=" << format_double(sc.certificate.K_beta)
        << " K_mu=" << format_double(sc.certificate.K_mu)
        << " K_f=" << format_double(sc.certificate.K_f)
        << " K_g=" << format_double(sc.certificate.K_g) << "\n";
    sum << "hypotheses:";
    for (const auto& item : sc.hypotheses.items)
        sum << "\n  [" << (item.pass ? "pass" : "FAIL") << "] " << item.name
            << " (value " << format_double(item.value) << ")";
    sum << "\n";
    sd::export_estimates(path("estimates.csv"), sc.estimates);

    RunOutcome out;
    if (!sc.hypotheses.pass) {
        sum << "result: rejected (hypothesis checks failed)\n";
        out.exit_code = 3;
        out.summary = sum.str();
        std::ofstream(path("summary.txt")) << out.summary;
        return out;
    }

    auto export_traj = [&](const Trajectory& traj) {
        sd::export_frame(path("final_state.csv"), traj.back(), *sc.tc);
        if (cfg.frame_stride > 0) {
            for (std::size_t k = 0; k < traj.states.size();
                 k += static_cast<std::size_t>(cfg.frame_stride)) {
                char name[32];
                std::snprintf(name, sizeof(name), "frame_%06zu.csv", k);
                sd::export_frame(path(name), traj.states[k], *sc.tc);
            }
        }
        if (cfg.monitors) {
            const double cg = sd::sampled_gamma_u_sup(traj, *sc.tc);
            sd::export_monitors(path("monitors.csv"), traj, sc.varsigma0,
                                sc.certificate.beta_G, cg);
            return cg;
        }
        return 0.0;
    };

    EvolveOptions eopts;
    eopts.picard_passes = cfg.picard_passes;
    PicardOptions popts{cfg.tol, cfg.max_iter, cfg.relaxation};

    if (cfg.mode == "simulate") {
        State s0{0.0, sc.u0, sc.varsigma0};
        Trajectory traj = simulate(s0, *sc.tc, sc.phi, cfg.T, cfg.dt, eopts);
        const double cg = export_traj(traj);
        sd::MonitorVerdict mv =
            sd::check_monitors(traj, sc.varsigma0, sc.certificate.beta_G, cg);
        bool ok = true;
        if (cfg.enforce_monitors) ok = mv.max_principle && mv.stress_bound;
        sum << "monitors: u in [" << format_double(mv.min_u) << ", "
            << format_double(mv.max_u)
            << "], stress-bound margin " << format_double(mv.worst_margin) << "\n";
        if (cfg.reference == "fick_mode") {
            if (cfg.E0.word != "zero" || cfg.nu0.list != std::vector<double>{0.0} ||
                cfg.M0.word != "zero" || cfg.D0.word != "constant" ||
                cfg.u0.word != "sine_x")
                throw ConfigError("reference fick_mode needs constant D0, zero "
                                  "E0/M0/nu0 and a sine_x initial state");
            const double d0 = cfg.D0.list[0];
            const double amp = cfg.u0.list[0], kmode = cfg.u0.list[1];
            const Grid& g = *sc.grid;
            double lam = std::pow(kmode * sd::pi() / g.lengths[0], 2);
            if (g.dimension == 2) lam += std::pow(kmode * sd::pi() / g.lengths[1], 2);
            double linf = 0.0;
            const State& fin = traj.back();
            for (int idx = 0; idx < g.node_count(); ++idx) {
                const Point p = g.point(idx);
                double expect = amp * std::exp(-d0 * lam * cfg.T) *
                                std::sin(kmode * sd::pi() * p[0] / g.lengths[0]);
                if (g.dimension == 2)
                    expect *= std::sin(kmode * sd::pi() * p[1] / g.lengths[1]);
                linf = std::max(linf, std::abs(fin.u[idx] - expect));
            }
            sum << "reference fick_mode: Linf error " << format_double(linf)
                << " (tol " << format_double(cfg.reference_tol) << ")\n";
            ok = ok && linf <= cfg.reference_tol;
        }
        out.accepted = ok;
        out.exit_code = ok ? 0 : 2;
        sum << "result: " << (ok ? "accepted" : "not-accepted") << "\n";
    } else if (cfg.mode == "reproductive") {
        ShootingProblem pr;
        pr.mode = ShootingProblem::Mode::Reproductive;
        pr.grid = sc.grid;
        pr.T = cfg.T;
        pr.dt = cfg.dt;
        pr.phi = sc.phi;
        pr.varsigma0 = sc.varsigma0;

        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> guess(cfg.guess_range[0],
                                                     cfg.guess_range[1]);
        std::vector<ScalarField> fixed_points;
        bool all_accepted = true;
        ConvergenceReport first_rep;
        Trajectory first_traj;
        for (int s = 0; s < std::max(cfg.starts, 1); ++s) {
            if (s == 0) {
                pr.u0_guess = sc.u0;
            } else {
                pr.u0_guess = ScalarField(sc.grid);
                for (int idx : sc.grid->interior_nodes) pr.u0_guess[idx] = guess(rng);
            }
            auto res = solve_reproductive_concentration(pr, *sc.tc,
                                                        sc.estimates.T0, popts, eopts);
            all_accepted = all_accepted && res.report.accepted;
            fixed_points.push_back(res.trajectory.states.front().u);
            if (s == 0) {
                first_rep = res.report;
                first_traj = std::move(res.trajectory);
            }
            sum << "start " << s << ": iters=" << res.report.iterations
                << " residual=" << format_double(res.report.final_residual)
                << (res.report.tag.empty() ? "" : " [" + res.report.tag + "]")
                << "\n";
        }
        double worst_gap = 0.0;
        for (std::size_t s = 1; s < fixed_points.size(); ++s) {
            ScalarField d = fixed_points[s];
            for (std::size_t k = 0; k < d.values.size(); ++k)
                d.values[k] -= fixed_points[0].values[k];
            worst_gap = std::max(worst_gap, norm(d, NormKind::L2) /
                                                std::max(norm(fixed_points[0],
                                                              NormKind::L2),
                                                         1e-30));
        }
        const double cg = export_traj(first_traj);
        sd::export_convergence(path("convergence.csv"), first_rep);
        sd::MonitorVerdict mv = sd::check_monitors(first_traj, sc.varsigma0,
                                                   sc.certificate.beta_G, cg);
        bool ok = all_accepted && mv.max_principle && mv.stress_bound;
        if (cfg.starts > 1) ok = ok && worst_gap <= 1e-6;
        sum << "fixed-point agreement across starts (relative L2): "
            << format_double(worst_gap) << "\n";
        sum << "monitors: u in [" << format_double(mv.min_u) << ", "
            << format_double(mv.max_u) << "], stress-bound margin "
            << format_double(mv.worst_margin) << "\n";
        if (!first_rep.tag.empty()) sum << "tags: " << first_rep.tag << "\n";
        out.accepted = ok;
        out.exit_code = ok ? 0 : 2;
        sum << "result: " << (ok ? "accepted" : "not-accepted") << "\n";
    } else { // periodic
        ShootingProblem pr;
        pr.mode = ShootingProblem::Mode::Periodic;
        pr.grid = sc.grid;
        pr.T = cfg.T;
        pr.dt = cfg.dt;
        pr.phi = sc.phi;
        BoundaryTrace psi_trace = sd::trace_from_table(*sc.psi_table);
        pr.psi = &psi_trace;
        pr.u0_guess = sc.u0;
        pr.varsigma0_guess = sc.varsigma0;

        PeriodicGate gate{sc.hypotheses.Gamma, sc.hypotheses.Gamma0,
                          sc.certificate.K_f, sc.certificate.K_g};
        if (cfg.continuation) {
            auto records = run_continuation(sc.grid, sc.hc, cfg.T, cfg.dt,
                                            cfg.epsilons, cfg.lambdas, popts);
            const auto& last = records.back();
            sum << "continuation: " << records.size() << " stages, final eps="
                << format_double(last.eps) << "\n";
            const Grid& g = *sc.grid;
            for (int idx = 0; idx < g.node_count(); ++idx) {
                const Point p = g.point(idx);
                pr.u0_guess[idx] = last.solution.u[idx] + sc.phi.v(0.0, p);
                pr.varsigma0_guess[idx] = last.solution.s[idx] + sc.psi.v(0.0, p);
            }
        }

        auto res = solve_periodic(pr, *sc.tc, gate, popts, eopts);
        const double cg = export_traj(res.trajectory);
        sd::export_convergence(path("convergence.csv"), res.report);

        // true period test: one more period from the endpoint
        State again = res.trajectory.back();
        again.t = 0.0;
        EvolveOptions eo2 = eopts;
        eo2.psi_override = pr.psi;
        Trajectory second = simulate(again, *sc.tc, sc.phi, cfg.T, cfg.dt, eo2);
        ScalarField du = second.back().u;
        for (std::size_t k = 0; k < du.values.size(); ++k)
            du.values[k] -= res.trajectory.back().u.values[k];
        const double period_gap = norm(du, NormKind::L2);

        sd::MonitorVerdict mv = sd::check_monitors(res.trajectory, sc.varsigma0,
                                                   sc.certificate.beta_G, cg);
        bool ok = res.report.accepted && period_gap <= 2.0 * cfg.tol;
        if (cfg.enforce_monitors) ok = ok && mv.max_principle && mv.stress_bound;
        sum << "periodic: iters=" << res.report.iterations << " residual_u="
            << format_double(res.report.final_residual) << " residual_stress="
            << format_double(res.report.stress_residual) << "\n";
        sum << "second-period return gap: " << format_double(period_gap) << "\n";
        sum << "coercivity: Gamma=" << format_double(gate.Gamma)
            << " Gamma0=" << format_double(gate.Gamma0) << "\n";
        out.accepted = ok;
        out.exit_code = ok ? 0 : 2;
        sum << "result: " << (ok ? "accepted" : "not-accepted") << "\n";
    }

    out.summary = sum.str();
    std::ofstream(path("summary.txt")) << out.summary;
    return out;
}

/// Built-in scenario presets, runnable by name.
inline const std::map<std::string, std::pair<std::string, std::string>>&
scenario_presets() {
    static const std::map<std::string, std::pair<std::string, std::string>> presets = {
        {"fick_baseline",
         {"classical diffusion sanity run checked against the decaying sine mode",
          R"(# classical diffusion baseline
[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
D0 = constant(1.0)
E0 = zero
beta0 = constant(1.0)
M0 = zero
mu0 = constant(0.0)
nu0 = constant(0.0)

[data]
phi = zero
u0 = sine_x(1.0, 1)
varsigma0 = zero

[solver]
mode = simulate
T = 0.1
dt = 1e-4
v_box = [-1.0, 1.0]
tau_box = [-1.0, 1.0]
samples = 2000
reference = fick_mode
reference_tol = 1e-3
enforce_monitors = true

[output]
directory = out/fick_baseline
monitors = true
)"}},
        {"nonfick_front",
         {"sorption front with the tanh relaxation rate and rational stress diffusivity",
          R"(# anomalous-diffusion front driven by a boundary ramp
[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
D0 = constant(0.2)
E0 = E_rational(0.8, 0.05)
beta0 = beta_tanh(2.0, 1.0, 0.5, 0.15)
M0 = zero
mu0 = constant(0.5)
nu0 = constant(0.0)

[data]
phi = ramp(0.0, 0.95, 0.05)
u0 = zero
varsigma0 = zero

[solver]
mode = simulate
T = 0.5
dt = 5e-4
v_box = [-1.0, 1.0]
tau_box = [-0.8, 0.8]
samples = 2000
enforce_monitors = false

[output]
directory = out/nonfick_front
frame_stride = 100
monitors = true
)"}},
        {"overshoot_probe",
         {"nonzero nu0 so the physical stress overshoots its boundary value",
          R"(# sorption overshoot probe (nu0 > 0 shifts sigma above varsigma)
[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
D0 = constant(0.5)
E0 = E_rational(0.6, 0.05)
beta0 = beta_tanh(2.0, 1.0, 0.5, 0.2)
M0 = zero
f = f_split(0.5, 0.8)

[data]
phi = ramp(0.0, 0.8, 0.1)
u0 = zero
varsigma0 = zero

[solver]
mode = simulate
T = 0.6
dt = 5e-4
v_box = [-1.0, 1.0]
tau_box = [-0.8, 0.8]
samples = 2000
enforce_monitors = false

[output]
directory = out/overshoot_probe
frame_stride = 120
monitors = true
)"}},
        {"reproductive_demo",
         {"repeating-concentration shooting solve inside the certified horizon",
          R"(# repeating concentration with fixed initial stress
[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
D0 = constant(1.0)
E0 = E_rational(0.5, 0.05)
beta0 = beta_tanh(2.0, 1.0, 0.5, 0.25)
M0 = zero
mu0 = constant(0.5)
nu0 = constant(0.0)

[data]
# repeats at t = 0 and t = T without being time-constant
phi = time_sine(0.5, 0.15, 0.1)
u0 = sine_x(0.2, 1, 0.5)
varsigma0 = constant(0.1)

[solver]
mode = reproductive
T = 0.1
dt = 5e-4
tol = 1e-8
max_iter = 300
starts = 3
guess_range = [0.2, 0.8]
seed = 20240811
v_box = [-0.6, 0.6]
tau_box = [-0.6, 0.6]
samples = 2000
enforce_monitors = true

[output]
directory = out/reproductive_demo
monitors = true
)"}},
        {"periodic_demo",
         {"time-periodic forcing and coefficients through the coercivity gate",
          R"(# time-periodic regime, period T = 1
[grid]
dimension = 1
lengths = [1.0]
cells = [200]

[coefficients]
D0 = constant(1.0)
E0 = E_rational(0.3, 0.05)
beta0 = beta_tanh(2.0, 1.0, 0.5, 0.35)
beta0_time = sine(0.1, 1.0)
M0 = zero
mu0 = constant(0.4)
nu0 = constant(0.0)

[data]
phi = time_sine(0.5, 0.2, 1.0)
u0 = constant(0.5)
varsigma0 = constant(0.15)

[solver]
mode = periodic
T = 1.0
dt = 1e-3
tol = 1e-6
max_iter = 200
v_box = [-0.8, 0.8]
tau_box = [-0.8, 0.8]
samples = 2000
continuation = false
epsilons = [1e-2, 1e-3, 1e-4]
lambdas = [0.0, 0.5, 1.0]
enforce_monitors = true

[output]
directory = out/periodic_demo
monitors = true
)"}},
    };
    return presets;
}

/// Loads a config by preset name or file path, applying overrides.
inline ScenarioConfig load_scenario(const std::string& name_or_path,
                                    const std::vector<std::string>& overrides) {
    std::string text;
    const auto& presets = scenario_presets();
    if (auto it = presets.find(name_or_path); it != presets.end()) {
        text = it->second.second;
    } else if (std::filesystem::exists(name_or_path)) {
        std::ifstream in(name_or_path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    } else {
        throw ConfigError("no such preset or config file: " + name_or_path);
    }
    ConfigTree tree = parse_config_text(text);
    for (const std::string& ov : overrides) apply_override(tree, ov);
    return make_scenario_config(tree);
}

} // namespace nonfick
