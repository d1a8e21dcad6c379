#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "nonfick/errors.hpp"

namespace nonfick {

namespace detail {

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0)
        throw NumericsError("adaptive Simpson: recursion depth exhausted");
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol = 1e-10) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole,
                               std::max(abs_tol, 1e-300), 48);
}

/// Antiderivative u -> integral of f over [0, u], memoized on a uniform
/// table with cubic Hermite interpolation (node derivatives are f itself).
/// Falls back to direct quadrature outside the tabulated range.
class MemoizedAntiderivative {
public:
    MemoizedAntiderivative(std::function<double(double)> f, double range = 8.0,
                           int points = 10001, double abs_tol = 1e-10)
        : f_(std::move(f)), tol_(abs_tol) {
        if (!(range > 0.0) || points < 5)
            throw ConfigError("antiderivative table: bad range/points");
        if (points % 2 == 0) ++points; // keep 0 as an exact table node
        n_ = points;
        lo_ = -range;
        step_ = 2.0 * range / (n_ - 1);
        build();
    }

    double operator()(double u) const { return integral_from_zero(u); }

    double integral_from_zero(double u) const {
        if (!std::isfinite(u))
            throw NumericsError("antiderivative: non-finite argument");
        const double hi = lo_ + step_ * (n_ - 1);
        if (u < lo_) return vals_.front() + adaptive_simpson(f_, lo_, u, tol_);
        if (u > hi) return vals_.back() + adaptive_simpson(f_, hi, u, tol_);
        int k = static_cast<int>(std::floor((u - lo_) / step_));
        k = std::min(std::max(k, 0), n_ - 2);
        const double uk = lo_ + k * step_;
        const double t = (u - uk) / step_;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        const double h10 = t3 - 2.0 * t2 + t;
        const double h01 = -2.0 * t3 + 3.0 * t2;
        const double h11 = t3 - t2;
        const auto ku = static_cast<std::size_t>(k);
        return h00 * vals_[ku] + h01 * vals_[ku + 1] +
               step_ * (h10 * derivs_[ku] + h11 * derivs_[ku + 1]);
    }

    double integrand(double u) const { return f_(u); }

private:
    std::function<double(double)> f_;
    double tol_;
    int n_ = 0;
    double lo_ = 0.0, step_ = 0.0;
    std::vector<double> vals_;   // I at table nodes
    std::vector<double> derivs_; // f at table nodes

    void build() {
        vals_.assign(static_cast<std::size_t>(n_), 0.0);
        derivs_.resize(static_cast<std::size_t>(n_));
        const int zero_idx = (n_ - 1) / 2;
        const double sub_tol = tol_ / n_;
        for (int k = 0; k < n_; ++k)
            derivs_[static_cast<std::size_t>(k)] = f_(lo_ + k * step_);

        // accumulate outward from u = 0 with compensated summation so the
        // table reproduces linear antiderivatives to roundoff
        double sum = 0.0, comp = 0.0;
        auto add = [&sum, &comp](double x) {
            const double y = x - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        };
        for (int k = zero_idx; k + 1 < n_; ++k) {
            const double a = lo_ + k * step_, b = a + step_;
            add(adaptive_simpson(f_, a, b, sub_tol));
            vals_[static_cast<std::size_t>(k + 1)] = sum;
        }
        sum = 0.0;
        comp = 0.0;
        for (int k = zero_idx; k > 0; --k) {
            const double b = lo_ + k * step_, a = b - step_;
            add(-adaptive_simpson(f_, a, b, sub_tol));
            vals_[static_cast<std::size_t>(k - 1)] = sum;
        }
    }
};

} // namespace nonfick
