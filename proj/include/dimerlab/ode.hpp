// ode.hpp: adaptive Dormand-Prince 5(4) integrator for complex linear systems

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dimerlab/errors.hpp"

namespace dimerlab::ode {

using State = Eigen::VectorXcd;
using Rhs = std::function<void(double t, const State& y, State& dydt)>;

struct Options {
    double rel_tol{1e-8};
    double abs_tol{1e-10};
    double initial_step{1e-3};
    double max_step{0.1};
    long max_steps{10'000'000};
};

struct Stats {
    long accepted{0};
    long rejected{0};
    long rhs_evals{0};
};

namespace tableau {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
// b - b_hat (fifth minus embedded fourth order)
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
} // namespace tableau

/// Integrates y' = f(t, y) from t_out.front() and calls observe(i, y) at every
/// output time. Steps are clipped so that each output time is hit exactly.
/// Throws IntegrationError if the step size collapses.
template <typename Observer>
Stats integrate(const Rhs& f, State y, const std::vector<double>& t_out, const Options& opt,
                Observer&& observe) {
    using namespace tableau;
    Stats stats;
    if (t_out.empty()) return stats;

    double t = t_out.front();
    observe(std::size_t{0}, y);

    const Eigen::Index n = y.size();
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
    f(t, y, k1);
    ++stats.rhs_evals;
    double h = std::min(opt.initial_step, opt.max_step);

    for (std::size_t out = 1; out < t_out.size(); ++out) {
        const double target = t_out[out];
        while (t < target) {
            if (stats.accepted + stats.rejected >= opt.max_steps)
                throw IntegrationError(t, "ode: maximum number of steps exceeded at t=" + std::to_string(t));
            bool last = false;
            double step = std::min(h, opt.max_step);
            if (t + step >= target || target - (t + step) < 1e-12 * std::max(1.0, std::abs(target))) {
                step = target - t;
                last = true;
            }
            if (step < 1e-14 * std::max(1.0, std::abs(t)))
                throw IntegrationError(t, "ode: step size collapsed at t=" + std::to_string(t));

            tmp = y + step * a21 * k1;
            f(t + c2 * step, tmp, k2);
            tmp = y + step * (a31 * k1 + a32 * k2);
            f(t + c3 * step, tmp, k3);
            tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * step, tmp, k4);
            tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * step, tmp, k5);
            tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(t + step, tmp, k6);
            y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f(t + step, y5, k7);
            stats.rhs_evals += 6;

            tmp = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double err2 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
                const double r = std::abs(tmp[i]) / scale;
                err2 += r * r;
            }
            const double err = std::sqrt(err2 / static_cast<double>(n));
            if (!std::isfinite(err))
                throw IntegrationError(t, "ode: non-finite error estimate at t=" + std::to_string(t));

            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (err <= 1.0) {
                t = last ? target : t + step;
                y.swap(y5);
                k1.swap(k7); // first-same-as-last
                ++stats.accepted;
                // Do not let a short clipped step shrink the controller's step size.
                if (!last || factor < 1.0) h = step * factor;
                else h = std::max(h, step * factor);
            } else {
                ++stats.rejected;
                h = step * std::max(factor, 0.2);
            }
        }
        observe(out, y);
    }
    return stats;
}

} // namespace dimerlab::ode
