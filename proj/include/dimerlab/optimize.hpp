// optimize.hpp: small dense optimisers (bounded Levenberg-Marquardt, Nelder-Mead)

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace dimerlab::optimize {

using Vector = Eigen::VectorXd;

struct Bounds {
    Vector lower;
    Vector upper;

    Vector clamp(const Vector& x) const {
        if (lower.size() == 0) return x;
        return x.cwiseMax(lower).cwiseMin(upper);
    }
};

struct LmOptions {
    int max_iterations{200};
    double gradient_tol{1e-12};
    double step_tol{1e-12};
    double cost_tol{1e-15};
};

struct LmResult {
    Vector x;
    double cost{0.0}; // 0.5 * |r|^2
    int iterations{0};
    bool converged{false};
};

/// Minimises 0.5 |r(x)|^2 with a forward-difference Jacobian. Iterates are
/// projected onto the box after each step.
inline LmResult levenberg_marquardt(const std::function<Vector(const Vector&)>& residual, Vector x,
                                    const Bounds& bounds = {}, const LmOptions& opt = {}) {
    x = bounds.clamp(x);
    Vector r = residual(x);
    double cost = 0.5 * r.squaredNorm();
    double mu = -1.0;
    LmResult res;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;
        Eigen::MatrixXd jac(r.size(), x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            Vector xp = x;
            const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
            xp[j] += h;
            // Step backwards when the forward point leaves the box.
            if (bounds.upper.size() && xp[j] > bounds.upper[j]) xp[j] = x[j] - h;
            jac.col(j) = (residual(xp) - r) / (xp[j] - x[j]);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Vector g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) {
            res.converged = true;
            break;
        }
        if (mu < 0.0) mu = 1e-3 * jtj.diagonal().maxCoeff();

        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += mu * (jtj.diagonal().array() + 1e-12).matrix();
            const Vector step = a.ldlt().solve(-g);
            const Vector xn = bounds.clamp(x + step);
            const Vector rn = residual(xn);
            const double cn = 0.5 * rn.squaredNorm();
            if (std::isfinite(cn) && cn < cost) {
                const double dx = (xn - x).norm();
                const double dc = cost - cn;
                x = xn;
                r = rn;
                cost = cn;
                mu = std::max(mu / 3.0, 1e-20);
                improved = true;
                if (dx < opt.step_tol * (x.norm() + opt.step_tol) || dc < opt.cost_tol * std::max(cost, 1e-300))
                    res.converged = true;
                break;
            }
            mu *= 4.0;
        }
        if (!improved) {
            res.converged = true; // no descent direction left at this resolution
            break;
        }
        if (res.converged) break;
    }
    res.x = x;
    res.cost = cost;
    return res;
}

struct NelderMeadOptions {
    int max_evaluations{60};
    double x_tol{1e-4};
    double f_tol{1e-10};
};

struct NelderMeadResult {
    Vector x;
    double value{std::numeric_limits<double>::infinity()};
    int evaluations{0};
    std::vector<double> best_history; // best value after each iteration (non-increasing)
};

/// Derivative-free simplex descent; trial points are projected onto the box.
inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                                    const Vector& initial_step, const Bounds& bounds = {},
                                    const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    std::vector<Vector> pts;
    std::vector<double> vals;
    NelderMeadResult res;
    auto eval = [&](const Vector& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    pts.push_back(bounds.clamp(x0));
    vals.push_back(eval(pts[0]));
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector p = pts[0];
        p[i] += initial_step[i];
        if (bounds.upper.size() && p[i] > bounds.upper[i]) p[i] = pts[0][i] - initial_step[i];
        p = bounds.clamp(p);
        pts.push_back(p);
        vals.push_back(eval(p));
    }

    std::vector<std::size_t> order(pts.size());
    auto sort = [&] {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    };
    sort();
    res.best_history.push_back(vals[order.front()]);

    while (res.evaluations < opt.max_evaluations) {
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        double spread = 0.0;
        for (std::size_t i : order) spread = std::max(spread, (pts[i] - pts[best]).lpNorm<Eigen::Infinity>());
        if (spread < opt.x_tol && vals[worst] - vals[best] < opt.f_tol) break;

        Vector centroid = Vector::Zero(n);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
        centroid /= static_cast<double>(n);

        const Vector xr = bounds.clamp(centroid + (centroid - pts[worst]));
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Vector xe = bounds.clamp(centroid + 2.0 * (centroid - pts[worst]));
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            const bool outside = fr < vals[worst];
            const Vector xc = outside ? Vector(bounds.clamp(centroid + 0.5 * (xr - centroid)))
                                      : Vector(bounds.clamp(centroid + 0.5 * (pts[worst] - centroid)));
            const double fc = eval(xc);
            if (fc < (outside ? fr : vals[worst])) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    if (i == best) continue;
                    pts[i] = bounds.clamp(pts[best] + 0.5 * (pts[i] - pts[best]));
                    vals[i] = eval(pts[i]);
                }
            }
        }
        sort();
        res.best_history.push_back(vals[order.front()]);
    }
    res.x = pts[order.front()];
    res.value = vals[order.front()];
    return res;
}

} // namespace dimerlab::optimize
