// calib.hpp: matching HEOM parameters to simulated traces and the delta_Q -> lambda line

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dimerlab/circuit.hpp"
#include "dimerlab/errors.hpp"
#include "dimerlab/heom.hpp"
#include "dimerlab/optimize.hpp"
#include "dimerlab/postproc.hpp"

namespace dimerlab {

/// sqrt(mean((p1_a - p1_b)^2)) over a shared time grid.
inline double trace_distance_l2(const PopulationTrace& a, const PopulationTrace& b) {
    if (a.size() != b.size() || a.size() == 0)
        throw Error(ErrorKind::Argument, "trace_distance_l2: traces have different grids");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i])))
            throw Error(ErrorKind::Argument, "trace_distance_l2: time grids differ at index " + std::to_string(i));
        const double d = a.p1[i] - b.p1[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

/// Runs f(i) for i in [0, n) on at most `threads` workers (0 = hardware concurrency).
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Worker count from DIMERLAB_THREADS, falling back to `fallback`.
inline unsigned threads_from_env(unsigned fallback = 0) {
    if (const char* s = std::getenv("DIMERLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && v > 0) return static_cast<unsigned>(v);
    }
    return fallback;
}

struct FixedHeomParams {
    double epsilon{1.5};
    double gamma{11.0};
    double kT{1.0};
};

struct SearchGrid {
    double lambda_min{0.05};
    double lambda_max{2.0};
    int n_lambda{8};
    double j_min{0.5};
    double j_max{1.5};
    int n_j{8};
    int refine_evaluations{40}; // simplex budget; 0 disables refinement

    void validate() const {
        if (n_lambda < 1 || n_j < 1) throw Error(ErrorKind::Argument, "SearchGrid: empty grid");
        if (!(lambda_min >= 0.0) || !(lambda_max >= lambda_min))
            throw Error(ErrorKind::Argument, "SearchGrid: lambda range must satisfy 0 <= min <= max");
        if (!(j_min >= 0.0) || !(j_max >= j_min))
            throw Error(ErrorKind::Argument, "SearchGrid: J range must satisfy 0 <= min <= max");
    }

    static double node(double lo, double hi, int n, int i) {
        return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
};

struct GridPoint {
    double lambda{0.0};
    double j{0.0};
    double residual{std::numeric_limits<double>::infinity()};
    bool ok{false};
};

struct HeomFitResult {
    double lambda_h{0.0};
    double j_h{0.0};
    double residual{0.0};
    std::vector<GridPoint> grid;
    std::vector<double> refine_history; // best residual after each simplex iteration
};

/// Coarse grid over (lambda_H, J_H) followed by bounded simplex refinement.
inline HeomFitResult fit_heom_params(const PopulationTrace& qtrace, const FixedHeomParams& fixed,
                                     const SearchGrid& grid = {}, const HeomConfig& cfg = {},
                                     unsigned threads = 0) {
    grid.validate();
    cfg.validate();
    if (qtrace.size() == 0) throw Error(ErrorKind::Argument, "fit_heom_params: empty trace");

    auto distance = [&](double lambda, double j) {
        const SystemParams p{fixed.epsilon, j};
        const BathParams bath{lambda, fixed.gamma, fixed.kT};
        return trace_distance_l2(heom_population_trace(p, bath, cfg, qtrace.times), qtrace);
    };

    HeomFitResult res;
    for (int a = 0; a < grid.n_lambda; ++a)
        for (int b = 0; b < grid.n_j; ++b)
            res.grid.push_back({SearchGrid::node(grid.lambda_min, grid.lambda_max, grid.n_lambda, a),
                                SearchGrid::node(grid.j_min, grid.j_max, grid.n_j, b)});

    parallel_for(res.grid.size(), threads, [&](std::size_t i) {
        try {
            res.grid[i].residual = distance(res.grid[i].lambda, res.grid[i].j);
            res.grid[i].ok = std::isfinite(res.grid[i].residual);
        } catch (const Error&) {
            res.grid[i].ok = false;
        }
    });

    const GridPoint* best = nullptr;
    for (const auto& g : res.grid)
        if (g.ok && (!best || g.residual < best->residual)) best = &g;
    if (!best) throw Error(ErrorKind::Calibration, "fit_heom_params: every HEOM evaluation failed");

    res.lambda_h = best->lambda;
    res.j_h = best->j;
    res.residual = best->residual;
    if (grid.refine_evaluations <= 0) return res;

    optimize::Vector x0(2), step(2);
    x0 << best->lambda, best->j;
    const double dl = grid.n_lambda > 1 ? (grid.lambda_max - grid.lambda_min) / (grid.n_lambda - 1) : 0.1;
    const double dj = grid.n_j > 1 ? (grid.j_max - grid.j_min) / (grid.n_j - 1) : 0.1;
    step << 0.5 * std::max(dl, 1e-3), 0.5 * std::max(dj, 1e-3);
    optimize::Bounds bounds{optimize::Vector(2), optimize::Vector(2)};
    bounds.lower << grid.lambda_min, grid.j_min;
    bounds.upper << grid.lambda_max, grid.j_max;

    optimize::NelderMeadOptions nm;
    nm.max_evaluations = grid.refine_evaluations;
    const auto r = optimize::nelder_mead(
        [&](const optimize::Vector& x) {
            try {
                return distance(x[0], x[1]);
            } catch (const Error&) {
                return std::numeric_limits<double>::infinity();
            }
        },
        x0, step, bounds, nm);
    res.refine_history = r.best_history;
    if (r.value < res.residual) {
        res.lambda_h = r.x[0];
        res.j_h = r.x[1];
        res.residual = r.value;
    }
    return res;
}

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double r_squared{1.0};

    double predict(double x) const { return intercept + slope * x; }
};

/// Ordinary least squares line through (delta_q, value) pairs.
inline LinearFit linear_fit(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 2) throw Error(ErrorKind::Argument, "linear_fit: need at least two points");
    const double n = static_cast<double>(pairs.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pairs) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw Error(ErrorKind::Argument, "linear_fit: non-finite input");
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pairs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 0.0)) throw Error(ErrorKind::Argument, "linear_fit: rank deficient, all delta_q values equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (const auto& [x, y] : pairs) {
        const double r = y - fit.predict(x);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

/// delta_q = (lambda_target - intercept) / slope.
inline double interpolate_delta(double lambda_target, const LinearFit& fit) {
    if (fit.slope == 0.0) throw Error(ErrorKind::NonInvertible, "interpolate_delta: zero slope");
    const double d = (lambda_target - fit.intercept) / fit.slope;
    if (d < 0.0) throw Error(ErrorKind::OutOfRange, "interpolate_delta: negative delta_q");
    return d;
}

// ---------------------------------------------------------------------------
// Full measurement pipeline on one simulated trace.

struct ProcessedTrace {
    PopulationTrace raw;
    PopulationTrace leak;
    PopulationTrace norm;
    PopulationTrace fixed;
    DecayFit fit;
    std::size_t clipped{0};
};

/// leak renormalisation, zero-time normalisation, damped-cosine fit, equilibrium correction.
inline ProcessedTrace process_trace(const PopulationTrace& raw, double q) {
    ProcessedTrace out;
    out.raw = raw;
    out.leak = leak_renormalize(raw);
    auto norm = zero_time_normalize(out.leak);
    out.norm = norm.trace;
    out.clipped = norm.clipped;
    out.fit = fit_damped_oscillation(out.norm);
    out.fixed = equilibrium_correct(out.norm, out.fit.alpha, q);
    return out;
}

} // namespace dimerlab
