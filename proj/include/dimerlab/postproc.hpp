// postproc.hpp: measured-population post-processing and coherence inference
//
// Pipeline order: leak_renormalize -> zero_time_normalize -> fit -> equilibrium_correct.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dimerlab/circuit.hpp"
#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"
#include "dimerlab/optimize.hpp"
#include "dimerlab/qdyn.hpp"

namespace dimerlab {

/// p1(t) ~ baseline + amplitude exp(-alpha t) cos(omega t + phase)
struct DecayFit {
    double alpha{0.0};
    double omega{0.0};
    double amplitude{0.0};
    double phase{0.0};
    double baseline{0.5};
    double residual_rms{0.0};
    int restarts{0};

    double operator()(double t) const {
        return baseline + amplitude * std::exp(-alpha * t) * std::cos(omega * t + phase);
    }
};

/// p1 <- p1 / (p1 + p2), p2 <- p2 / (p1 + p2).
inline PopulationTrace leak_renormalize(const PopulationTrace& in) {
    PopulationTrace out = in;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double w = in.p1[i] + in.p2[i];
        if (!(w >= 1e-9))
            throw PointError(ErrorKind::DegenerateState, i,
                             "leak_renormalize: subspace weight below 1e-9 at index " + std::to_string(i));
        out.p1[i] = in.p1[i] / w;
        out.p2[i] = 1.0 - out.p1[i];
    }
    return out;
}

struct NormalizedTrace {
    PopulationTrace trace;
    std::size_t clipped{0}; // points clipped back into [0, 1]
};

/// Divides p1 by its first value so the first point is exactly 1; p2 = 1 - p1.
inline NormalizedTrace zero_time_normalize(const PopulationTrace& in) {
    if (in.size() == 0) throw Error(ErrorKind::Argument, "zero_time_normalize: empty trace");
    const double first = in.p1.front();
    if (!(first >= 1e-6)) throw Error(ErrorKind::DegenerateState, "zero_time_normalize: p1 at first point below 1e-6");
    NormalizedTrace out{in, 0};
    for (std::size_t i = 0; i < in.size(); ++i) {
        double v = i == 0 ? 1.0 : in.p1[i] / first;
        if (v > 1.0 || v < 0.0) {
            v = std::clamp(v, 0.0, 1.0);
            ++out.clipped;
        }
        out.trace.p1[i] = v;
        out.trace.p2[i] = 1.0 - v;
    }
    return out;
}

/// p1_fixed(t) = exp(-alpha t) p1(t) + (1 - exp(-alpha t)) q.
inline PopulationTrace equilibrium_correct(const PopulationTrace& in, double alpha, double q) {
    if (!(alpha >= 0.0)) throw Error(ErrorKind::Domain, "equilibrium_correct: alpha must be >= 0");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorKind::Domain, "equilibrium_correct: q must lie in [0,1]");
    PopulationTrace out = in;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double decay = std::exp(-alpha * in.times[i]);
        out.p1[i] = decay * in.p1[i] + (1.0 - decay) * q;
        out.p2[i] = 1.0 - out.p1[i];
    }
    return out;
}

namespace detail {

/// Frequency with the largest discrete-time Fourier amplitude of y(t).
inline double spectral_peak(const std::vector<double>& t, const std::vector<double>& y) {
    const double span = t.back() - t.front();
    double min_dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < t.size(); ++i) min_dt = std::min(min_dt, t[i] - t[i - 1]);
    const double w_max = kPi / min_dt;
    const double dw = kPi / (8.0 * span);
    double best_w = 0.0, best_p = -1.0;
    for (double w = dw; w <= w_max; w += dw) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            re += y[i] * std::cos(w * t[i]);
            im += y[i] * std::sin(w * t[i]);
        }
        const double p = re * re + im * im;
        if (p > best_p) {
            best_p = p;
            best_w = w;
        }
    }
    return best_w;
}

/// Decay rate from a straight-line fit of log|y| over local extrema (or all points).
inline double envelope_decay(const std::vector<double>& t, const std::vector<double>& y) {
    std::vector<double> xs, ls;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double a = std::abs(y[i]);
        if (a > 1e-8 && a >= std::abs(y[i - 1]) && a >= std::abs(y[i + 1])) {
            xs.push_back(t[i]);
            ls.push_back(std::log(a));
        }
    }
    if (std::abs(y.front()) > 1e-8) {
        xs.insert(xs.begin(), t.front());
        ls.insert(ls.begin(), std::log(std::abs(y.front())));
    }
    if (xs.size() < 2) {
        xs.clear();
        ls.clear();
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (std::abs(y[i]) > 1e-8) {
                xs.push_back(t[i]);
                ls.push_back(std::log(std::abs(y[i])));
            }
        }
    }
    if (xs.size() < 2) return 0.0;
    double mx = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        ml += ls[i];
    }
    mx /= static_cast<double>(xs.size());
    ml /= static_cast<double>(xs.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ls[i] - ml);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0.0 ? std::max(0.0, -sxy / sxx) : 0.0;
}

inline double wrap_phase(double p) {
    p = std::fmod(p + kPi, 2.0 * kPi);
    if (p < 0.0) p += 2.0 * kPi;
    return p - kPi;
}

} // namespace detail

/// Nonlinear least-squares fit of the damped-cosine model to p1(t).
inline DecayFit fit_damped_oscillation(const PopulationTrace& trace) {
    const std::size_t n = trace.size();
    if (n < 8) throw Error(ErrorKind::FitFailure, "fit_damped_oscillation: need at least 8 points");
    const auto& t = trace.times;
    const auto& y = trace.p1;

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    if (var / static_cast<double>(n) < 1e-14)
        throw Error(ErrorKind::FitFailure, "fit_damped_oscillation: constant trace, alpha and omega unidentifiable");

    const std::size_t tail = std::max<std::size_t>(1, n / 5);
    double baseline0 = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) baseline0 += y[i];
    baseline0 /= static_cast<double>(tail);
    baseline0 = std::clamp(baseline0, 0.0, 1.0);

    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = y[i] - baseline0;
    const double omega0 = detail::spectral_peak(t, dev);
    const double alpha0 = detail::envelope_decay(t, dev);
    const double amp0 = dev.front() != 0.0 ? dev.front() : std::sqrt(var / static_cast<double>(n));

    // x = (baseline, amplitude, alpha, omega, phase)
    const double big = 1e3;
    optimize::Bounds bounds{optimize::Vector(5), optimize::Vector(5)};
    bounds.lower << 0.0, -big, 0.0, 0.0, -big;
    bounds.upper << 1.0, big, big, big, big;

    auto residual = [&](const optimize::Vector& x) {
        optimize::Vector r(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            r[static_cast<Eigen::Index>(i)] = x[0] + x[1] * std::exp(-x[2] * t[i]) * std::cos(x[3] * t[i] + x[4]) - y[i];
        return r;
    };

    optimize::LmResult best;
    best.cost = std::numeric_limits<double>::infinity();
    int restarts = 0;
    for (double wf : {1.0, 0.5, 2.0, 0.0}) {
        for (double af : {1.0, 0.3, 3.0}) {
            optimize::Vector x0(5);
            const double a0 = alpha0 > 0.0 ? alpha0 * af : 0.1 * af;
            x0 << baseline0, amp0, a0, omega0 * wf, 0.0;
            const auto r = optimize::levenberg_marquardt(residual, x0, bounds);
            ++restarts;
            if (std::isfinite(r.cost) && r.cost < best.cost) best = r;
        }
    }
    if (!std::isfinite(best.cost) || best.x.size() != 5)
        throw Error(ErrorKind::FitFailure, "fit_damped_oscillation: optimisation did not converge");

    DecayFit fit;
    fit.baseline = best.x[0];
    fit.amplitude = best.x[1];
    fit.alpha = best.x[2];
    fit.omega = best.x[3];
    fit.phase = best.x[4];
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.phase += kPi;
    }
    fit.phase = detail::wrap_phase(fit.phase);
    fit.residual_rms = std::sqrt(2.0 * best.cost / static_cast<double>(n));
    fit.restarts = restarts;
    if (!std::isfinite(fit.alpha) || !std::isfinite(fit.omega))
        throw Error(ErrorKind::FitFailure, "fit_damped_oscillation: non-finite parameters");
    return fit;
}

enum class CoherenceModel {
    SelfConsistent,    // eigen-populations chosen so that the site diagonal is reproduced
    DiagonalTransform, // eigen-populations from U^dag diag(p1, p2) U
};

struct CoherenceReconstruction {
    std::vector<Mat2> states;
    std::vector<bool> repaired; // positivity repair or unmatched diagonal at this point
};

namespace detail {

inline Mat2 eigen_state(double a, cplx coherence) {
    Mat2 e;
    e << a, std::conj(coherence), coherence, 1.0 - a;
    return e;
}

} // namespace detail

/// Infers site-basis density matrices from populations: in the eigenbasis the
/// coherence is sqrt(p1E p2E) exp(i omega t) exp(-alpha t), placed in rho_E(1,0).
inline CoherenceReconstruction reconstruct_offdiagonals(const PopulationTrace& trace, const DecayFit& fit,
                                                        const SystemParams& params,
                                                        CoherenceModel model = CoherenceModel::SelfConsistent) {
    const Mat2 u = eigenbasis(build_hamiltonian(params));
    CoherenceReconstruction out;
    double previous = -1.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double p1 = trace.p1[i], p2 = trace.p2[i];
        if (std::abs(p1 + p2 - 1.0) > 1e-6)
            throw PointError(ErrorKind::Argument, i, "reconstruct_offdiagonals: trace is not normalised");
        const double t = trace.times[i];
        const cplx phase = std::exp(cplx(-fit.alpha * t, fit.omega * t));
        const Mat2 diag_e = u.adjoint() * Eigen::Vector2cd(p1, p2).asDiagonal() * u;
        const double a_diag = std::clamp(diag_e(0, 0).real(), 0.0, 1.0);

        auto site_state = [&](double a) {
            return Mat2(u * detail::eigen_state(a, std::sqrt(std::max(0.0, a * (1.0 - a))) * phase) * u.adjoint());
        };

        double a = a_diag;
        bool repaired = false;
        if (model == CoherenceModel::SelfConsistent) {
            // Solve site_state(a)(0,0) = p1 for a in [0, 1]; bracket on a fine grid,
            // bisect each sign change, keep the root closest to the previous point.
            auto f = [&](double x) { return site_state(x)(0, 0).real() - p1; };
            constexpr int kGrid = 400;
            std::vector<double> roots;
            double best_x = a_diag, best_f = std::abs(f(a_diag));
            double x_prev = 0.0, f_prev = f(0.0);
            if (f_prev == 0.0) roots.push_back(0.0);
            for (int g = 1; g <= kGrid; ++g) {
                const double x = static_cast<double>(g) / kGrid;
                const double fx = f(x);
                if (std::abs(fx) < best_f) {
                    best_f = std::abs(fx);
                    best_x = x;
                }
                if (fx == 0.0) {
                    roots.push_back(x);
                } else if (f_prev * fx < 0.0) {
                    double lo = x_prev, hi = x, flo = f_prev;
                    for (int it = 0; it < 80; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const double fm = f(mid);
                        if ((flo < 0.0) == (fm < 0.0)) {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    roots.push_back(0.5 * (lo + hi));
                }
                x_prev = x;
                f_prev = fx;
            }
            const double ref = previous >= 0.0 ? previous : a_diag;
            if (roots.empty()) {
                a = best_x;
                repaired = best_f > 1e-6;
            } else {
                a = *std::min_element(roots.begin(), roots.end(),
                                      [&](double l, double r) { return std::abs(l - ref) < std::abs(r - ref); });
            }
        }
        previous = a;

        Mat2 rho = hermitize(site_state(a));
        if (min_eigenvalue(rho) < -1e-6) {
            Eigen::SelfAdjointEigenSolver<Mat2> es(rho);
            const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
            rho = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
            rho /= rho.trace().real();
            repaired = true;
        }
        out.states.push_back(rho);
        out.repaired.push_back(repaired);
    }
    return out;
}

} // namespace dimerlab
