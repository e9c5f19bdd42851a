// ttm.hpp: transfer tensor method on vectorised 2x2 density matrices
//
// Superoperators act on column-stacked density matrices (see vectorize()).
// Given maps E_k with rho(t_k) = E_k rho(t_0), the transfer tensors satisfy
// E_n = sum_{m=1..n} T_m E_{n-m} with E_0 = 1, and a truncated memory of n_k
// tensors propagates beyond the training window.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"
#include "dimerlab/qdyn.hpp"

namespace dimerlab {

/// The canonical initial states (I+Z)/2, (I-Z)/2, (I+X)/2, (I+Y)/2.
inline std::array<Mat2, 4> canonical_initial_states() {
    const Mat2 id = Mat2::Identity();
    return {0.5 * (id + pauli::z()), 0.5 * (id - pauli::z()), 0.5 * (id + pauli::x()),
            0.5 * (id + pauli::y())};
}

struct TrajectorySet {
    double dt{0.0};
    double t0{0.0};
    std::vector<std::vector<Mat2>> trajectories; // one per initial state, >= 4
    bool resampled{false};                       // set when built from a non-uniform grid

    std::size_t length() const { return trajectories.empty() ? 0 : trajectories.front().size(); }

    void validate() const {
        if (trajectories.size() < 4)
            throw Error(ErrorKind::Argument, "TrajectorySet: need at least four trajectories");
        const std::size_t len = trajectories.front().size();
        if (len < 2) throw Error(ErrorKind::Argument, "TrajectorySet: trajectories need >= 2 points");
        for (const auto& tr : trajectories) {
            if (tr.size() != len)
                throw Error(ErrorKind::Argument, "TrajectorySet: trajectories differ in length");
            for (const auto& rho : tr) {
                if (!is_density_matrix(rho, 1e-6, 1e-6, 1e-6))
                    throw Error(ErrorKind::Argument, "TrajectorySet: element is not a density matrix");
            }
        }
        if (!(dt > 0.0)) throw Error(ErrorKind::Argument, "TrajectorySet: dt must be positive");
    }

    /// Builds a set from samples on `times`, resampling onto a uniform grid
    /// with the same endpoints and count when the spacing is not uniform.
    static TrajectorySet from_samples(const std::vector<double>& times,
                                      const std::vector<std::vector<Mat2>>& trajs) {
        if (times.size() < 2) throw Error(ErrorKind::Argument, "TrajectorySet: need >= 2 times");
        TrajectorySet set;
        set.t0 = times.front();
        const std::size_t n = times.size();
        set.dt = (times.back() - times.front()) / static_cast<double>(n - 1);
        bool uniform = true;
        for (std::size_t i = 1; i < n; ++i) {
            if (!(times[i] > times[i - 1]))
                throw Error(ErrorKind::Argument, "TrajectorySet: times must be increasing");
            if (std::abs((times[i] - times[i - 1]) - set.dt) > 1e-9 * std::max(1.0, set.dt)) uniform = false;
        }
        if (uniform) {
            set.trajectories = trajs;
            return set;
        }
        set.resampled = true;
        for (const auto& tr : trajs) {
            if (tr.size() != n) throw Error(ErrorKind::Argument, "TrajectorySet: length mismatch");
            std::vector<Mat2> out;
            std::size_t j = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = set.t0 + set.dt * static_cast<double>(i);
                while (j + 2 < n && times[j + 1] < t) ++j;
                const double w = std::clamp((t - times[j]) / (times[j + 1] - times[j]), 0.0, 1.0);
                out.push_back((1.0 - w) * tr[j] + w * tr[j + 1]);
            }
            set.trajectories.push_back(std::move(out));
        }
        return set;
    }
};

struct DynamicalMapSet {
    double dt{0.0};
    std::vector<Mat4> maps; // E_1 .. E_{n_k}
};

struct TransferTensorSet {
    double dt{0.0};
    std::vector<Mat4> tensors; // T_1 .. T_{n_k}

    std::size_t memory() const { return tensors.size(); }
};

namespace detail {

inline Eigen::Matrix<cplx, 4, Eigen::Dynamic> stack_states(const TrajectorySet& set, std::size_t k) {
    Eigen::Matrix<cplx, 4, Eigen::Dynamic> r(4, static_cast<Eigen::Index>(set.trajectories.size()));
    for (std::size_t i = 0; i < set.trajectories.size(); ++i) r.col(static_cast<Eigen::Index>(i)) = vectorize(set.trajectories[i][k]);
    return r;
}

} // namespace detail

/// E_k = R(t_k) R(t_0)^{-1}; least squares when more than four trajectories are given.
inline DynamicalMapSet build_dynamical_maps(const TrajectorySet& set) {
    set.validate();
    const auto r0 = detail::stack_states(set, 0);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(r0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(cond <= 1e8))
        throw Error(ErrorKind::IllConditioned, "build_dynamical_maps: initial-state matrix is ill-conditioned");

    Eigen::MatrixXcd r0_inv;
    if (set.trajectories.size() == 4) {
        r0_inv = Mat4(r0).inverse();
    } else {
        r0_inv = svd.matrixV() * sv.cwiseInverse().cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
    }

    DynamicalMapSet out;
    out.dt = set.dt;
    for (std::size_t k = 1; k < set.length(); ++k) out.maps.push_back(Mat4(detail::stack_states(set, k) * r0_inv));
    return out;
}

/// T_1 = E_1, T_n = E_n - sum_{m=1}^{n-1} T_{n-m} E_m.
inline TransferTensorSet transfer_tensors(const DynamicalMapSet& maps) {
    if (maps.maps.empty()) throw Error(ErrorKind::Argument, "transfer_tensors: no maps");
    TransferTensorSet out;
    out.dt = maps.dt;
    const auto& e = maps.maps;
    for (std::size_t n = 1; n <= e.size(); ++n) {
        Mat4 t = e[n - 1];
        for (std::size_t m = 1; m < n; ++m) t -= out.tensors[n - m - 1] * e[m - 1];
        out.tensors.push_back(t);
    }
    return out;
}

/// rho(t_n) = sum_{k=0}^{n-1} T_{n-k} rho(t_k), iterated from rho(t_0) = rho0.
inline Mat2 reconstruct(const TransferTensorSet& tt, const Mat2& rho0, std::size_t n) {
    if (n < 1 || n > tt.memory())
        throw Error(ErrorKind::Index, "reconstruct: index " + std::to_string(n) + " outside [1, " +
                                          std::to_string(tt.memory()) + "]");
    std::vector<Vec4> hist{vectorize(rho0)};
    for (std::size_t j = 1; j <= n; ++j) {
        Vec4 next = Vec4::Zero();
        for (std::size_t k = 0; k < j; ++k) next += tt.tensors[j - k - 1] * hist[k];
        hist.push_back(next);
    }
    return devectorize(hist.back());
}

struct Extension {
    std::vector<Mat2> states; // history followed by the corrected extension
    std::vector<Mat2> raw;    // extension before re-Hermitisation and trace renormalisation
};

/// rho(t_n) = sum_{k=1}^{n_k} T_k rho(t_{n-k}) for n = n_k+1 .. n_target.
inline Extension extend_dynamics(const TransferTensorSet& tt, const std::vector<Mat2>& history,
                                 std::size_t n_target) {
    const std::size_t nk = tt.memory();
    if (history.size() != nk + 1)
        throw Error(ErrorKind::Argument, "extend_dynamics: history must hold n_k + 1 states");
    if (n_target < nk) throw Error(ErrorKind::Index, "extend_dynamics: target inside the training window");

    Extension out;
    out.states = history;
    std::vector<Vec4> vecs;
    vecs.reserve(n_target + 1);
    for (const auto& rho : history) vecs.push_back(vectorize(rho));
    for (std::size_t n = nk + 1; n <= n_target; ++n) {
        Vec4 next = Vec4::Zero();
        for (std::size_t k = 1; k <= nk; ++k) next += tt.tensors[k - 1] * vecs[n - k];
        const Mat2 raw = devectorize(next);
        out.raw.push_back(raw);
        const double tr = raw.trace().real();
        if (!(tr >= 1e-6))
            throw Error(ErrorKind::Divergence, "extend_dynamics: trace collapsed at step " + std::to_string(n));
        const Mat2 fixed = hermitize(raw) / tr;
        out.states.push_back(fixed);
        vecs.push_back(vectorize(fixed));
    }
    return out;
}

/// Max deviation of Hermiticity / trace preservation over the Pauli basis.
struct MapCheck {
    double hermiticity{0.0};
    double trace{0.0};
};

inline MapCheck check_map(const Mat4& map) {
    MapCheck c;
    for (const Mat2& p : {Mat2(Mat2::Identity()), pauli::x(), pauli::y(), pauli::z()}) {
        const Mat2 out = devectorize(Vec4(map * vectorize(p)));
        c.hermiticity = std::max(c.hermiticity, hermiticity_error(out));
        c.trace = std::max(c.trace, std::abs(out.trace() - p.trace()));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Text serialisation: header "dt <dt> n_k <n>", then per index a line "k <k>"
// followed by four lines of four "re,im" pairs (row-major).

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_superops(std::ostream& os, double dt, const std::vector<Mat4>& mats) {
    os << "dt " << detail::fmt17(dt) << " n_k " << mats.size() << '\n';
    for (std::size_t k = 0; k < mats.size(); ++k) {
        os << "k " << (k + 1) << '\n';
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                if (j) os << ' ';
                os << detail::fmt17(mats[k](i, j).real()) << ',' << detail::fmt17(mats[k](i, j).imag());
            }
            os << '\n';
        }
    }
}

inline std::vector<Mat4> read_superops(std::istream& is, double& dt) {
    std::string tag;
    std::size_t nk = 0;
    std::string dt_text;
    if (!(is >> tag >> dt_text) || tag != "dt") throw Error(ErrorKind::Parse, "superops: missing dt header");
    if (!(is >> tag >> nk) || tag != "n_k") throw Error(ErrorKind::Parse, "superops: missing n_k header");
    dt = std::strtod(dt_text.c_str(), nullptr);
    std::vector<Mat4> out;
    for (std::size_t k = 1; k <= nk; ++k) {
        std::size_t idx = 0;
        if (!(is >> tag >> idx) || tag != "k" || idx != k)
            throw Error(ErrorKind::Parse, "superops: bad block header for k=" + std::to_string(k));
        Mat4 m;
        for (int e = 0; e < 16; ++e) {
            std::string pair;
            if (!(is >> pair)) throw Error(ErrorKind::Parse, "superops: truncated block k=" + std::to_string(k));
            const auto comma = pair.find(',');
            if (comma == std::string::npos) throw Error(ErrorKind::Parse, "superops: expected re,im pair");
            char* end = nullptr;
            const double re = std::strtod(pair.c_str(), &end);
            const double im = std::strtod(pair.c_str() + comma + 1, &end);
            m(e / 4, e % 4) = cplx(re, im);
        }
        out.push_back(m);
    }
    return out;
}

} // namespace dimerlab
