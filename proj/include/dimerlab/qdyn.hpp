// qdyn.hpp: closed-form quantum mechanics of the biased two-site dimer

#pragma once

#include <cmath>
#include <span>
#include <string>

#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"

namespace dimerlab {

struct SystemParams {
    double epsilon{1.5};    // bias: half the site-energy gap (hbar = 1)
    double j_coupling{1.0}; // tunneling

    /// Rabi frequency sqrt(eps^2 + J^2).
    double omega() const { return std::hypot(epsilon, j_coupling); }
};

enum class EnergyModel { SiteEnergies, GibbsOfH };

inline std::string to_string(EnergyModel m) {
    return m == EnergyModel::SiteEnergies ? "site" : "gibbs";
}

/// H = eps sigma_Z + J sigma_X in the site basis.
inline Mat2 build_hamiltonian(const SystemParams& p) {
    Mat2 h;
    h << p.epsilon, p.j_coupling, p.j_coupling, -p.epsilon;
    return h;
}

/// e^{-iHt} for a traceless Hermitian 2x2 H: cos(Wt) I - i sin(Wt) H / W.
inline Mat2 propagator(const Mat2& h, double t) {
    const double omega = std::sqrt(std::norm(h(0, 0)) + std::norm(h(0, 1)));
    if (omega == 0.0) return Mat2::Identity();
    return std::cos(omega * t) * Mat2::Identity() - kI * (std::sin(omega * t) / omega) * h;
}

/// Closed-system population of |s1> starting from |s1>.
inline double rabi_population(const SystemParams& p, double t) {
    const double omega = p.omega();
    if (omega == 0.0) return 1.0;
    const double s = std::sin(omega * t);
    return 1.0 - (p.j_coupling * p.j_coupling) / (omega * omega) * s * s;
}

/// Unitary U whose columns are eigenvectors of H, eigenvalues descending.
/// Each column's first nonzero component is real and positive.
inline Mat2 eigenbasis(const Mat2& h) {
    const double a = h(0, 0).real();
    const double d = h(1, 1).real();
    const cplx b = h(0, 1);
    const double half_gap = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
    if (half_gap == 0.0) return Mat2::Identity();

    const double mean = 0.5 * (a + d);
    const double lambdas[2] = {mean + half_gap, mean - half_gap};
    Mat2 u;
    for (int col = 0; col < 2; ++col) {
        // (H - lambda) v = 0; pick the better-conditioned row of the 2x2 system.
        const double l = lambdas[col];
        Eigen::Vector2cd v;
        if (std::abs(a - l) >= std::abs(d - l)) {
            v << -b, cplx(a - l);
        } else {
            v << cplx(d - l), -std::conj(b);
        }
        if (std::abs(v(0)) < 1e-300 && std::abs(v(1)) < 1e-300) {
            v << (col == 0 ? 1.0 : 0.0), (col == 0 ? 0.0 : 1.0);
        }
        v.normalize();
        const int lead = std::abs(v(0)) > 1e-14 ? 0 : 1;
        v *= std::conj(v(lead)) / std::abs(v(lead));
        u.col(col) = v;
    }
    return u;
}

/// Thermal population of |s1>. SiteEnergies uses the bare site energies +-eps;
/// GibbsOfH takes <s1| exp(-H/kT) |s1> / Tr exp(-H/kT).
inline double gibbs_population(const SystemParams& p, double kT,
                               EnergyModel model = EnergyModel::SiteEnergies) {
    if (!(kT > 0.0)) throw Error(ErrorKind::Domain, "gibbs_population: kT must be positive");
    if (model == EnergyModel::SiteEnergies) {
        return 1.0 / (1.0 + std::exp(2.0 * p.epsilon / kT));
    }
    const double omega = p.omega();
    if (omega == 0.0) return 0.5;
    // exp(-H/kT) = cosh(W/kT) I - sinh(W/kT) H/W, so the ratio reduces to
    // (1 - tanh(W/kT) eps/W) / 2.
    return 0.5 * (1.0 - std::tanh(omega / kT) * p.epsilon / omega);
}

/// Column-stacking vectorisation: (rho00, rho10, rho01, rho11).
inline Vec4 vectorize(const Mat2& rho) {
    return Vec4(rho(0, 0), rho(1, 0), rho(0, 1), rho(1, 1));
}

inline Mat2 devectorize(std::span<const cplx> v) {
    if (v.size() != 4) {
        throw Error(ErrorKind::Shape,
                    "devectorize: expected 4 entries, got " + std::to_string(v.size()));
    }
    Mat2 m;
    m << v[0], v[2], v[1], v[3];
    return m;
}

inline Mat2 devectorize(const Vec4& v) {
    return devectorize(std::span<const cplx>(v.data(), 4));
}

/// Superoperator of rho -> U rho U^dagger in the column-stacking convention.
inline Mat4 conjugation_superop(const Mat2& u) {
    // vec(U X U^dag) = (conj(U) kron U) vec(X)
    return kron(u.conjugate(), u);
}

} // namespace dimerlab
