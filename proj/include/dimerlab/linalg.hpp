// linalg.hpp: fixed-size complex matrix aliases, Pauli matrices and checks

#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace dimerlab {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using Mat16 = Eigen::Matrix<cplx, 16, 16>;
using Vec16 = Eigen::Matrix<cplx, 16, 1>;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Site-basis 2x2 state {|s1>, |s2>}.
using DensityMatrix2 = Mat2;
/// Two-qubit state over {|00>, |01>, |10>, |11>}; qubit 0 is the left label.
using TwoQubitDensity = Mat4;

namespace pauli {

inline Mat2 identity() { return Mat2::Identity(); }

inline Mat2 x() {
    Mat2 m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Mat2 y() {
    Mat2 m;
    m << 0.0, -kI, kI, 0.0;
    return m;
}

inline Mat2 z() {
    Mat2 m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

} // namespace pauli

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
double hermiticity_error(const Eigen::MatrixBase<Derived>& m) {
    return max_abs(m - m.adjoint());
}

/// Smallest eigenvalue of the Hermitian part.
template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
    using Plain = typename Derived::PlainObject;
    const Plain h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Plain> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Hermitian within `herm_tol`, unit trace within `trace_tol`, eigenvalues >= -`eig_tol`.
template <typename Derived>
bool is_density_matrix(const Eigen::MatrixBase<Derived>& m, double herm_tol = 1e-10,
                       double trace_tol = 1e-10, double eig_tol = 1e-9) {
    if (!m.allFinite()) return false;
    if (hermiticity_error(m) > herm_tol) return false;
    if (std::abs(m.trace() - cplx(1.0)) > trace_tol) return false;
    return min_eigenvalue(m) >= -eig_tol;
}

/// (A + A^dagger)/2
template <typename M>
M hermitize(const M& m) {
    return 0.5 * (m + m.adjoint());
}

inline Mat4 kron(const Mat2& a, const Mat2& b) {
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

/// Bloch vector (<X>, <Y>, <Z>) of a single-qubit state.
inline Eigen::Vector3d bloch_vector(const Mat2& rho) {
    return {(rho * pauli::x()).trace().real(), (rho * pauli::y()).trace().real(),
            (rho * pauli::z()).trace().real()};
}

inline Mat2 from_bloch(const Eigen::Vector3d& r) {
    return 0.5 * (pauli::identity() + r.x() * pauli::x() + r.y() * pauli::y() + r.z() * pauli::z());
}

} // namespace dimerlab
