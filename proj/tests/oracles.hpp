// Independent reference computations used by the tests. None of these call
// into the library's own propagators, channels or fitting code.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using MatX = Eigen::MatrixXcd;

/// exp(A) by scaling and squaring with a 30-term Taylor series.
inline MatX expm(const MatX& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const MatX b = a / std::pow(2.0, s);
    MatX term = MatX::Identity(a.rows(), a.cols());
    MatX sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * b / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

inline MatX sx() {
    MatX m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline MatX sy() {
    MatX m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
inline MatX sz() {
    MatX m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline MatX hamiltonian(double eps, double j) { return eps * sz() + j * sx(); }

/// exp(-i H t) through the series oracle.
inline MatX evolve(double eps, double j, double t) { return expm(cplx(0, -t) * hamiltonian(eps, j)); }

/// |<s1|U(t)|s1>|^2.
inline double p1_exact(double eps, double j, double t) { return std::norm(evolve(eps, j, t)(0, 0)); }

/// <s1| exp(-H/kT) |s1> / Tr exp(-H/kT) via eigendecomposition.
inline double gibbs_s1(double eps, double j, double kT) {
    Eigen::SelfAdjointEigenSolver<MatX> es(hamiltonian(eps, j));
    MatX w = MatX::Zero(2, 2);
    for (int k = 0; k < 2; ++k) w(k, k) = std::exp(-es.eigenvalues()(k) / kT);
    const MatX rho = es.eigenvectors() * w * es.eigenvectors().adjoint();
    return rho(0, 0).real() / rho.trace().real();
}

/// Single-qubit depolarizing channel from its explicit Kraus operators.
inline MatX depolarize_kraus(const MatX& rho, double p) {
    const double a = std::sqrt(1.0 - p), b = std::sqrt(p / 3.0);
    const MatX k[4] = {a * MatX::Identity(2, 2), b * sx(), b * sy(), b * sz()};
    MatX out = MatX::Zero(2, 2);
    for (const auto& op : k) out += op * rho * op.adjoint();
    return out;
}

/// Bath correlation function from the standard Drude-Lorentz density
/// J(w) = 2 lambda gamma w / (w^2 + gamma^2):
///   C(t) = (1/pi) int_0^inf J(w) [coth(w/2kT) cos wt - i sin wt] dw,  t > 0.
/// Simpson on [0, W]; beyond W the integrand is 2 lambda gamma e^{-iwt}/w, whose
/// integral follows from the large-argument expansions of Ci and Si.
inline cplx correlation_quadrature(double lambda, double gamma, double kT, double t, double w_max = 4000.0,
                                   int n = 800000) {
    const double h = w_max / n;
    auto integrand = [&](double w) -> cplx {
        if (w == 0.0) return {4.0 * lambda * kT / gamma, 0.0};
        const double j = 2.0 * lambda * gamma * w / (w * w + gamma * gamma);
        const double coth = 1.0 / std::tanh(w / (2.0 * kT));
        return {j * coth * std::cos(w * t), -j * std::sin(w * t)};
    };
    cplx sum = integrand(0.0) + integrand(w_max);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    cplx body = sum * h / 3.0;
    const double x = w_max * t;
    // int_W^inf cos(wt)/w dw = -Ci(x), int_W^inf sin(wt)/w dw = pi/2 - Si(x)
    const double ci = std::sin(x) / x - std::cos(x) / (x * x) - 2.0 * std::sin(x) / (x * x * x);
    const double si_tail = std::cos(x) / x + std::sin(x) / (x * x) - 2.0 * std::cos(x) / (x * x * x);
    const cplx tail = 2.0 * lambda * gamma * cplx(-ci, -si_tail);
    return (body + tail) / M_PI;
}

/// Random density matrix A A^dag / Tr.
inline MatX random_density(std::mt19937_64& rng, int dim = 2) {
    std::normal_distribution<double> g;
    MatX a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) a(i, k) = cplx(g(rng), g(rng));
    MatX r = a * a.adjoint();
    return r / r.trace();
}

inline MatX random_hermitian(std::mt19937_64& rng, int dim = 2) {
    std::normal_distribution<double> g;
    MatX a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) a(i, k) = cplx(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

/// Ordinary least squares via the normal equations on [1, x].
inline std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
    Eigen::MatrixXd a(x.size(), 2);
    Eigen::VectorXd b(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        a(static_cast<Eigen::Index>(i), 1) = x[i];
        b[static_cast<Eigen::Index>(i)] = y[i];
    }
    const Eigen::Vector2d c = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    return {c[1], c[0]}; // slope, intercept
}

} // namespace oracle
