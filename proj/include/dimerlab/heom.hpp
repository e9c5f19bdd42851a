// heom.hpp: hierarchical equations of motion for the dimer with Drude-Lorentz baths
//
// Scaled Tanimura hierarchy with one bath per site (coupling |j><j|) or an
// optional single shared bath coupled through sigma_Z. Each bath correlation
// function is expanded as C(t) = sum_k c_k exp(-nu_k t) (Drude pole plus K
// Matsubara terms). All coupling operators are diagonal in the site basis, so
// every hierarchy coupling is an element-wise scaling of a 2x2 auxiliary matrix.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dimerlab/circuit.hpp"
#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"
#include "dimerlab/ode.hpp"
#include "dimerlab/qdyn.hpp"

namespace dimerlab {

struct BathParams {
    double lambda{0.5}; // reorganization energy
    double gamma{11.0}; // cutoff frequency (inverse bath relaxation time)
    double kT{1.0};

    void validate() const {
        if (!(lambda >= 0.0)) throw Error(ErrorKind::Domain, "BathParams.lambda must be >= 0");
        if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "BathParams.gamma must be > 0");
        if (!(kT > 0.0)) throw Error(ErrorKind::Domain, "BathParams.kT must be > 0");
    }
};

struct BathExponent {
    cplx c;    // amplitude
    double nu; // decay rate
};

using BathExponents = std::vector<BathExponent>;

/// Drude-Lorentz spectral density (lambda/2) gamma omega / (gamma^2 + omega^2).
inline double spectral_density(double omega, const BathParams& bath) {
    return 0.5 * bath.lambda * bath.gamma * omega / (bath.gamma * bath.gamma + omega * omega);
}

/// Drude pole plus K Matsubara terms of the bath correlation function.
inline BathExponents bath_exponents(const BathParams& bath, int K) {
    bath.validate();
    if (K < 0) throw Error(ErrorKind::Domain, "bath_exponents: K must be >= 0");
    const double lg = bath.lambda * bath.gamma;
    const double half_beta_gamma = bath.gamma / (2.0 * bath.kT);
    BathExponents out;
    out.push_back({lg * cplx(1.0 / std::tan(half_beta_gamma), -1.0), bath.gamma});
    for (int k = 1; k <= K; ++k) {
        const double nu = 2.0 * kPi * bath.kT * k;
        if (std::abs(nu - bath.gamma) < 1e-9)
            throw Error(ErrorKind::Domain,
                        "bath_exponents: gamma coincides with Matsubara frequency " + std::to_string(k));
        out.push_back({4.0 * lg * bath.kT * nu / (nu * nu - bath.gamma * bath.gamma), nu});
    }
    return out;
}

/// C(t) implied by a truncated exponent list.
inline cplx correlation_function(const BathExponents& ex, double t) {
    cplx sum = 0.0;
    for (const auto& e : ex) sum += e.c * std::exp(-e.nu * t);
    return sum;
}

/// sum_{k > K} c_k / nu_k: the Markovian weight of the dropped Matsubara terms.
inline double matsubara_remainder(const BathParams& bath, int K) {
    const double beta_gamma = bath.gamma / bath.kT;
    double full = 2.0 * bath.lambda * bath.kT / bath.gamma - bath.lambda / std::tan(0.5 * beta_gamma);
    const BathExponents ex = bath_exponents(bath, K);
    for (std::size_t k = 1; k < ex.size(); ++k) full -= ex[k].c.real() / ex[k].nu;
    return full;
}

struct HeomConfig {
    int depth{10};    // hierarchy truncation L
    int matsubara{3}; // K
    double rel_tol{1e-8};
    double abs_tol{1e-10};
    bool terminator{true};          // Markovian closure of the deepest tier
    bool matsubara_correction{true}; // Ishizaki-Tanimura correction for terms beyond K
    bool shared_bath{false};        // one bath coupled through sigma_Z instead of one per site

    void validate() const {
        if (depth < 1) throw Error(ErrorKind::Domain, "HeomConfig.depth must be >= 1");
        if (matsubara < 0) throw Error(ErrorKind::Domain, "HeomConfig.matsubara must be >= 0");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw Error(ErrorKind::Domain, "HeomConfig tolerances must be positive");
    }
};

/// Hierarchy layout and the element-wise coupling tables used by the right-hand side.
class Hierarchy {
public:
    using Index = std::vector<int>;

    Hierarchy(const SystemParams& params, const std::vector<BathParams>& baths,
              const std::vector<std::array<double, 2>>& couplings, const HeomConfig& cfg)
        : h_(build_hamiltonian(params)) {
        cfg.validate();
        // Modes: one per (bath, exponent) with non-zero amplitude.
        std::array<double, 4> residual{};
        for (std::size_t b = 0; b < baths.size(); ++b) {
            const auto& v = couplings[b];
            for (const auto& e : bath_exponents(baths[b], cfg.matsubara)) {
                if (std::abs(e.c) == 0.0) continue;
                Mode mode{e.c, e.nu, v};
                mode.k_up = {-kI * (v[0] - v[1]), -kI * (v[1] - v[0])};
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) mode.k_down[2 * i + j] = -kI * (e.c * v[i] - std::conj(e.c) * v[j]);
                modes_.push_back(mode);
            }
            if (cfg.matsubara_correction && baths[b].lambda > 0.0) {
                const double delta = matsubara_remainder(baths[b], cfg.matsubara);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) residual[2 * i + j] -= delta * std::pow(v[i] - v[j], 2);
            }
        }
        enumerate(cfg.depth);

        const std::size_t nm = modes_.size();
        const std::size_t na = indices_.size();
        diag_.assign(na, {});
        up_.assign(na * nm, -1);
        down_.assign(na * nm, -1);
        up_scale_.assign(na * nm, 0.0);
        down_scale_.assign(na * nm, 0.0);

        for (std::size_t a = 0; a < na; ++a) {
            const Index& n = indices_[a];
            double damping = 0.0;
            int tier = 0;
            for (std::size_t m = 0; m < nm; ++m) {
                damping += n[m] * modes_[m].nu;
                tier += n[m];
            }
            std::array<cplx, 4> d{};
            for (int k = 0; k < 4; ++k) d[k] = residual[k] - damping;
            for (std::size_t m = 0; m < nm; ++m) {
                const Mode& mode = modes_[m];
                const double mag = std::abs(mode.c);
                Index up = n;
                ++up[m];
                if (auto it = lookup_.find(up); it != lookup_.end()) {
                    up_[a * nm + m] = it->second;
                    up_scale_[a * nm + m] = std::sqrt((n[m] + 1) * mag);
                } else if (cfg.terminator && tier == cfg.depth) {
                    // rho_{n+e} ~ -i sqrt((n+1)/|c|) (c V rho - c* rho V) / (W + nu)
                    const double w = (n[m] + 1) / (damping + mode.nu);
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            d[2 * i + j] -= w * (mode.v[i] - mode.v[j]) *
                                            (mode.c * mode.v[i] - std::conj(mode.c) * mode.v[j]);
                }
                if (n[m] > 0) {
                    Index dn = n;
                    --dn[m];
                    down_[a * nm + m] = lookup_.at(dn);
                    down_scale_[a * nm + m] = std::sqrt(n[m] / mag);
                }
            }
            diag_[a] = d;
        }
    }

    std::size_t size() const { return indices_.size(); }
    std::size_t mode_count() const { return modes_.size(); }
    const std::vector<Index>& indices() const { return indices_; }

    /// y, dydt: 4 entries (row-major 2x2) per auxiliary operator; entry 0 is rho_S.
    void rhs(const ode::State& y, ode::State& dydt) const {
        const std::size_t nm = modes_.size();
        const cplx h00 = h_(0, 0), h01 = h_(0, 1), h10 = h_(1, 0), h11 = h_(1, 1);
        for (std::size_t a = 0; a < indices_.size(); ++a) {
            const cplx* r = y.data() + 4 * a;
            cplx* out = dydt.data() + 4 * a;
            // -i [H, rho]
            const cplx c00 = h00 * r[0] + h01 * r[2] - (r[0] * h00 + r[1] * h10);
            const cplx c01 = h00 * r[1] + h01 * r[3] - (r[0] * h01 + r[1] * h11);
            const cplx c10 = h10 * r[0] + h11 * r[2] - (r[2] * h00 + r[3] * h10);
            const cplx c11 = h10 * r[1] + h11 * r[3] - (r[2] * h01 + r[3] * h11);
            const auto& d = diag_[a];
            cplx acc[4] = {-kI * c00 + d[0] * r[0], -kI * c01 + d[1] * r[1], -kI * c10 + d[2] * r[2],
                           -kI * c11 + d[3] * r[3]};
            for (std::size_t m = 0; m < nm; ++m) {
                const Mode& mode = modes_[m];
                const int up = up_[a * nm + m];
                if (up >= 0) {
                    // -i sqrt((n+1)|c|) [V, rho_{n+e}]
                    const cplx* u = y.data() + 4 * up;
                    const double s = up_scale_[a * nm + m];
                    acc[1] += s * mode.k_up[0] * u[1];
                    acc[2] += s * mode.k_up[1] * u[2];
                }
                const int dn = down_[a * nm + m];
                if (dn >= 0) {
                    // -i sqrt(n/|c|) (c V rho_{n-e} - c* rho_{n-e} V)
                    const cplx* w = y.data() + 4 * dn;
                    const double s = down_scale_[a * nm + m];
                    for (int k = 0; k < 4; ++k) acc[k] += s * mode.k_down[k] * w[k];
                }
            }
            for (int k = 0; k < 4; ++k) out[k] = acc[k];
        }
    }

private:
    struct Mode {
        cplx c;
        double nu;
        std::array<double, 2> v; // diagonal of the coupling operator
        std::array<cplx, 2> k_up{};   // -i (v_i - v_j) for the (0,1), (1,0) entries
        std::array<cplx, 4> k_down{}; // -i (c v_i - c* v_j), row-major
    };

    void enumerate(int depth) {
        // Breadth-first: tier by tier, lexicographic within a tier.
        const std::size_t nm = modes_.size();
        Index current(nm, 0);
        indices_.push_back(current);
        lookup_[current] = 0;
        std::vector<Index> frontier{current};
        for (int tier = 1; tier <= depth; ++tier) {
            std::vector<Index> next;
            for (const Index& n : frontier) {
                for (std::size_t m = 0; m < nm; ++m) {
                    Index up = n;
                    ++up[m];
                    if (lookup_.contains(up)) continue;
                    lookup_[up] = -1;
                    next.push_back(up);
                }
            }
            std::sort(next.begin(), next.end(), std::greater<>());
            for (const Index& n : next) {
                lookup_[n] = static_cast<int>(indices_.size());
                indices_.push_back(n);
            }
            frontier = std::move(next);
        }
    }

    Mat2 h_;
    std::vector<Mode> modes_;
    std::vector<Index> indices_;
    std::map<Index, int> lookup_;
    std::vector<std::array<cplx, 4>> diag_;
    std::vector<int> up_, down_;
    std::vector<double> up_scale_, down_scale_;
};

namespace detail {

inline Hierarchy make_hierarchy(const SystemParams& params, const std::array<BathParams, 2>& baths,
                                const HeomConfig& cfg) {
    if (cfg.shared_bath) return Hierarchy(params, {baths[0]}, {{{1.0, -1.0}}}, cfg);
    return Hierarchy(params, {baths[0], baths[1]}, {{{1.0, 0.0}}, {{0.0, 1.0}}}, cfg);
}

} // namespace detail

/// Physical density matrix at every grid time. Integration starts at t = 0.
inline std::vector<Mat2> heom_propagate(const SystemParams& params, const std::array<BathParams, 2>& baths,
                                        const HeomConfig& cfg, const Mat2& rho0,
                                        const std::vector<double>& t_grid) {
    cfg.validate();
    for (const auto& b : baths) b.validate();
    if (t_grid.empty()) throw Error(ErrorKind::Argument, "heom_propagate: empty time grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw Error(ErrorKind::Argument, "heom_propagate: grid must be non-negative and increasing");
    }

    const Hierarchy hier = detail::make_hierarchy(params, baths, cfg);
    ode::State y = ode::State::Zero(static_cast<Eigen::Index>(4 * hier.size()));
    y[0] = rho0(0, 0);
    y[1] = rho0(0, 1);
    y[2] = rho0(1, 0);
    y[3] = rho0(1, 1);

    std::vector<double> times;
    const bool prepend = t_grid.front() > 0.0;
    if (prepend) times.push_back(0.0);
    times.insert(times.end(), t_grid.begin(), t_grid.end());

    ode::Options opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_step = 0.5;

    std::vector<Mat2> out;
    out.reserve(t_grid.size());
    ode::integrate([&hier](double, const ode::State& s, ode::State& ds) { hier.rhs(s, ds); }, y, times, opt,
                   [&](std::size_t i, const ode::State& s) {
                       if (prepend && i == 0) return;
                       Mat2 rho;
                       rho << s[0], s[1], s[2], s[3];
                       out.push_back(rho);
                   });
    return out;
}

inline std::vector<Mat2> heom_propagate(const SystemParams& params, const BathParams& bath,
                                        const HeomConfig& cfg, const Mat2& rho0,
                                        const std::vector<double>& t_grid) {
    return heom_propagate(params, {bath, bath}, cfg, rho0, t_grid);
}

/// Site populations starting from |s1>.
inline PopulationTrace heom_population_trace(const SystemParams& params, const BathParams& bath,
                                             const HeomConfig& cfg, const std::vector<double>& t_grid) {
    Mat2 rho0 = Mat2::Zero();
    rho0(0, 0) = 1.0;
    PopulationTrace trace;
    trace.times = t_grid;
    trace.rho_series = heom_propagate(params, bath, cfg, rho0, t_grid);
    for (const auto& rho : trace.rho_series) {
        trace.p1.push_back(rho(0, 0).real());
        trace.p2.push_back(rho(1, 1).real());
    }
    return trace;
}

} // namespace dimerlab
