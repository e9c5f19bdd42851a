// circuit.hpp: two-qubit density-matrix simulator for the encoded dimer
//
// Encoding: |s1> = |10>, |s2> = |01>. Basis order {|00>, |01>, |10>, |11>}
// with qubit 0 the left label. A time point t is one circuit: a dissipation
// block of noisy identities followed by the Trotterized propagator.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dimerlab/errors.hpp"
#include "dimerlab/linalg.hpp"
#include "dimerlab/qdyn.hpp"

namespace dimerlab {

struct NoiseConfig {
    double depol_1q{0.0};       // depolarizing probability per one-qubit gate
    double depol_2q{0.0};       // per qubit touched by a two-qubit gate
    double overrotation_x{0.0}; // extra RX angle (rad) per physical X gate
    double readout_flip{0.0};   // bit-flip probability per measured bit

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0))
                throw Error(ErrorKind::Domain, std::string("NoiseConfig.") + name + " must lie in [0,1]");
        };
        prob(depol_1q, "depol_1q");
        prob(depol_2q, "depol_2q");
        prob(readout_flip, "readout_flip");
        if (!std::isfinite(overrotation_x))
            throw Error(ErrorKind::Domain, "NoiseConfig.overrotation_x must be finite");
    }
};

struct TrotterSchedule {
    enum class Mode { Constant, Linear };
    Mode mode{Mode::Linear};
    int m_const{10};
    double dt_target{0.4};

    static TrotterSchedule constant(int m) { return {Mode::Constant, m, 0.4}; }
    static TrotterSchedule linear(double dt) { return {Mode::Linear, 10, dt}; }

    void validate() const {
        if (mode == Mode::Constant && m_const < 1)
            throw Error(ErrorKind::Domain, "TrotterSchedule: constant M must be >= 1");
        if (mode == Mode::Linear && !(dt_target > 0.0))
            throw Error(ErrorKind::Domain, "TrotterSchedule: dt_target must be positive");
    }
};

/// Number of Trotter steps for total time t. Linear mode: max(1, ceil(t/dt)).
inline int trotter_steps(const TrotterSchedule& s, double t) {
    s.validate();
    if (s.mode == TrotterSchedule::Mode::Constant) return s.m_const;
    // Guard ceil() against t/dt landing a hair above an integer through round-off.
    const double ratio = t / s.dt_target;
    const double nearest = std::round(ratio);
    const double steps = std::abs(ratio - nearest) < 1e-9 ? nearest : std::ceil(ratio);
    return std::max(1, static_cast<int>(steps));
}

// ---------------------------------------------------------------------------
// Gates

enum class GateKind { X, Z, RX, RZ, XXplusYY };

struct Gate {
    GateKind kind;
    int q0;
    int q1{-1}; // second target for XXplusYY
    double theta{0.0};

    bool two_qubit() const { return kind == GateKind::XXplusYY; }
};

using GateSequence = std::vector<Gate>;

inline Mat2 rx(double theta) {
    Mat2 m;
    m << std::cos(theta / 2), -kI * std::sin(theta / 2), -kI * std::sin(theta / 2), std::cos(theta / 2);
    return m;
}

inline Mat2 rz(double theta) {
    Mat2 m;
    m << std::exp(-kI * (theta / 2)), 0.0, 0.0, std::exp(kI * (theta / 2));
    return m;
}

/// exp(-i theta/4 (XX + YY)): a rotation by theta/2 about sigma_X on span{|01>,|10>}.
inline Mat4 xx_plus_yy(double theta) {
    Mat4 m = Mat4::Identity();
    const double c = std::cos(theta / 2);
    const cplx s = -kI * std::sin(theta / 2);
    m(1, 1) = c;
    m(2, 2) = c;
    m(1, 2) = s;
    m(2, 1) = s;
    return m;
}

/// Single-qubit unitary of a one-qubit gate, X including the overrotation.
inline Mat2 single_qubit_unitary(const Gate& g, const NoiseConfig& noise) {
    switch (g.kind) {
    case GateKind::X: return rx(noise.overrotation_x) * pauli::x();
    case GateKind::Z: return pauli::z();
    case GateKind::RX: return rx(g.theta);
    case GateKind::RZ: return rz(g.theta);
    case GateKind::XXplusYY: break;
    }
    throw Error(ErrorKind::Argument, "single_qubit_unitary: two-qubit gate");
}

inline Mat4 on_qubit(const Mat2& u, int q) {
    return q == 0 ? kron(u, Mat2::Identity()) : kron(Mat2::Identity(), u);
}

/// rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z) on one qubit.
inline Mat2 depolarize(const Mat2& rho, double p) {
    if (p == 0.0) return rho;
    const Mat2 x = pauli::x(), y = pauli::y(), z = pauli::z();
    return (1.0 - p) * rho + (p / 3.0) * (x * rho * x + y * rho * y + z * rho * z);
}

inline Mat4 depolarize(const Mat4& rho, int q, double p) {
    if (p == 0.0) return rho;
    const Mat4 x = on_qubit(pauli::x(), q), y = on_qubit(pauli::y(), q), z = on_qubit(pauli::z(), q);
    return (1.0 - p) * rho + (p / 3.0) * (x * rho * x + y * rho * y + z * rho * z);
}

inline void check_gate(const Gate& g) {
    auto valid = [](int q) { return q == 0 || q == 1; };
    if (!valid(g.q0) || (g.two_qubit() && (!valid(g.q1) || g.q1 == g.q0)))
        throw Error(ErrorKind::Argument, "gate targets must be distinct qubits in {0,1}");
    if (!std::isfinite(g.theta)) throw Error(ErrorKind::Argument, "gate angle must be finite");
}

/// Ideal gate (with X overrotation) followed by depolarizing noise on each touched qubit.
inline Mat4 apply_channel(const Mat4& rho, const Gate& g, const NoiseConfig& noise) {
    check_gate(g);
    if (g.two_qubit()) {
        const Mat4 u = xx_plus_yy(g.theta);
        Mat4 out = u * rho * u.adjoint();
        out = depolarize(out, g.q0, noise.depol_2q);
        return depolarize(out, g.q1, noise.depol_2q);
    }
    const Mat4 u = on_qubit(single_qubit_unitary(g, noise), g.q0);
    return depolarize(Mat4(u * rho * u.adjoint()), g.q0, noise.depol_1q);
}

inline Mat2 apply_channel(const Mat2& rho, const Gate& g, const NoiseConfig& noise) {
    const Mat2 u = single_qubit_unitary(g, noise);
    return depolarize(Mat2(u * rho * u.adjoint()), noise.depol_1q);
}

inline Mat4 apply_sequence(Mat4 rho, const GateSequence& seq, const NoiseConfig& noise) {
    for (const auto& g : seq) rho = apply_channel(rho, g, noise);
    return rho;
}

/// Superoperator (column-stacking) of a noisy gate sequence.
inline Mat16 sequence_superop(const GateSequence& seq, const NoiseConfig& noise) {
    Mat16 s;
    for (int k = 0; k < 16; ++k) {
        Mat4 basis = Mat4::Zero();
        basis(k % 4, k / 4) = 1.0;
        const Mat4 out = apply_sequence(basis, seq, noise);
        s.col(k) = Eigen::Map<const Vec16>(out.data());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Circuit builders

/// M steps of [RZ pair: exp(-i dt eps sigma_Z) on the subspace,
/// XXplusYY(2 J dt): exp(-i dt J sigma_X)], i.e. the step unitary
/// exp(-i dt J sigma_X) exp(-i dt eps sigma_Z).
inline GateSequence build_trotter_circuit(const SystemParams& p, double t, int m) {
    if (m < 1) throw Error(ErrorKind::Domain, "build_trotter_circuit: M must be >= 1");
    const double dt = t / m;
    const double z_angle = p.epsilon * dt;
    GateSequence seq;
    seq.reserve(3 * static_cast<std::size_t>(m));
    for (int step = 0; step < m; ++step) {
        // |10> picks up exp(-i eps dt), |01> exp(+i eps dt).
        seq.push_back({GateKind::RZ, 0, -1, -z_angle});
        seq.push_back({GateKind::RZ, 1, -1, z_angle});
        seq.push_back({GateKind::XXplusYY, 0, 1, 2.0 * p.j_coupling * dt});
    }
    return seq;
}

/// X,Z,X,Z,Z,X,Z,X,Z,Z on one qubit; algebraically the identity.
inline GateSequence identity_block(int qubit) {
    GateSequence seq;
    for (int half = 0; half < 2; ++half) {
        for (GateKind k : {GateKind::X, GateKind::Z, GateKind::X, GateKind::Z, GateKind::Z})
            seq.push_back({k, qubit});
    }
    return seq;
}

/// Number of identity blocks for time t: round-half-up of delta_q * t.
inline long dissipation_block_count(double delta_q, double t) {
    if (!(delta_q >= 0.0) || !(t >= 0.0))
        throw Error(ErrorKind::Domain, "dissipation_block: delta_q and t must be non-negative");
    return static_cast<long>(std::floor(delta_q * t + 0.5 + 1e-9));
}

/// round(delta_q t) noisy identity blocks on both qubits.
inline GateSequence dissipation_block(double delta_q, double t) {
    const long n = dissipation_block_count(delta_q, t);
    GateSequence seq;
    seq.reserve(static_cast<std::size_t>(n) * 20);
    const GateSequence q0 = identity_block(0), q1 = identity_block(1);
    for (long i = 0; i < n; ++i) {
        seq.insert(seq.end(), q0.begin(), q0.end());
        seq.insert(seq.end(), q1.begin(), q1.end());
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Encoded-subspace helpers

inline constexpr int kS1 = 2; // |10>
inline constexpr int kS2 = 1; // |01>

inline Mat4 embed_subspace(const Mat2& rho) {
    Mat4 out = Mat4::Zero();
    const int idx[2] = {kS1, kS2};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(idx[i], idx[j]) = rho(i, j);
    return out;
}

/// Projects onto span{|10>, |01>} (ordered s1, s2) and renormalises.
inline Mat2 extract_subspace_rho(const Mat4& rho) {
    const double weight = rho(kS1, kS1).real() + rho(kS2, kS2).real();
    if (!(weight >= 1e-9))
        throw Error(ErrorKind::DegenerateState, "extract_subspace_rho: subspace weight below 1e-9");
    Mat2 out;
    out << rho(kS1, kS1), rho(kS1, kS2), rho(kS2, kS1), rho(kS2, kS2);
    return out / weight;
}

// ---------------------------------------------------------------------------
// Dynamics

struct PopulationTrace {
    std::vector<double> times;
    std::vector<double> p1; // raw site populations as measured
    std::vector<double> p2;
    std::vector<Mat2> rho_series; // exact mode only: renormalised subspace state
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return times.size(); }
};

struct RunMode {
    bool shots{false};
    long n_shots{8192};

    static RunMode exact() { return {false, 0}; }
    static RunMode sampled(long n) { return {true, n}; }
};

inline constexpr std::uint64_t kDefaultSeed = 20231018;

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Samples n two-bit outcomes from diag(rho) with independent readout flips.
/// Returns counts indexed by basis label (0..3).
inline std::array<long, 4> sample_counts(const Mat4& rho, long n, double flip, std::mt19937_64& rng) {
    std::array<double, 4> cdf{};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += std::max(0.0, rho(k, k).real());
        cdf[k] = acc;
    }
    std::array<long, 4> counts{};
    for (long s = 0; s < n; ++s) {
        const double u = uniform01(rng) * acc;
        int outcome = 3;
        for (int k = 0; k < 4; ++k) {
            if (u < cdf[k]) {
                outcome = k;
                break;
            }
        }
        if (flip > 0.0) {
            if (uniform01(rng) < flip) outcome ^= 0b10;
            if (uniform01(rng) < flip) outcome ^= 0b01;
        }
        ++counts[outcome];
    }
    return counts;
}

} // namespace detail

/// Final two-qubit state of the circuit for time t starting from the encoded `initial`.
/// `block_superop` is the superoperator of one dissipation block on both qubits.
inline Mat4 simulate_point(const SystemParams& params, double delta_q, const TrotterSchedule& schedule,
                           const NoiseConfig& noise, double t, const Mat2& initial,
                           const Mat16& block_superop) {
    Mat4 rho = embed_subspace(initial);
    const long blocks = dissipation_block_count(delta_q, t);
    if (blocks > 0) {
        Vec16 v = Eigen::Map<const Vec16>(rho.data());
        for (long b = 0; b < blocks; ++b) v = block_superop * v;
        rho = Eigen::Map<const Mat4>(v.data());
    }
    return apply_sequence(rho, build_trotter_circuit(params, t, trotter_steps(schedule, t)), noise);
}

inline Mat16 dissipation_superop(const NoiseConfig& noise) {
    return sequence_superop(dissipation_block(1.0, 1.0), noise);
}

/// Runs one circuit per grid time and reads p1 = <10|rho|10>, p2 = <01|rho|01>.
inline PopulationTrace run_dynamics(const SystemParams& params, double delta_q,
                                    const TrotterSchedule& schedule, const NoiseConfig& noise,
                                    const std::vector<double>& t_grid, RunMode mode = RunMode::exact(),
                                    std::uint64_t seed = kDefaultSeed,
                                    const Mat2& initial = Mat2(Eigen::Vector2cd(1.0, 0.0).asDiagonal())) {
    if (t_grid.empty()) throw Error(ErrorKind::Argument, "run_dynamics: empty time grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw Error(ErrorKind::Argument, "run_dynamics: grid must be non-negative and increasing");
    }
    if (!(delta_q >= 0.0)) throw Error(ErrorKind::Domain, "run_dynamics: delta_q must be non-negative");
    noise.validate();
    schedule.validate();
    if (mode.shots && mode.n_shots < 1) throw Error(ErrorKind::Argument, "run_dynamics: shots must be >= 1");

    const Mat16 block = dissipation_superop(noise);
    std::mt19937_64 rng(seed);

    PopulationTrace out;
    out.times = t_grid;
    if (mode.shots) out.seed = seed;
    for (double t : t_grid) {
        const Mat4 rho = simulate_point(params, delta_q, schedule, noise, t, initial, block);
        if (mode.shots) {
            const auto counts = detail::sample_counts(rho, mode.n_shots, noise.readout_flip, rng);
            out.p1.push_back(static_cast<double>(counts[kS1]) / mode.n_shots);
            out.p2.push_back(static_cast<double>(counts[kS2]) / mode.n_shots);
        } else {
            out.p1.push_back(std::clamp(rho(kS1, kS1).real(), 0.0, 1.0));
            out.p2.push_back(std::clamp(rho(kS2, kS2).real(), 0.0, 1.0));
            out.rho_series.push_back(extract_subspace_rho(rho));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single-qubit identity-gate scans

enum class IdentityKind { XX, XZXZ, XZXZZsq };

inline GateSequence identity_sequence(IdentityKind kind) {
    using K = GateKind;
    switch (kind) {
    case IdentityKind::XX: return {{K::X, 0}, {K::X, 0}};
    case IdentityKind::XZXZ: return {{K::X, 0}, {K::Z, 0}, {K::X, 0}, {K::Z, 0}};
    case IdentityKind::XZXZZsq: return identity_block(0);
    }
    return {};
}

/// Applies the sequence `reps` times to the Bloch state (theta, phi) and
/// records the Bloch vector after each repetition.
inline std::vector<Eigen::Vector3d> identity_gate_scan(IdentityKind kind, int reps, double theta,
                                                       double phi, const NoiseConfig& noise) {
    if (reps < 0) throw Error(ErrorKind::Domain, "identity_gate_scan: reps must be >= 0");
    noise.validate();
    const GateSequence seq = identity_sequence(kind);
    Mat2 rho = from_bloch({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
    std::vector<Eigen::Vector3d> out;
    out.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        for (const auto& g : seq) rho = apply_channel(rho, g, noise);
        out.push_back(bloch_vector(rho));
    }
    return out;
}

} // namespace dimerlab
