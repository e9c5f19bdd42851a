#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dimerlab/circuit.hpp"
#include "dimerlab/postproc.hpp"
#include "oracles.hpp"

using namespace dimerlab;

namespace {

std::vector<double> grid(double t_max, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(t_max * i / (n - 1));
    return g;
}

Mat4 random_two_qubit(std::mt19937_64& rng) { return oracle::random_density(rng, 4); }

/// Subspace action of a noiseless circuit applied to rho (2x2, site basis).
Mat2 subspace_action(const GateSequence& seq, const Mat2& rho) {
    return extract_subspace_rho(apply_sequence(embed_subspace(rho), seq, NoiseConfig{}));
}

double max_rabi_error(double dt, const std::vector<double>& g) {
    const auto tr = run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(dt), NoiseConfig{}, g);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(tr.p1[i] - oracle::p1_exact(1.5, 1.0, g[i])));
    return e;
}

} // namespace

TEST(TrotterSteps, Schedules) {
    EXPECT_EQ(trotter_steps(TrotterSchedule::linear(0.4), 2.0), 5);
    EXPECT_EQ(trotter_steps(TrotterSchedule::linear(0.4), 0.0), 1);
    EXPECT_EQ(trotter_steps(TrotterSchedule::linear(0.4), 0.41), 2);
    EXPECT_EQ(trotter_steps(TrotterSchedule::constant(10), 0.0), 10);
    EXPECT_EQ(trotter_steps(TrotterSchedule::constant(10), 7.3), 10);
    EXPECT_THROW(trotter_steps(TrotterSchedule::constant(0), 1.0), Error);
    EXPECT_THROW(trotter_steps(TrotterSchedule::linear(0.0), 1.0), Error);
}

TEST(TrotterCircuit, SingleStepIsSplitProduct) {
    std::mt19937_64 rng(1);
    const double t = 0.37;
    const Eigen::MatrixXcd v = oracle::expm(cplx(0, -t) * oracle::sx()) * oracle::expm(cplx(0, -t * 1.5) * oracle::sz());
    for (int i = 0; i < 10; ++i) {
        const Mat2 rho = oracle::random_density(rng);
        const Mat2 expect = v * rho * v.adjoint();
        ASSERT_LT(max_abs(subspace_action(build_trotter_circuit({1.5, 1.0}, t, 1), rho) - expect), 1e-12);
    }
}

TEST(TrotterCircuit, ExactWithoutBias) {
    std::mt19937_64 rng(2);
    for (int m : {1, 3, 8}) {
        const Eigen::MatrixXcd u = oracle::evolve(0.0, 1.0, 2.3);
        const Mat2 rho = oracle::random_density(rng);
        const Mat2 expect = u * rho * u.adjoint();
        ASSERT_LT(max_abs(subspace_action(build_trotter_circuit({0.0, 1.0}, 2.3, m), rho) - expect), 1e-12);
    }
}

// The population error of this splitting shrinks by about 4x per doubling of M
// (second order in dt for p1 started from |s1>), measured against the series oracle.
TEST(TrotterCircuit, ErrorShrinksWithMoreSteps) {
    Mat2 s1 = Mat2::Zero();
    s1(0, 0) = 1.0;
    const double exact = oracle::p1_exact(1.5, 1.0, 2.0);
    double prev = NAN;
    for (int m : {5, 10, 20, 40}) {
        const double err = std::abs(subspace_action(build_trotter_circuit({1.5, 1.0}, 2.0, m), s1)(0, 0).real() - exact);
        if (!std::isnan(prev)) {
            EXPECT_LT(err, prev);
            EXPECT_GT(prev / err, 1.5);
        }
        prev = err;
    }
}

TEST(TrotterCircuit, MaxErrorRatioPerHalving) {
    const auto g = grid(6.0, 61);
    const double e[4] = {max_rabi_error(0.4, g), max_rabi_error(0.2, g), max_rabi_error(0.1, g),
                         max_rabi_error(0.05, g)};
    for (int i = 0; i < 3; ++i) {
        ASSERT_TRUE(std::isfinite(e[i]));
        EXPECT_GT(e[i] / e[i + 1], 3.0);
        EXPECT_LT(e[i] / e[i + 1], 5.0);
    }
}

TEST(Dissipation, BlockCounts) {
    EXPECT_TRUE(dissipation_block(0.0, 5.0).empty());
    const auto seq = dissipation_block(200.0, 1.0);
    EXPECT_EQ(dissipation_block_count(200.0, 1.0), 200);
    int per_qubit[2] = {0, 0};
    for (const auto& g : seq) ++per_qubit[g.q0];
    EXPECT_EQ(per_qubit[0], 2000);
    EXPECT_EQ(per_qubit[1], 2000);
    EXPECT_EQ(dissipation_block_count(0.5, 1.0), 1); // half rounds up
    EXPECT_EQ(dissipation_block_count(0.49, 1.0), 0);
    EXPECT_THROW(dissipation_block_count(-1.0, 1.0), Error);
}

TEST(Dissipation, NoiselessBlocksAreIdentity) {
    std::mt19937_64 rng(4);
    for (int n : {1, 7, 33}) {
        const Mat4 rho = random_two_qubit(rng);
        const Mat4 out = apply_sequence(rho, dissipation_block(static_cast<double>(n), 1.0), NoiseConfig{});
        ASSERT_LT(max_abs(out - rho), 1e-12);
    }
}

TEST(Channel, NoiselessIsUnitaryConjugation) {
    std::mt19937_64 rng(5);
    const Mat4 rho = random_two_qubit(rng);
    const Gate g{GateKind::RX, 1, -1, 0.7};
    const Mat4 u = kron(Mat2::Identity(), rx(0.7));
    EXPECT_LT(max_abs(apply_channel(rho, g, NoiseConfig{}) - u * rho * u.adjoint()), 1e-15);
}

TEST(Channel, MaximallyMixedIsFixedPoint) {
    const NoiseConfig noise{0.3, 0.2, 0.0, 0.0};
    const Mat4 mixed = Mat4::Identity() / 4.0;
    for (const Gate& g : {Gate{GateKind::X, 0}, Gate{GateKind::RZ, 1, -1, 0.4}, Gate{GateKind::XXplusYY, 0, 1, 1.1}})
        EXPECT_LT(max_abs(apply_channel(mixed, g, noise) - mixed), 1e-15);
}

TEST(Channel, DepolarizingMatchesKrausForm) {
    std::mt19937_64 rng(6);
    for (double p : {0.0, 0.002, 0.1, 0.75}) {
        const Mat2 rho = oracle::random_density(rng);
        EXPECT_LT(max_abs(depolarize(rho, p) - Mat2(oracle::depolarize_kraus(rho, p))), 1e-14);
        const Eigen::Vector3d r0 = bloch_vector(rho), r1 = bloch_vector(depolarize(rho, p));
        EXPECT_NEAR(r1.norm(), r0.norm() * (1.0 - 4.0 * p / 3.0), 1e-14);
    }
}

TEST(Channel, PreservesDensityInvariants) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const NoiseConfig noise{u(rng) * 0.5, u(rng) * 0.5, u(rng) - 0.5, 0.0};
        const Gate gates[] = {{GateKind::X, i % 2}, {GateKind::Z, (i + 1) % 2}, {GateKind::RX, 0, -1, 6 * u(rng)},
                              {GateKind::RZ, 1, -1, 6 * u(rng)}, {GateKind::XXplusYY, i % 2, 1 - i % 2, 6 * u(rng)}};
        const Mat4 out = apply_channel(random_two_qubit(rng), gates[i % 5], noise);
        ASSERT_LT(std::abs(out.trace() - 1.0), 1e-10);
        ASSERT_LT(hermiticity_error(out), 1e-10);
        ASSERT_GE(min_eigenvalue(out), -1e-9);
    }
}

TEST(Channel, RejectsBadTargets) {
    const Mat4 rho = Mat4::Identity() / 4.0;
    EXPECT_THROW(apply_channel(rho, Gate{GateKind::X, 2}, NoiseConfig{}), Error);
    EXPECT_THROW(apply_channel(rho, Gate{GateKind::XXplusYY, 0, 0, 1.0}, NoiseConfig{}), Error);
    EXPECT_THROW(NoiseConfig({1.5, 0, 0, 0}).validate(), Error);
}

TEST(Subspace, Extraction) {
    Mat4 rho = Mat4::Zero();
    rho(kS1, kS1) = 1.0;
    EXPECT_EQ(extract_subspace_rho(rho), Mat2(Eigen::Vector2cd(1.0, 0.0).asDiagonal()));
    EXPECT_LT(max_abs(extract_subspace_rho(Mat4::Identity() / 4.0) - Mat2::Identity() / 2.0), 1e-15);
    rho = Mat4::Zero();
    rho(0, 0) = 0.1;
    rho(3, 3) = 0.1;
    rho(kS1, kS1) = 0.6;
    rho(kS2, kS2) = 0.2;
    const Mat2 out = extract_subspace_rho(rho);
    EXPECT_NEAR(out(0, 0).real(), 0.75, 1e-15);
    EXPECT_NEAR(out(1, 1).real(), 0.25, 1e-15);
    Mat4 leak = Mat4::Zero();
    leak(0, 0) = 1.0;
    EXPECT_THROW(extract_subspace_rho(leak), Error);
}

TEST(RunDynamics, FineStepsTrackRabi) {
    const auto g = grid(6.0, 61);
    EXPECT_LT(max_rabi_error(0.05, g), 1e-3);
}

TEST(RunDynamics, NoiselessDissipationDoesNothing) {
    const auto g = grid(3.0, 31);
    const auto a = run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), NoiseConfig{}, g);
    const auto b = run_dynamics({1.5, 1.0}, 350.0, TrotterSchedule::linear(0.4), NoiseConfig{}, g);
    for (std::size_t i = 0; i < g.size(); ++i) ASSERT_NEAR(a.p1[i], b.p1[i], 1e-10);
}

TEST(RunDynamics, EmptyGridRejected) {
    EXPECT_THROW(run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), NoiseConfig{}, {}), Error);
    EXPECT_THROW(run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), NoiseConfig{}, {0.2, 0.1}), Error);
}

TEST(RunDynamics, ExactModeEmitsSubspaceStates) {
    const auto g = grid(2.0, 11);
    const auto tr = run_dynamics({1.5, 1.0}, 100.0, TrotterSchedule::linear(0.4), NoiseConfig{0.001, 0.001, 0, 0}, g);
    ASSERT_EQ(tr.rho_series.size(), g.size());
    for (const auto& rho : tr.rho_series) EXPECT_TRUE(is_density_matrix(rho));
    EXPECT_FALSE(tr.seed.has_value());
}

TEST(RunDynamics, DecayIsPositiveWithGateNoise) {
    const auto g = grid(6.0, 61);
    const NoiseConfig noise{0.002, 0.0, 0.0, 0.0};
    const auto tr = run_dynamics({1.5, 1.0}, 200.0, TrotterSchedule::linear(0.4), noise, g);
    const auto fit = fit_damped_oscillation(zero_time_normalize(leak_renormalize(tr)).trace);
    EXPECT_GT(fit.alpha, 0.0);
}

TEST(RunDynamics, DampingGrowsWithBlockRate) {
    // Weaker noise than the default so the decay stays resolvable on the grid.
    const auto g = grid(6.0, 61);
    const NoiseConfig noise{0.0002, 0.0, 0.0, 0.0};
    double prev = -1.0;
    for (double d : {0.0, 100.0, 200.0, 300.0}) {
        const auto tr = run_dynamics({1.5, 1.0}, d, TrotterSchedule::linear(0.4), noise, g);
        const double alpha = fit_damped_oscillation(zero_time_normalize(leak_renormalize(tr)).trace).alpha;
        EXPECT_GE(alpha, prev - 1e-6) << "delta_q=" << d;
        prev = alpha;
    }
}

TEST(RunDynamics, DampingGrowsWithBlockRateAtDefaultNoise) {
    const auto g = grid(6.0, 61);
    const NoiseConfig noise{0.002, 0.0, 0.0, 0.0};
    double prev = -1.0;
    for (double d : {0.0, 100.0, 200.0, 300.0}) {
        const auto tr = run_dynamics({1.5, 1.0}, d, TrotterSchedule::linear(0.4), noise, g);
        const double alpha = fit_damped_oscillation(zero_time_normalize(leak_renormalize(tr)).trace).alpha;
        EXPECT_GE(alpha, prev - 1e-6) << "delta_q=" << d;
        prev = alpha;
    }
}

TEST(Shots, WithinBinomialBound) {
    const auto g = grid(6.0, 61);
    const NoiseConfig noise{0.001, 0.001, 0.0, 0.0};
    const auto exact = run_dynamics({1.5, 1.0}, 50.0, TrotterSchedule::linear(0.4), noise, g);
    const auto shots = run_dynamics({1.5, 1.0}, 50.0, TrotterSchedule::linear(0.4), noise, g, RunMode::sampled(8192), 99);
    ASSERT_TRUE(shots.seed.has_value());
    EXPECT_EQ(*shots.seed, 99u);
    int inside = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p = exact.p1[i];
        if (std::abs(shots.p1[i] - p) <= 5.0 * std::sqrt(p * (1 - p) / 8192) + 1e-12) ++inside;
    }
    EXPECT_GE(inside, static_cast<int>(std::ceil(0.99 * g.size())));
}

TEST(Shots, ConvergeWithSampleCount) {
    const std::vector<double> g{0.3, 0.9, 1.7, 2.6};
    const NoiseConfig noise{0.002, 0.0, 0.0, 0.0};
    const auto exact = run_dynamics({1.5, 1.0}, 20.0, TrotterSchedule::linear(0.4), noise, g);
    for (long n : {1000L, 10000L, 100000L}) {
        const auto s = run_dynamics({1.5, 1.0}, 20.0, TrotterSchedule::linear(0.4), noise, g, RunMode::sampled(n), 5);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double p = exact.p1[i];
            ASSERT_LE(std::abs(s.p1[i] - p), 5.0 * std::sqrt(p * (1 - p) / n) + 1e-12) << "n=" << n;
        }
    }
}

TEST(Shots, SameSeedSameCounts) {
    const std::vector<double> g{0.5, 1.0};
    const NoiseConfig noise{0.0, 0.0, 0.0, 0.05};
    const auto a = run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), noise, g, RunMode::sampled(500), 3);
    const auto b = run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), noise, g, RunMode::sampled(500), 3);
    EXPECT_EQ(a.p1, b.p1);
    EXPECT_EQ(a.p2, b.p2);
}

TEST(Shots, ReadoutFlipsLeakPopulation) {
    const std::vector<double> g{0.0};
    const NoiseConfig noise{0.0, 0.0, 0.0, 0.1};
    const auto s = run_dynamics({1.5, 1.0}, 0.0, TrotterSchedule::linear(0.4), noise, g, RunMode::sampled(200000), 1);
    // |10> survives both bits unflipped with probability 0.81.
    EXPECT_NEAR(s.p1[0], 0.81, 5 * std::sqrt(0.81 * 0.19 / 200000));
    EXPECT_NEAR(s.p2[0], 0.01, 5 * std::sqrt(0.01 * 0.99 / 200000));
}

TEST(IdentityScan, NoiselessBlockInvariant) {
    const auto scan = identity_gate_scan(IdentityKind::XZXZZsq, 100, 0.9, 0.4, NoiseConfig{});
    const Eigen::Vector3d r0(std::sin(0.9) * std::cos(0.4), std::sin(0.9) * std::sin(0.4), std::cos(0.9));
    ASSERT_EQ(scan.size(), 100u);
    for (const auto& r : scan) ASSERT_LT((r - r0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IdentityScan, OverrotationPrecesses) {
    const NoiseConfig noise{0.0, 0.0, 0.01, 0.0};
    const double theta = 1.2, phi = 0.3;
    const auto scan = identity_gate_scan(IdentityKind::XX, 200, theta, phi, noise);
    // XX with overrotation is RX(d) X RX(d) X = RX(2d) up to phase: rotation about x by 0.02 per rep.
    const Eigen::Vector3d r0(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    for (std::size_t k = 0; k < scan.size(); ++k) {
        const double a = 0.02 * static_cast<double>(k + 1);
        const Eigen::Vector3d expect(r0.x(), r0.y() * std::cos(a) - r0.z() * std::sin(a),
                                     r0.y() * std::sin(a) + r0.z() * std::cos(a));
        ASSERT_NEAR(scan[k].norm(), r0.norm(), 1e-9);
        ASSERT_LT((scan[k] - expect).cwiseAbs().maxCoeff(), 1e-9);
    }
    EXPECT_GT((scan.back() - r0).norm(), 0.1);
}

TEST(IdentityScan, DepolarizingContraction) {
    const double p = 0.002;
    const auto scan = identity_gate_scan(IdentityKind::XZXZZsq, 100, 0.7, 1.9, NoiseConfig{p, 0, 0, 0});
    double prev = 1.0;
    for (const auto& r : scan) {
        ASSERT_LT(r.norm(), prev);
        prev = r.norm();
    }
    EXPECT_NEAR(scan.back().norm(), std::pow(1.0 - 4.0 * p / 3.0, 1000), 1e-9);
}
