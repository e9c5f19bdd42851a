// Learns transfer tensors from a short noisy-circuit window and extends the
// |s1> trajectory, printing the extension next to the direct simulation.

#include <cmath>
#include <cstdio>
#include <vector>

#include "dimerlab/dimerlab.hpp"

int main() {
    using namespace dimerlab;
    const SystemParams p{1.5, 1.0};
    const NoiseConfig noise{0.002, 0.0, 0.0, 0.0};
    const auto schedule = TrotterSchedule::linear(0.4);
    const double delta_q = 200.0, t0 = 0.1, dt = 0.05;

    std::vector<double> train, all;
    for (int k = 0; k <= 68; ++k) train.push_back(t0 + dt * k);
    for (int k = 0; k <= 178; ++k) all.push_back(t0 + dt * k);

    std::vector<std::vector<Mat2>> trajs;
    for (const Mat2& rho0 : canonical_initial_states())
        trajs.push_back(run_dynamics(p, delta_q, schedule, noise, train, RunMode::exact(), kDefaultSeed, rho0).rho_series);
    const auto tt = transfer_tensors(build_dynamical_maps(TrajectorySet::from_samples(train, trajs)));

    const auto direct = run_dynamics(p, delta_q, schedule, noise, all).rho_series;
    const std::vector<Mat2> history(direct.begin(), direct.begin() + 69);
    const auto ext = extend_dynamics(tt, history, 178);

    double worst = 0.0;
    std::printf("%8s %12s %12s\n", "t", "ttm", "direct");
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double a = ext.states[i](0, 0).real(), b = direct[i](0, 0).real();
        worst = std::max(worst, std::abs(a - b));
        if (i % 10 == 0) std::printf("%8.2f %12.6f %12.6f\n", all[i], a, b);
    }
    std::printf("max |dp1| = %.4g\n", worst);
}
