// Closed-dimer dynamics: exact Rabi population against the Trotterised circuit
// for a few step sizes.

#include <cmath>
#include <cstdio>
#include <vector>

#include "dimerlab/dimerlab.hpp"

int main() {
    using namespace dimerlab;
    const SystemParams p{1.5, 1.0};
    std::vector<double> grid;
    for (int i = 0; i <= 60; ++i) grid.push_back(0.1 * i);

    std::printf("%8s %12s", "t", "exact");
    const double steps[] = {0.4, 0.2, 0.1};
    for (double dt : steps) std::printf("   dt=%-6.2f", dt);
    std::printf("\n");

    std::vector<PopulationTrace> runs;
    for (double dt : steps) runs.push_back(run_dynamics(p, 0.0, TrotterSchedule::linear(dt), NoiseConfig{}, grid));
    for (std::size_t i = 0; i < grid.size(); i += 5) {
        std::printf("%8.2f %12.6f", grid[i], rabi_population(p, grid[i]));
        for (const auto& r : runs) std::printf(" %12.6f", r.p1[i]);
        std::printf("\n");
    }
}
