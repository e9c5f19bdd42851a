#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dimerlab/calib.hpp"
#include "oracles.hpp"

using namespace dimerlab;

namespace {

PopulationTrace trace_of(const std::vector<double>& t, const std::vector<double>& p1) {
    PopulationTrace tr;
    tr.times = t;
    tr.p1 = p1;
    for (double v : p1) tr.p2.push_back(1.0 - v);
    return tr;
}

std::vector<double> grid(double t_max, int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(t_max * i / (n - 1));
    return t;
}

HeomConfig light_heom() {
    HeomConfig cfg;
    cfg.depth = 4;
    return cfg;
}

} // namespace

TEST(Distance, Examples) {
    const auto a = trace_of({0.0, 1.0}, {1.0, 0.5});
    EXPECT_EQ(trace_distance_l2(a, a), 0.0);
    const auto b = trace_of({0.0, 1.0}, {0.9, 0.4});
    EXPECT_NEAR(trace_distance_l2(a, b), 0.1, 1e-15);
    const auto c = trace_of({0.0, 1.0}, {1.0, 0.3});
    EXPECT_NEAR(trace_distance_l2(a, c), std::sqrt(0.02), 1e-15);
}

TEST(Distance, SymmetricAndTriangle) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto t = grid(1.0, 30);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x(30), y(30), z(30);
        for (int i = 0; i < 30; ++i) x[i] = u(rng), y[i] = u(rng), z[i] = u(rng);
        const auto a = trace_of(t, x), b = trace_of(t, y), c = trace_of(t, z);
        ASSERT_DOUBLE_EQ(trace_distance_l2(a, b), trace_distance_l2(b, a));
        ASSERT_LE(trace_distance_l2(a, c), trace_distance_l2(a, b) + trace_distance_l2(b, c) + 1e-15);
    }
}

TEST(Distance, MismatchedGrids) {
    const auto a = trace_of({0.0, 1.0}, {1.0, 0.5});
    EXPECT_THROW(trace_distance_l2(a, trace_of({0.0, 1.0, 2.0}, {1.0, 0.5, 0.2})), Error);
    EXPECT_THROW(trace_distance_l2(a, trace_of({0.0, 1.5}, {1.0, 0.5})), Error);
}

TEST(Parallel, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(LinearFit, ExactLine) {
    const auto f = linear_fit({{100, 0.1}, {200, 0.4}, {300, 0.7}, {400, 1.0}});
    EXPECT_NEAR(f.slope, 0.003, 1e-15);
    EXPECT_NEAR(f.intercept, -0.2, 1e-13);
    EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
}

TEST(LinearFit, MatchesOracleAndIgnoresOrder) {
    std::vector<std::pair<double, double>> pts{{100, 0.12}, {200, 0.41}, {300, 0.73}, {400, 1.09}};
    const auto f = linear_fit(pts);
    const auto [slope, intercept] = oracle::ols({100, 200, 300, 400}, {0.12, 0.41, 0.73, 1.09});
    EXPECT_NEAR(f.slope, slope, 1e-12);
    EXPECT_NEAR(f.intercept, intercept, 1e-10);
    std::reverse(pts.begin(), pts.end());
    std::swap(pts[0], pts[2]);
    const auto g = linear_fit(pts);
    EXPECT_NEAR(g.slope, f.slope, 1e-15);
    EXPECT_NEAR(g.intercept, f.intercept, 1e-13);
    EXPECT_GT(f.r_squared, 0.99);
    EXPECT_LE(f.r_squared, 1.0);
}

TEST(LinearFit, FlatDataHasZeroSlope) {
    const auto f = linear_fit({{1, 0.5}, {2, 0.5}, {3, 0.5}});
    EXPECT_EQ(f.slope, 0.0);
    EXPECT_DOUBLE_EQ(f.intercept, 0.5);
    EXPECT_EQ(f.r_squared, 1.0);
}

TEST(LinearFit, NoisySlopeWithinFivePercent) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.01);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 40; ++i) {
        const double x = 50.0 + 10.0 * i;
        pts.push_back({x, 0.002 * x + 0.05 + g(rng)});
    }
    EXPECT_NEAR(linear_fit(pts).slope, 0.002, 0.0001);
}

TEST(LinearFit, Degenerate) {
    EXPECT_THROW(linear_fit({{100, 0.1}}), Error);
    try {
        linear_fit({{100, 0.1}, {100, 0.3}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Argument);
    }
}

TEST(Interpolate, Examples) {
    LinearFit f;
    f.slope = 0.003;
    f.intercept = -0.2;
    EXPECT_NEAR(interpolate_delta(0.5, f), 700.0 / 3.0, 1e-10);
    EXPECT_NEAR(interpolate_delta(-0.2, f), 0.0, 1e-15);
}

TEST(Interpolate, RoundTrip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    LinearFit f;
    f.slope = 0.0025;
    f.intercept = 0.04;
    for (int i = 0; i < 100; ++i) {
        const double d = u(rng);
        ASSERT_NEAR(interpolate_delta(f.predict(d), f), d, 1e-9);
    }
}

TEST(Interpolate, Errors) {
    LinearFit flat;
    flat.slope = 0.0;
    try {
        interpolate_delta(0.5, flat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonInvertible);
    }
    LinearFit f;
    f.slope = 0.003;
    f.intercept = 0.8;
    try {
        interpolate_delta(0.5, f);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
}

TEST(HeomFit, RecoversOwnTrace) {
    const auto t = grid(5.0, 51);
    const auto cfg = light_heom();
    const auto target = heom_population_trace({1.5, 1.0}, BathParams{0.4, 11.0, 1.0}, cfg, t);
    SearchGrid g;
    g.lambda_min = 0.1;
    g.lambda_max = 0.7;
    g.n_lambda = 4; // nodes 0.1, 0.3, 0.5, 0.7 and J 0.5, 1.0, 1.5
    g.j_min = 0.5;
    g.j_max = 1.5;
    g.n_j = 3;
    g.refine_evaluations = 30;
    const auto res = fit_heom_params(target, FixedHeomParams{}, g, cfg);
    EXPECT_NEAR(res.lambda_h, 0.4, 0.02);
    EXPECT_NEAR(res.j_h, 1.0, 0.02);
    EXPECT_LT(res.residual, 2e-3);
    EXPECT_EQ(res.grid.size(), 12u);
}

TEST(HeomFit, GridPointIsExactHit) {
    const auto t = grid(4.0, 41);
    const auto cfg = light_heom();
    const auto target = heom_population_trace({1.5, 1.0}, BathParams{0.4, 11.0, 1.0}, cfg, t);
    SearchGrid g;
    g.lambda_min = 0.2;
    g.lambda_max = 0.6;
    g.n_lambda = 3;
    g.j_min = 0.5;
    g.j_max = 1.5;
    g.n_j = 3;
    g.refine_evaluations = 0;
    const auto res = fit_heom_params(target, FixedHeomParams{}, g, cfg);
    EXPECT_DOUBLE_EQ(res.lambda_h, 0.4);
    EXPECT_DOUBLE_EQ(res.j_h, 1.0);
    EXPECT_LT(res.residual, 1e-12);
    EXPECT_TRUE(res.refine_history.empty());
}

TEST(HeomFit, ClosedTracePinsLambdaToLowerBound) {
    const auto t = grid(6.0, 61);
    std::vector<double> p1;
    for (double x : t) p1.push_back(oracle::p1_exact(1.5, 1.0, x));
    SearchGrid g;
    g.n_lambda = 5;
    g.n_j = 5;
    g.refine_evaluations = 30;
    const auto res = fit_heom_params(trace_of(t, p1), FixedHeomParams{}, g, light_heom());
    EXPECT_NEAR(res.lambda_h, g.lambda_min, 1e-2);
    EXPECT_NEAR(res.j_h, 1.0, 0.03);
}

TEST(HeomFit, RefinementHistoryNonIncreasing) {
    const auto t = grid(4.0, 41);
    const auto target = heom_population_trace({1.5, 0.9}, BathParams{0.6, 11.0, 1.0}, light_heom(), t);
    SearchGrid g;
    g.n_lambda = 4;
    g.n_j = 4;
    g.refine_evaluations = 25;
    const auto res = fit_heom_params(target, FixedHeomParams{}, g, light_heom());
    ASSERT_FALSE(res.refine_history.empty());
    for (std::size_t i = 1; i < res.refine_history.size(); ++i)
        EXPECT_LE(res.refine_history[i], res.refine_history[i - 1]);
    double grid_best = INFINITY;
    for (const auto& p : res.grid) grid_best = std::min(grid_best, p.residual);
    EXPECT_LE(res.residual, grid_best);
    EXPECT_GE(res.lambda_h, g.lambda_min);
    EXPECT_LE(res.lambda_h, g.lambda_max);
}

TEST(HeomFit, InvalidGridRejected) {
    SearchGrid g;
    g.lambda_min = 1.0;
    g.lambda_max = 0.5;
    EXPECT_THROW(fit_heom_params(trace_of({0.0, 1.0}, {1.0, 0.5}), FixedHeomParams{}, g, light_heom()), Error);
}

TEST(HeomFit, AllEvaluationsFailing) {
    FixedHeomParams bad;
    bad.kT = -1.0;
    SearchGrid g;
    g.n_lambda = 2;
    g.n_j = 2;
    try {
        fit_heom_params(trace_of({0.0, 1.0}, {1.0, 0.5}), bad, g, light_heom());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Calibration);
    }
}

TEST(Calibration, LambdaRisesWithBlockRate) {
    NoiseConfig noise;
    noise.depol_1q = 0.002;
    SearchGrid g;
    g.n_lambda = 6;
    g.n_j = 5;
    g.refine_evaluations = 20;
    const auto t = grid(6.0, 61);
    std::vector<double> lambdas;
    for (double d : {100.0, 200.0, 300.0}) {
        const auto raw = run_dynamics({1.5, 1.0}, d, TrotterSchedule::linear(0.05), noise, t);
        const auto p = process_trace(raw, gibbs_population({1.5, 1.0}, 1.0, EnergyModel::SiteEnergies));
        lambdas.push_back(fit_heom_params(p.fixed, FixedHeomParams{}, g, light_heom()).lambda_h);
    }
    EXPECT_LT(lambdas[0], lambdas[1]);
    EXPECT_LT(lambdas[1], lambdas[2]);
}

TEST(Pipeline, StagesConsistent) {
    NoiseConfig noise;
    noise.depol_1q = 0.002;
    const auto raw = run_dynamics({1.5, 1.0}, 160.0, TrotterSchedule::linear(0.05), noise, grid(6.0, 61));
    const auto p = process_trace(raw, 0.05);
    EXPECT_EQ(p.norm.p1.front(), 1.0);
    EXPECT_EQ(p.fixed.p1.front(), 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        ASSERT_NEAR(p.leak.p1[i] + p.leak.p2[i], 1.0, 1e-15);
        ASSERT_NEAR(p.fixed.p1[i] + p.fixed.p2[i], 1.0, 1e-15);
    }
    const auto again = zero_time_normalize(leak_renormalize(p.norm)).trace;
    for (std::size_t i = 0; i < raw.size(); ++i) ASSERT_NEAR(again.p1[i], p.norm.p1[i], 1e-15);
}
