// cli.hpp: experiment commands behind the dimerlab executable

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dimerlab/calib.hpp"
#include "dimerlab/circuit.hpp"
#include "dimerlab/config.hpp"
#include "dimerlab/csv.hpp"
#include "dimerlab/heom.hpp"
#include "dimerlab/postproc.hpp"
#include "dimerlab/svg.hpp"
#include "dimerlab/ttm.hpp"

namespace dimerlab {

inline constexpr const char* kVersion = "0.1.0";

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"closed", "noisy", "heom", "fit-heom",
                                                "calib-line", "ttm-extend", "identity-scan"};
    return names;
}

struct CommandOutput {
    std::vector<std::string> files; // written paths relative to the output directory
    nlohmann::ordered_json result = nlohmann::ordered_json::object();
};

namespace cli_detail {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline Table pipeline_table(const ProcessedTrace& p) {
    Table t{{"t", "p1_raw", "p2_raw", "p1_leak", "p1_norm", "p1_fixed"}, {}};
    for (std::size_t i = 0; i < p.raw.size(); ++i)
        t.rows.push_back({p.raw.times[i], p.raw.p1[i], p.raw.p2[i], p.leak.p1[i], p.norm.p1[i], p.fixed.p1[i]});
    return t;
}

/// Same schema for traces that need no measurement processing.
inline Table plain_table(const PopulationTrace& tr) {
    Table t{{"t", "p1_raw", "p2_raw", "p1_leak", "p1_norm", "p1_fixed"}, {}};
    for (std::size_t i = 0; i < tr.size(); ++i)
        t.rows.push_back({tr.times[i], tr.p1[i], tr.p2[i], tr.p1[i], tr.p1[i], tr.p1[i]});
    return t;
}

inline Table density_table(const std::vector<double>& times, const std::vector<Mat2>& states) {
    Table t{{"t", "rho00_re", "rho00_im", "rho01_re", "rho01_im", "rho10_re", "rho10_im", "rho11_re", "rho11_im"},
            {}};
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Mat2& r = states[i];
        t.rows.push_back({times[i], r(0, 0).real(), r(0, 0).imag(), r(0, 1).real(), r(0, 1).imag(), r(1, 0).real(),
                          r(1, 0).imag(), r(1, 1).real(), r(1, 1).imag()});
    }
    return t;
}

inline json fit_json(const DecayFit& f) {
    return {{"alpha", f.alpha},         {"omega", f.omega},       {"amplitude", f.amplitude},
            {"phase", f.phase},         {"baseline", f.baseline}, {"residual_rms", f.residual_rms}};
}

inline HeomConfig calib_heom(const RunConfig& cfg) {
    HeomConfig h = cfg.heom;
    h.depth = cfg.calib.heom_depth;
    h.matsubara = cfg.calib.heom_matsubara;
    return h;
}

inline double equilibrium_target(const RunConfig& cfg) {
    return gibbs_population(cfg.system, cfg.bath.kT, cfg.postproc.energy_model);
}

inline ProcessedTrace simulate_processed(const RunConfig& cfg, double delta_q) {
    const auto raw =
        run_dynamics(cfg.system, delta_q, cfg.trotter, cfg.noise, cfg.run.grid(), cfg.run_mode(), cfg.run.seed);
    return process_trace(raw, equilibrium_target(cfg));
}

inline FixedHeomParams fixed_params(const RunConfig& cfg) {
    return {cfg.system.epsilon, cfg.bath.gamma, cfg.bath.kT};
}

inline void write(const fs::path& dir, const std::string& name, const Table& t, CommandOutput& out) {
    write_csv((dir / name).string(), t);
    out.files.push_back(name);
}

// --- individual commands ----------------------------------------------------

inline void closed(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto grid = cfg.run.grid();
    const auto raw = run_dynamics(cfg.system, 0.0, cfg.trotter, NoiseConfig{}, grid);
    const auto processed = process_trace(raw, equilibrium_target(cfg));
    write(dir, "trace.csv", pipeline_table(processed), out);

    Table rabi{{"t", "p1_exact", "p1_trotter", "error"}, {}};
    double max_err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double exact = rabi_population(cfg.system, grid[i]);
        const double err = raw.p1[i] - exact;
        max_err = std::max(max_err, std::abs(err));
        rabi.rows.push_back({grid[i], exact, raw.p1[i], err});
    }
    write(dir, "rabi.csv", rabi, out);
    out.result["max_abs_error"] = max_err;
}

inline void noisy(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto p = simulate_processed(cfg, cfg.run.delta_q);
    write(dir, "trace.csv", pipeline_table(p), out);
    const auto rec = reconstruct_offdiagonals(p.norm, p.fit, cfg.system, cfg.postproc.coherence);
    write(dir, "rho.csv", density_table(p.norm.times, rec.states), out);
    std::size_t repaired = 0;
    for (bool r : rec.repaired) repaired += r ? 1 : 0;
    out.result["fit"] = fit_json(p.fit);
    out.result["equilibrium_q"] = equilibrium_target(cfg);
    out.result["clipped_points"] = p.clipped;
    out.result["repaired_points"] = repaired;
}

inline void heom(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto grid = cfg.run.grid();
    const auto tr = heom_population_trace(cfg.system, cfg.bath, cfg.heom, grid);
    write(dir, "trace.csv", plain_table(tr), out);
    write(dir, "rho.csv", density_table(grid, tr.rho_series), out);
    double trace_err = 0.0;
    for (const auto& r : tr.rho_series) trace_err = std::max(trace_err, std::abs(r.trace() - 1.0));
    out.result["max_trace_error"] = trace_err;
}

inline json heom_fit_json(const HeomFitResult& f) {
    return {{"lambda_h", f.lambda_h}, {"j_h", f.j_h}, {"residual", f.residual},
            {"refine_iterations", f.refine_history.size()}};
}

inline void fit_heom(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto p = simulate_processed(cfg, cfg.run.delta_q);
    write(dir, "trace.csv", pipeline_table(p), out);
    const auto fit = fit_heom_params(p.fixed, fixed_params(cfg), cfg.calib.grid, calib_heom(cfg), threads_from_env());

    Table grid{{"lambda", "j", "residual"}, {}};
    for (const auto& g : fit.grid) grid.rows.push_back({g.lambda, g.j, g.ok ? g.residual : NAN});
    write(dir, "grid.csv", grid, out);

    const auto best = heom_population_trace({cfg.system.epsilon, fit.j_h},
                                            {fit.lambda_h, cfg.bath.gamma, cfg.bath.kT}, calib_heom(cfg),
                                            p.fixed.times);
    Table cmp{{"t", "p1_quantum", "p1_heom"}, {}};
    for (std::size_t i = 0; i < best.size(); ++i) cmp.rows.push_back({best.times[i], p.fixed.p1[i], best.p1[i]});
    write(dir, "fit.csv", cmp, out);

    out.result["decay_fit"] = fit_json(p.fit);
    out.result["heom_fit"] = heom_fit_json(fit);
}

inline void calib_line(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const unsigned threads = threads_from_env();
    Table calib{{"delta_q", "lambda_h", "j_h", "residual"}, {}};
    std::vector<std::pair<double, double>> lam, jay;
    for (double d : cfg.calib.delta_values) {
        const auto p = simulate_processed(cfg, d);
        const auto fit = fit_heom_params(p.fixed, fixed_params(cfg), cfg.calib.grid, calib_heom(cfg), threads);
        calib.rows.push_back({d, fit.lambda_h, fit.j_h, fit.residual});
        lam.emplace_back(d, fit.lambda_h);
        jay.emplace_back(d, fit.j_h);
    }
    write(dir, "calib.csv", calib, out);

    const auto lf = linear_fit(lam);
    const auto jf = linear_fit(jay);
    out.result["lambda_line"] = {{"slope", lf.slope}, {"intercept", lf.intercept}, {"r_squared", lf.r_squared}};
    out.result["j_line"] = {{"slope", jf.slope}, {"intercept", jf.intercept}, {"r_squared", jf.r_squared}};

    const double delta = interpolate_delta(cfg.calib.lambda_target, lf);
    const auto p = simulate_processed(cfg, delta);
    write(dir, "trace.csv", pipeline_table(p), out);
    const auto refit = fit_heom_params(p.fixed, fixed_params(cfg), cfg.calib.grid, calib_heom(cfg), threads);
    out.result["closed_loop"] = {{"lambda_target", cfg.calib.lambda_target},
                                 {"delta_q", delta},
                                 {"lambda_refit", refit.lambda_h},
                                 {"j_refit", refit.j_h},
                                 {"relative_error",
                                  std::abs(refit.lambda_h - cfg.calib.lambda_target) /
                                      std::max(cfg.calib.lambda_target, 1e-300)}};
}

inline std::vector<double> uniform_grid(double t0, double dt, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = t0 + dt * static_cast<double>(k);
    return g;
}

/// Trajectories from the four canonical initial states, sampled at `times`.
inline std::vector<std::vector<Mat2>> training_trajectories(const RunConfig& cfg, const std::vector<double>& times) {
    std::vector<std::vector<Mat2>> out;
    for (const Mat2& rho0 : canonical_initial_states()) {
        if (cfg.ttm.source == "heom") {
            out.push_back(heom_propagate(cfg.system, cfg.bath, cfg.heom, rho0, times));
        } else {
            out.push_back(run_dynamics(cfg.system, cfg.run.delta_q, cfg.trotter, cfg.noise, times, RunMode::exact(),
                                       cfg.run.seed, rho0)
                              .rho_series);
        }
    }
    return out;
}

inline std::vector<Mat2> direct_trajectory(const RunConfig& cfg, const std::vector<double>& times) {
    Mat2 s1 = Mat2::Zero();
    s1(0, 0) = 1.0;
    if (cfg.ttm.source == "heom") return heom_propagate(cfg.system, cfg.bath, cfg.heom, s1, times);
    return run_dynamics(cfg.system, cfg.run.delta_q, cfg.trotter, cfg.noise, times, RunMode::exact(), cfg.run.seed, s1)
        .rho_series;
}

inline void ttm_extend(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto& tc = cfg.ttm;
    const auto train_times = uniform_grid(tc.train_t0, tc.train_dt, static_cast<std::size_t>(tc.train_n));
    const auto set = TrajectorySet::from_samples(train_times, training_trajectories(cfg, train_times));
    const auto tt = transfer_tensors(build_dynamical_maps(set));

    std::ofstream tensors(dir / "tensors.txt", std::ios::binary);
    if (!tensors) throw Error(ErrorKind::Io, "cannot write tensors.txt");
    write_superops(tensors, tt.dt, tt.tensors);
    out.files.push_back("tensors.txt");

    const auto n_target =
        static_cast<std::size_t>(std::llround((tc.t_end - tc.train_t0) / tc.train_dt));
    const auto all_times = uniform_grid(tc.train_t0, tc.train_dt, n_target + 1);
    const auto direct = direct_trajectory(cfg, all_times);
    const std::vector<Mat2> history(direct.begin(), direct.begin() + static_cast<long>(tt.memory() + 1));
    const auto ext = extend_dynamics(tt, history, n_target);

    write(dir, "extended.csv", density_table(all_times, ext.states), out);

    PopulationTrace tr;
    tr.times = all_times;
    Table cmp{{"t", "p1_ttm", "p1_direct", "abs_error"}, {}};
    double max_err = 0.0;
    for (std::size_t i = 0; i < all_times.size(); ++i) {
        tr.p1.push_back(ext.states[i](0, 0).real());
        tr.p2.push_back(ext.states[i](1, 1).real());
        const double e = std::abs(ext.states[i](0, 0).real() - direct[i](0, 0).real());
        max_err = std::max(max_err, e);
        cmp.rows.push_back({all_times[i], ext.states[i](0, 0).real(), direct[i](0, 0).real(), e});
    }
    write(dir, "trace.csv", plain_table(tr), out);
    write(dir, "compare.csv", cmp, out);
    out.result["n_k"] = tt.memory();
    out.result["rows"] = all_times.size();
    out.result["max_abs_error_p1"] = max_err;
    out.result["resampled"] = set.resampled;
}

inline void identity_scan(const RunConfig& cfg, const fs::path& dir, CommandOutput& out) {
    const auto& ic = cfg.identity;
    const auto scan = identity_gate_scan(ic.kind, ic.reps, ic.theta, ic.phi, cfg.noise);
    Table t{{"rep", "x", "y", "z", "radius"}, {}};
    const Eigen::Vector3d r0(std::sin(ic.theta) * std::cos(ic.phi), std::sin(ic.theta) * std::sin(ic.phi),
                             std::cos(ic.theta));
    t.rows.push_back({0.0, r0.x(), r0.y(), r0.z(), r0.norm()});
    for (std::size_t i = 0; i < scan.size(); ++i)
        t.rows.push_back({static_cast<double>(i + 1), scan[i].x(), scan[i].y(), scan[i].z(), scan[i].norm()});
    write(dir, "trace.csv", t, out);
    out.result["final_radius"] = scan.empty() ? r0.norm() : scan.back().norm();
}

} // namespace cli_detail

/// Runs one subcommand, writing its CSV files and manifest.json into out_dir.
inline CommandOutput run_command(const std::string& name, const RunConfig& cfg, const std::filesystem::path& out_dir) {
    namespace cd = cli_detail;
    using Fn = void (*)(const RunConfig&, const std::filesystem::path&, CommandOutput&);
    static const std::vector<std::pair<std::string, Fn>> table{
        {"closed", cd::closed},         {"noisy", cd::noisy},           {"heom", cd::heom},
        {"fit-heom", cd::fit_heom},     {"calib-line", cd::calib_line}, {"ttm-extend", cd::ttm_extend},
        {"identity-scan", cd::identity_scan}};

    Fn fn = nullptr;
    for (const auto& [n, f] : table)
        if (n == name) fn = f;
    if (!fn) throw Error(ErrorKind::Argument, "unknown command '" + name + "'");

    std::filesystem::create_directories(out_dir);
    CommandOutput out;
    fn(cfg, out_dir, out);

    cd::json manifest;
    manifest["program"] = "dimerlab";
    manifest["version"] = kVersion;
    manifest["command"] = name;
    manifest["seed"] = cfg.run.seed;
    cd::json config = cd::json::object();
    for (const auto& [k, v] : config_echo(cfg)) config[k] = v;
    manifest["config"] = config;
    const auto grid = cfg.run.grid();
    manifest["grid"] = {{"t_min", grid.front()}, {"t_max", grid.back()}, {"n_points", grid.size()}};
    manifest["outputs"] = out.files;
    manifest["result"] = out.result;

    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    if (!mf) throw Error(ErrorKind::Io, "cannot write manifest.json");
    mf << manifest.dump(2) << '\n';
    out.files.push_back("manifest.json");
    return out;
}

/// Overlays one column from each CSV file as an SVG line plot; legend entries are file stems.
/// Nothing is written unless every input parses.
inline void plot_command(const std::vector<std::string>& files, const std::string& out_file,
                         const std::string& column = "") {
    if (files.empty()) throw Error(ErrorKind::Argument, "plot: no input files");
    std::vector<Series> series;
    for (const auto& f : files) {
        const Table t = read_csv(f);
        const int ycol = column.empty() ? static_cast<int>(t.header.size()) - 1 : t.column(column);
        if (ycol < 1) throw ParseError(f, "column '" + column + "' not found");
        Series s{std::filesystem::path(f).stem().string(), {}, {}};
        for (const auto& row : t.rows) {
            s.x.push_back(row[0]);
            s.y.push_back(row[static_cast<std::size_t>(ycol)]);
        }
        series.push_back(std::move(s));
    }
    PlotStyle style;
    style.y_label = column.empty() ? "value" : column;
    const std::string svg = render_svg(series, style);
    std::ofstream os(out_file, std::ios::binary);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + out_file);
    os << svg;
}

} // namespace dimerlab
