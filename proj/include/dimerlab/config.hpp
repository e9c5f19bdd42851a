// config.hpp: run configuration as flat "section.key = value" text
//
// Lines starting with '#' and blank lines are ignored. Every key is optional;
// unknown keys and out-of-range values raise ParseError naming the key.

#pragma once

#include <charconv>
#include <limits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dimerlab/calib.hpp"
#include "dimerlab/circuit.hpp"
#include "dimerlab/errors.hpp"
#include "dimerlab/heom.hpp"
#include "dimerlab/postproc.hpp"
#include "dimerlab/qdyn.hpp"
#include "dimerlab/ttm.hpp"

namespace dimerlab {

struct RunSection {
    double delta_q{160.0};
    double t_max{6.0};
    int n_points{61};
    long shots{8192};
    std::uint64_t seed{kDefaultSeed};
    std::string mode{"exact"}; // exact | shots

    std::vector<double> grid() const {
        std::vector<double> t(static_cast<std::size_t>(n_points));
        for (int i = 0; i < n_points; ++i)
            t[static_cast<std::size_t>(i)] = n_points == 1 ? 0.0 : t_max * i / (n_points - 1);
        return t;
    }
};

struct TtmSection {
    double train_t0{0.1};
    double train_dt{0.05};
    int train_n{69}; // grid points t0 + k dt, k = 0..train_n-1
    double t_end{9.0};
    std::string source{"circuit"}; // circuit | heom
};

struct PostprocSection {
    EnergyModel energy_model{EnergyModel::SiteEnergies};
    CoherenceModel coherence{CoherenceModel::SelfConsistent};
};

struct CalibSection {
    SearchGrid grid{};
    std::vector<double> delta_values{100.0, 200.0, 300.0, 400.0};
    double lambda_target{0.5};
    int heom_depth{4};
    int heom_matsubara{3};
};

struct IdentitySection {
    IdentityKind kind{IdentityKind::XZXZZsq};
    int reps{100};
    double theta{0.0}; // initial Bloch polar angle
    double phi{0.0};
};

struct RunConfig {
    SystemParams system{};
    BathParams bath{};
    NoiseConfig noise{0.002, 0.0, 0.0, 0.0};
    RunSection run{};
    TrotterSchedule trotter{};
    HeomConfig heom{};
    TtmSection ttm{};
    PostprocSection postproc{};
    CalibSection calib{};
    IdentitySection identity{};

    RunMode run_mode() const { return run.mode == "shots" ? RunMode::sampled(run.shots) : RunMode::exact(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ParseError(key, "expected a finite number, got '" + v + "'");
    return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ParseError(key, "expected an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ParseError(key, "expected true or false, got '" + v + "'");
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
    return s;
}

} // namespace detail

/// Table of every recognised key with its parser and printer.
class ConfigSchema {
public:
    struct Entry {
        std::string key;
        std::function<void(RunConfig&, const std::string&)> set;
        std::function<std::string(const RunConfig&)> get;
    };

    static const std::vector<Entry>& entries() {
        static const std::vector<Entry> table = build();
        return table;
    }

private:
    template <typename Get>
    static Entry real(std::string key, Get field, double lo, double hi, bool lo_open = false) {
        return {key,
                [key, field, lo, hi, lo_open](RunConfig& c, const std::string& v) {
                    const double x = detail::parse_double(key, v);
                    if (x < lo || x > hi || (lo_open && x == lo)) {
                        throw ParseError(key, "value " + v + " outside " + std::string(lo_open ? "(" : "[") +
                                                  detail::fmt17(lo) + ", " + detail::fmt17(hi) + "]");
                    }
                    field(c) = x;
                },
                [field](const RunConfig& c) { return detail::fmt17(field(const_cast<RunConfig&>(c))); }};
    }

    template <typename Int, typename Get>
    static Entry integer(std::string key, Get field, Int lo, Int hi) {
        return {key,
                [key, field, lo, hi](RunConfig& c, const std::string& v) {
                    const Int x = detail::parse_int<Int>(key, v);
                    if (x < lo || x > hi)
                        throw ParseError(key, "value " + v + " outside [" + std::to_string(lo) + ", " +
                                                  std::to_string(hi) + "]");
                    field(c) = x;
                },
                [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
    }

    template <typename Get>
    static Entry boolean(std::string key, Get field) {
        return {key, [key, field](RunConfig& c, const std::string& v) { field(c) = detail::parse_bool(key, v); },
                [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    }

    static Entry choice(std::string key, std::vector<std::pair<std::string, std::function<void(RunConfig&)>>> options,
                        std::function<std::string(const RunConfig&)> get) {
        return {key,
                [key, options](RunConfig& c, const std::string& v) {
                    std::string allowed;
                    for (const auto& [name, apply] : options) {
                        if (name == v) {
                            apply(c);
                            return;
                        }
                        allowed += (allowed.empty() ? "" : "|") + name;
                    }
                    throw ParseError(key, "expected one of " + allowed + ", got '" + v + "'");
                },
                std::move(get)};
    }

    static std::vector<Entry> build() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<Entry> t;
        t.push_back(real("system.epsilon", [](RunConfig& c) -> double& { return c.system.epsilon; }, -inf, inf));
        t.push_back(real("system.j", [](RunConfig& c) -> double& { return c.system.j_coupling; }, -inf, inf));
        t.push_back(real("bath.lambda", [](RunConfig& c) -> double& { return c.bath.lambda; }, 0.0, inf));
        t.push_back(real("bath.gamma", [](RunConfig& c) -> double& { return c.bath.gamma; }, 0.0, inf, true));
        t.push_back(real("bath.kT", [](RunConfig& c) -> double& { return c.bath.kT; }, 0.0, inf, true));
        t.push_back(real("noise.depol1", [](RunConfig& c) -> double& { return c.noise.depol_1q; }, 0.0, 1.0));
        t.push_back(real("noise.depol2", [](RunConfig& c) -> double& { return c.noise.depol_2q; }, 0.0, 1.0));
        t.push_back(real("noise.overrotation", [](RunConfig& c) -> double& { return c.noise.overrotation_x; }, -inf, inf));
        t.push_back(real("noise.readout", [](RunConfig& c) -> double& { return c.noise.readout_flip; }, 0.0, 1.0));
        t.push_back(real("run.delta_q", [](RunConfig& c) -> double& { return c.run.delta_q; }, 0.0, 1e6));
        t.push_back(real("run.t_max", [](RunConfig& c) -> double& { return c.run.t_max; }, 0.0, 1e4));
        t.push_back(integer<int>("run.n_points", [](RunConfig& c) -> int& { return c.run.n_points; }, 1, 1000000));
        t.push_back(integer<long>("run.shots", [](RunConfig& c) -> long& { return c.run.shots; }, 1L, 1000000000L));
        t.push_back(integer<std::uint64_t>("run.seed", [](RunConfig& c) -> std::uint64_t& { return c.run.seed; },
                                           std::uint64_t{0}, std::numeric_limits<std::uint64_t>::max()));
        t.push_back(choice("run.mode",
                           {{"exact", [](RunConfig& c) { c.run.mode = "exact"; }},
                            {"shots", [](RunConfig& c) { c.run.mode = "shots"; }}},
                           [](const RunConfig& c) { return c.run.mode; }));
        t.push_back(choice("trotter.mode",
                           {{"linear", [](RunConfig& c) { c.trotter.mode = TrotterSchedule::Mode::Linear; }},
                            {"constant", [](RunConfig& c) { c.trotter.mode = TrotterSchedule::Mode::Constant; }}},
                           [](const RunConfig& c) {
                               return std::string(c.trotter.mode == TrotterSchedule::Mode::Linear ? "linear" : "constant");
                           }));
        t.push_back(real("trotter.dt_target", [](RunConfig& c) -> double& { return c.trotter.dt_target; }, 0.0, inf, true));
        t.push_back(integer<int>("trotter.m_const", [](RunConfig& c) -> int& { return c.trotter.m_const; }, 1, 1000000));
        t.push_back(integer<int>("heom.depth", [](RunConfig& c) -> int& { return c.heom.depth; }, 1, 40));
        t.push_back(integer<int>("heom.matsubara", [](RunConfig& c) -> int& { return c.heom.matsubara; }, 0, 100));
        t.push_back(real("heom.rel_tol", [](RunConfig& c) -> double& { return c.heom.rel_tol; }, 0.0, 1.0, true));
        t.push_back(real("heom.abs_tol", [](RunConfig& c) -> double& { return c.heom.abs_tol; }, 0.0, 1.0, true));
        t.push_back(boolean("heom.terminator", [](RunConfig& c) -> bool& { return c.heom.terminator; }));
        t.push_back(boolean("heom.matsubara_correction", [](RunConfig& c) -> bool& { return c.heom.matsubara_correction; }));
        t.push_back(boolean("heom.shared_bath", [](RunConfig& c) -> bool& { return c.heom.shared_bath; }));
        t.push_back(real("ttm.train_t0", [](RunConfig& c) -> double& { return c.ttm.train_t0; }, 0.0, inf));
        t.push_back(real("ttm.train_dt", [](RunConfig& c) -> double& { return c.ttm.train_dt; }, 0.0, inf, true));
        t.push_back(integer<int>("ttm.train_n", [](RunConfig& c) -> int& { return c.ttm.train_n; }, 2, 1000000));
        t.push_back(real("ttm.t_end", [](RunConfig& c) -> double& { return c.ttm.t_end; }, 0.0, inf));
        t.push_back(choice("ttm.source",
                           {{"circuit", [](RunConfig& c) { c.ttm.source = "circuit"; }},
                            {"heom", [](RunConfig& c) { c.ttm.source = "heom"; }}},
                           [](const RunConfig& c) { return c.ttm.source; }));
        t.push_back(choice("postproc.energy_model",
                           {{"site", [](RunConfig& c) { c.postproc.energy_model = EnergyModel::SiteEnergies; }},
                            {"gibbs", [](RunConfig& c) { c.postproc.energy_model = EnergyModel::GibbsOfH; }}},
                           [](const RunConfig& c) { return to_string(c.postproc.energy_model); }));
        t.push_back(choice("postproc.coherence",
                           {{"self_consistent", [](RunConfig& c) { c.postproc.coherence = CoherenceModel::SelfConsistent; }},
                            {"diagonal_transform",
                             [](RunConfig& c) { c.postproc.coherence = CoherenceModel::DiagonalTransform; }}},
                           [](const RunConfig& c) {
                               return std::string(c.postproc.coherence == CoherenceModel::SelfConsistent
                                                      ? "self_consistent"
                                                      : "diagonal_transform");
                           }));
        t.push_back(real("calib.lambda_min", [](RunConfig& c) -> double& { return c.calib.grid.lambda_min; }, 0.0, inf));
        t.push_back(real("calib.lambda_max", [](RunConfig& c) -> double& { return c.calib.grid.lambda_max; }, 0.0, inf));
        t.push_back(integer<int>("calib.n_lambda", [](RunConfig& c) -> int& { return c.calib.grid.n_lambda; }, 1, 1000));
        t.push_back(real("calib.j_min", [](RunConfig& c) -> double& { return c.calib.grid.j_min; }, 0.0, inf));
        t.push_back(real("calib.j_max", [](RunConfig& c) -> double& { return c.calib.grid.j_max; }, 0.0, inf));
        t.push_back(integer<int>("calib.n_j", [](RunConfig& c) -> int& { return c.calib.grid.n_j; }, 1, 1000));
        t.push_back(integer<int>("calib.refine_evaluations",
                                 [](RunConfig& c) -> int& { return c.calib.grid.refine_evaluations; }, 0, 100000));
        t.push_back({"calib.delta_values",
                     [](RunConfig& c, const std::string& v) {
                         std::vector<double> out;
                         std::stringstream ss(v);
                         std::string item;
                         while (std::getline(ss, item, ',')) {
                             const double x = detail::parse_double("calib.delta_values", detail::trim(item));
                             if (x < 0.0) throw ParseError("calib.delta_values", "values must be >= 0");
                             out.push_back(x);
                         }
                         if (out.size() < 2) throw ParseError("calib.delta_values", "need at least two values");
                         c.calib.delta_values = out;
                     },
                     [](const RunConfig& c) { return detail::join_doubles(c.calib.delta_values); }});
        t.push_back(real("calib.lambda_target", [](RunConfig& c) -> double& { return c.calib.lambda_target; }, 0.0, inf));
        t.push_back(integer<int>("calib.heom_depth", [](RunConfig& c) -> int& { return c.calib.heom_depth; }, 1, 40));
        t.push_back(integer<int>("calib.heom_matsubara", [](RunConfig& c) -> int& { return c.calib.heom_matsubara; }, 0, 100));
        t.push_back(choice("identity.kind",
                           {{"xx", [](RunConfig& c) { c.identity.kind = IdentityKind::XX; }},
                            {"xzxz", [](RunConfig& c) { c.identity.kind = IdentityKind::XZXZ; }},
                            {"xzxzz2", [](RunConfig& c) { c.identity.kind = IdentityKind::XZXZZsq; }}},
                           [](const RunConfig& c) {
                               switch (c.identity.kind) {
                               case IdentityKind::XX: return std::string("xx");
                               case IdentityKind::XZXZ: return std::string("xzxz");
                               default: return std::string("xzxzz2");
                               }
                           }));
        t.push_back(integer<int>("identity.reps", [](RunConfig& c) -> int& { return c.identity.reps; }, 0, 10000000));
        t.push_back(real("identity.theta", [](RunConfig& c) -> double& { return c.identity.theta; }, -inf, inf));
        t.push_back(real("identity.phi", [](RunConfig& c) -> double& { return c.identity.phi; }, -inf, inf));
        return t;
    }
};

/// Applies one "key = value" assignment.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& e : ConfigSchema::entries()) {
        if (e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw ParseError(key, "unknown configuration key");
}

/// Cross-field checks that a single key cannot express.
inline void validate(const RunConfig& cfg) {
    if (cfg.calib.grid.lambda_max < cfg.calib.grid.lambda_min)
        throw ParseError("calib.lambda_max", "must be >= calib.lambda_min");
    if (cfg.calib.grid.j_max < cfg.calib.grid.j_min) throw ParseError("calib.j_max", "must be >= calib.j_min");
    const double train_end = cfg.ttm.train_t0 + cfg.ttm.train_dt * (cfg.ttm.train_n - 1);
    if (cfg.ttm.t_end + 1e-9 < train_end) throw ParseError("ttm.t_end", "must not precede the end of the training window");
}

/// Parses a config stream; `source` prefixes line numbers in messages.
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno), "expected 'key = value'");
        apply_setting(cfg, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
    }
    validate(cfg);
    return cfg;
}

/// "key=value" override as given on the command line.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ParseError(assignment, "override must have the form key=value");
    apply_setting(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

/// Every key with its current value, in schema order.
inline std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : ConfigSchema::entries()) out.emplace_back(e.key, e.get(cfg));
    return out;
}

} // namespace dimerlab
