// dimerlab: command-line front end
//
//   dimerlab <command> [--config FILE] [--out DIR] [--seed N] [--override key=value]...
//   dimerlab plot FILE... --out FILE.svg [--column NAME]
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dimerlab/cli.hpp"

namespace {

struct Options {
    std::string config;
    std::string out{"out"};
    std::uint64_t seed{0};
    bool seed_given{false};
    std::vector<std::string> overrides;
};

dimerlab::RunConfig load_config(const Options& o) {
    dimerlab::RunConfig cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw dimerlab::ParseError(o.config, "cannot open config file");
        cfg = dimerlab::parse_config(in);
    }
    for (const auto& a : o.overrides) dimerlab::apply_override(cfg, a);
    if (o.seed_given) cfg.run.seed = o.seed;
    dimerlab::validate(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dimerlab: noisy-circuit, HEOM and transfer-tensor experiments on a two-site dimer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dimerlab::kVersion);

    Options opt;
    std::string chosen;
    for (const auto& name : dimerlab::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "configuration file (section.key = value lines)");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", opt.seed, "random seed (overrides run.seed)")
            ->each([&](const std::string&) { opt.seed_given = true; });
        sub->add_option("--override", opt.overrides, "key=value, repeatable")->allow_extra_args(false);
        sub->callback([&chosen, name] { chosen = name; });
    }

    std::vector<std::string> plot_files;
    std::string plot_out, plot_column;
    auto* plot = app.add_subcommand("plot", "render CSV columns as an SVG line plot");
    plot->add_option("files", plot_files, "CSV files")->required();
    plot->add_option("--out", plot_out, "output SVG file")->required();
    plot->add_option("--column", plot_column, "column to plot (default: last column)");
    plot->callback([&chosen] { chosen = "plot"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (chosen == "plot") {
            dimerlab::plot_command(plot_files, plot_out, plot_column);
            std::cout << plot_out << '\n';
            return 0;
        }
        dimerlab::RunConfig cfg;
        try {
            cfg = load_config(opt);
        } catch (const dimerlab::Error& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 1;
        }
        const auto out = dimerlab::run_command(chosen, cfg, opt.out);
        for (const auto& f : out.files) std::cout << opt.out << '/' << f << '\n';
        return 0;
    } catch (const dimerlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
