#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "tamopt/cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"tamopt: torque-aware momentum optimizers and experiment harness"};
    app.require_subcommand(1);

    tamopt::cli::CommandOptions options;
    std::string config;
    std::string out_dir;
    std::size_t seeds = 0;
    std::size_t threads = 0;

    for (const auto& name : tamopt::cli::subcommands()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "experiment file (INI)")->required()->check(
            CLI::ExistingFile);
        sub->add_option("--out-dir", out_dir, "output directory (overrides [output] dir)");
        sub->add_option("--seeds", seeds, "number of seeds (overrides [run] seeds)")
            ->check(CLI::Range(1, 1 << 20));
        sub->add_option("--threads", threads, "worker threads (fallback: TAMOPT_THREADS)")
            ->check(CLI::Range(1, 1 << 20));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    options.subcommand = app.get_subcommands().front()->get_name();
    options.config = config;
    if (!out_dir.empty()) {
        options.out_dir = out_dir;
    }
    if (seeds > 0) {
        options.seeds = seeds;
    }
    options.threads = tamopt::cli::resolve_threads(
        threads > 0 ? std::optional<std::size_t>(threads) : std::nullopt);
    return tamopt::cli::run_command(options, std::cout, std::cerr);
}
