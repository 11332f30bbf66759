#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tamopt::cli {

struct CommandOptions {
    std::string subcommand; ///< trajectory, online, warmup, barrier, gridsearch, gradcheck
    std::filesystem::path config;
    std::optional<std::filesystem::path> out_dir; ///< overrides [output] dir
    std::optional<std::size_t> seeds;             ///< overrides [run] seeds
    std::size_t threads = 1;
};

const std::vector<std::string>& subcommands();

/// `flag` if given, else TAMOPT_THREADS, else 1.
std::size_t resolve_threads(std::optional<std::size_t> flag);

/// Runs one subcommand and writes its outputs. Returns the process exit code:
/// 0 on success, 1 when a run fails or a check does not pass, 2 for
/// configuration or usage errors. Failures also print one JSON line starting
/// with {"error": to `err`.
int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err);

} // namespace tamopt::cli
