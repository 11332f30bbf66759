#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tamopt/bench.hpp"

namespace tamopt::cli {

/// Base of every configuration problem. `kind()` is a stable machine-readable
/// tag: missing_file, syntax, unknown_key, range.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string kind, std::string key, std::size_t line, const std::string& what)
        : std::runtime_error(what), m_kind(std::move(kind)), m_key(std::move(key)), m_line(line) {}

    const std::string& kind() const noexcept { return m_kind; }
    const std::string& key() const noexcept { return m_key; }
    std::size_t line() const noexcept { return m_line; } ///< 0 when not tied to a line

private:
    std::string m_kind;
    std::string m_key;
    std::size_t m_line;
};

class MissingFileError : public ConfigError {
public:
    explicit MissingFileError(const std::string& path)
        : ConfigError("missing_file", "", 0, "cannot read config file '" + path + "'") {}
};

class SyntaxError : public ConfigError {
public:
    SyntaxError(std::size_t line, const std::string& what, const std::string& key = "")
        : ConfigError("syntax", key, line, "line " + std::to_string(line) + ": " + what) {}
};

class UnknownKeyError : public ConfigError {
public:
    UnknownKeyError(const std::string& key, std::size_t line, const std::string& what)
        : ConfigError("unknown_key", key, line, "line " + std::to_string(line) + ": " + what) {}
};

class RangeError : public ConfigError {
public:
    RangeError(const std::string& key, std::size_t line, const std::string& what)
        : ConfigError("range", key, line, "line " + std::to_string(line) + ": " + what) {}
};

struct DataSection {
    enum class Source { gaussian_mixture, csv };
    Source source = Source::gaussian_mixture;
    std::filesystem::path path;
    std::size_t classes = 3;
    std::size_t dim = 4;
    std::size_t per_class = 50;
    double spread = 0.5;
    std::uint64_t seed = 0;
};

struct OnlineSection {
    std::size_t tasks = 3;
    double delta = 1.0;
    std::size_t epochs_per_task = 40;
};

struct BarrierSection {
    std::size_t n_alpha = 11;
    std::size_t shared_steps = 0; ///< common trajectory before the two copies split
    std::size_t spawn_steps = 100;
};

struct GridSection {
    std::vector<std::string> optimizers; ///< empty: the [optimizer] name only
    std::vector<double> eta;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> epsilon;
    std::string metric = "final_loss"; ///< final_loss, final_accuracy, online_accuracy
    Goal goal = Goal::minimize;
};

struct GradcheckSection {
    std::size_t points = 10;
    double h = 1e-5;
    double threshold = 1e-5;
};

/// A fully validated experiment with every default filled in.
struct ExperimentFile {
    RunConfig run;
    bool uses_model = false;
    DataSection data;
    std::size_t seeds = 1;
    std::size_t switch_step = 0;
    OnlineSection online;
    BarrierSection barrier;
    GridSection grid;
    GradcheckSection gradcheck;
    std::filesystem::path out_dir = "out";
};

/// INI-style text: `[section]` headers, `key = value` lines, `#` comments.
/// Keys placed before the first section accept the shorthands optimizer,
/// landscape, steps, seed and seeds.
ExperimentFile parse_config(const std::filesystem::path& path);
ExperimentFile parse_config_text(std::string_view text);

} // namespace tamopt::cli
