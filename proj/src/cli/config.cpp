#include "tamopt/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tamopt/io.hpp"

namespace tamopt::cli {

namespace {

struct Entry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
};

struct Section {
    std::string name;
    std::size_t line = 0;
    std::map<std::string, Entry> entries;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"", {"optimizer", "landscape", "steps", "seed", "seeds"}},
        {"optimizer",
         {"name", "eta", "beta", "gamma", "epsilon", "beta2", "c", "weight_decay",
          "damping_override", "bias_correction", "initial_s_hat"}},
        {"landscape",
         {"name", "dim", "curvature", "center", "start", "noise_sigma", "adversary_kappa",
          "adversary_period"}},
        {"model", {"layers", "batch_size", "init_seed"}},
        {"data", {"source", "path", "classes", "dim", "per_class", "spread", "seed"}},
        {"run", {"steps", "seed", "seeds", "telemetry_every"}},
        {"online", {"tasks", "delta", "epochs_per_task"}},
        {"warmup", {"switch_step"}},
        {"barrier", {"n_alpha", "shared_steps", "spawn_steps"}},
        {"grid", {"optimizer", "eta", "beta", "gamma", "epsilon", "metric", "goal"}},
        {"gradcheck", {"points", "h", "threshold"}},
        {"output", {"dir"}},
    };
    return keys;
}

std::map<std::string, Section> tokenize(std::string_view text) {
    std::map<std::string, Section> sections;
    sections[""].name = "";
    std::string current;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw SyntaxError(line_no, "unterminated section header");
            }
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_keys().contains(current) || current.empty()) {
                throw UnknownKeyError(current, line_no, "unknown section [" + current + "]");
            }
            if (sections.contains(current)) {
                throw SyntaxError(line_no, "duplicate section [" + current + "]");
            }
            sections[current].name = current;
            sections[current].line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw SyntaxError(line_no, "expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw SyntaxError(line_no, "missing key before '='");
        }
        if (value.empty()) {
            throw SyntaxError(line_no, "missing value for '" + key + "'");
        }
        const auto& allowed = known_keys().at(current);
        if (!allowed.contains(key)) {
            const std::string where = current.empty() ? "top level" : "[" + current + "]";
            throw UnknownKeyError(key, line_no, "unknown key '" + key + "' in " + where);
        }
        auto& entries = sections[current].entries;
        if (entries.contains(key)) {
            throw SyntaxError(line_no, "duplicate key '" + key + "'");
        }
        entries[key] = Entry{value, line_no, false};
    }
    return sections;
}

// Typed, range-checked access to the keys of one section.
class Reader {
public:
    Reader(std::map<std::string, Section>& sections, const std::string& name)
        : m_section(sections.contains(name) ? &sections.at(name) : nullptr), m_name(name) {}

    bool present() const { return m_section != nullptr; }
    bool has(const std::string& key) const {
        return m_section && m_section->entries.contains(key);
    }
    std::size_t line(const std::string& key) const {
        return has(key) ? m_section->entries.at(key).line : 0;
    }

    std::optional<std::string> text(const std::string& key) {
        if (!has(key)) {
            return std::nullopt;
        }
        auto& e = m_section->entries.at(key);
        e.used = true;
        return e.value;
    }

    double real(const std::string& key, double fallback, double lo, double hi, bool lo_open,
                bool hi_open) {
        const auto raw = text(key);
        if (!raw) {
            return fallback;
        }
        double v = 0.0;
        try {
            v = parse_double(*raw);
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(line(key), qualified(key) + ": " + e.what(), key);
        }
        check_interval(key, v, lo, hi, lo_open, hi_open);
        return v;
    }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t lo) {
        const auto raw = text(key);
        if (!raw) {
            return fallback;
        }
        long long v = 0;
        try {
            v = parse_integer(*raw);
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(line(key), qualified(key) + ": " + e.what(), key);
        }
        if (v < static_cast<long long>(lo)) {
            throw RangeError(key, line(key),
                             qualified(key) + " = " + *raw + " outside [" + std::to_string(lo) +
                                 ", inf)");
        }
        return static_cast<std::size_t>(v);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        const auto raw = text(key);
        if (!raw) {
            return fallback;
        }
        const std::string s(trim(*raw));
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw SyntaxError(line(key), qualified(key) + ": not an unsigned integer '" + s + "'", key);
        }
        return v;
    }

    std::vector<double> reals(const std::string& key, std::vector<double> fallback, double lo,
                              double hi, bool lo_open, bool hi_open) {
        const auto raw = text(key);
        if (!raw) {
            return fallback;
        }
        std::vector<double> out;
        for (const auto& cell : split(*raw, ',')) {
            double v = 0.0;
            try {
                v = parse_double(cell);
            } catch (const std::invalid_argument& e) {
                throw SyntaxError(line(key), qualified(key) + ": " + e.what(), key);
            }
            check_interval(key, v, lo, hi, lo_open, hi_open);
            out.push_back(v);
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::size_t lo) {
        const auto raw = text(key);
        std::vector<std::size_t> out;
        if (!raw) {
            return out;
        }
        for (const auto& cell : split(*raw, ',')) {
            long long v = 0;
            try {
                v = parse_integer(cell);
            } catch (const std::invalid_argument& e) {
                throw SyntaxError(line(key), qualified(key) + ": " + e.what(), key);
            }
            if (v < static_cast<long long>(lo)) {
                throw RangeError(key, line(key),
                                 qualified(key) + " entries must be >= " + std::to_string(lo));
            }
            out.push_back(static_cast<std::size_t>(v));
        }
        return out;
    }

    std::vector<std::string> words(const std::string& key) {
        const auto raw = text(key);
        std::vector<std::string> out;
        if (raw) {
            for (const auto& cell : split(*raw, ',')) {
                out.emplace_back(trim(cell));
            }
        }
        return out;
    }

    std::string qualified(const std::string& key) const {
        return m_name.empty() ? key : m_name + "." + key;
    }

private:
    void check_interval(const std::string& key, double v, double lo, double hi, bool lo_open,
                        bool hi_open) const {
        const bool ok = std::isfinite(v) && (lo_open ? v > lo : v >= lo) &&
                        (hi_open ? v < hi : v <= hi);
        if (!ok) {
            const std::string range = std::string(lo_open ? "(" : "[") + format_number(lo) + ", " +
                                      format_number(hi) + (hi_open ? ")" : "]");
            throw RangeError(key, line(key),
                             qualified(key) + " = " + format_double(v) + " outside " + range);
        }
    }

    static std::string format_number(double v) {
        return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : format_double(v);
    }

    Section* m_section;
    std::string m_name;
};

constexpr double inf = std::numeric_limits<double>::infinity();

std::string checked_optimizer(Reader& r, const std::string& key, const std::string& name) {
    if (!is_known_optimizer(name)) {
        throw UnknownKeyError(name, r.line(key),
                              "unknown optimizer '" + name + "' in " + r.qualified(key));
    }
    return name;
}

std::shared_ptr<const Dataset> load_data(const DataSection& d, std::size_t line,
                                         const std::filesystem::path& base_dir) {
    if (d.source == DataSection::Source::csv) {
        const auto full = d.path.is_absolute() ? d.path : base_dir / d.path;
        std::ifstream in(full);
        if (!in) {
            throw MissingFileError(full.string());
        }
        try {
            return std::make_shared<const Dataset>(read_dataset_csv(in, d.classes));
        } catch (const std::exception& e) {
            throw RangeError("data.path", line, e.what());
        }
    }
    RngStream rng(d.seed);
    return std::make_shared<const Dataset>(
        make_gaussian_mixture(d.classes, d.dim, d.per_class, d.spread, rng));
}

ExperimentFile build(std::map<std::string, Section>& sections,
                     const std::filesystem::path& base_dir) {
    ExperimentFile xf;
    Reader top(sections, "");
    Reader opt(sections, "optimizer");
    Reader land(sections, "landscape");
    Reader model(sections, "model");
    Reader data(sections, "data");
    Reader run(sections, "run");

    // Run-level settings; the [run] section wins over top-level shorthands.
    xf.run.steps = top.count("steps", 100, 1);
    xf.run.steps = run.count("steps", xf.run.steps, 1);
    xf.run.seed = top.seed("seed", 0);
    xf.run.seed = run.seed("seed", xf.run.seed);
    xf.seeds = top.count("seeds", 1, 1);
    xf.seeds = run.count("seeds", xf.seeds, 1);
    xf.run.telemetry_every = run.count("telemetry_every", 1, 1);

    std::string opt_name = "tam";
    std::string opt_key = "optimizer";
    Reader* opt_reader = &top;
    if (auto v = top.text("optimizer")) {
        opt_name = *v;
    }
    if (auto v = opt.text("name")) {
        opt_name = *v;
        opt_key = "name";
        opt_reader = &opt;
    }
    xf.run.optimizer = checked_optimizer(*opt_reader, opt_key, opt_name);

    HyperParams& hp = xf.run.hp;
    hp.eta = opt.real("eta", hp.eta, 0.0, inf, false, true);
    hp.beta = opt.real("beta", hp.beta, 0.0, 1.0, false, true);
    hp.gamma = opt.real("gamma", hp.gamma, 0.0, 1.0, false, false);
    hp.epsilon = opt.real("epsilon", hp.epsilon, 0.0, inf, false, true);
    hp.beta2 = opt.real("beta2", hp.beta2, 0.0, 1.0, false, true);
    hp.c = opt.real("c", hp.c, 0.0, inf, true, true);
    hp.weight_decay = opt.real("weight_decay", hp.weight_decay, 0.0, inf, false, true);
    if (opt.has("damping_override")) {
        hp.damping_override = opt.real("damping_override", 1.0, 0.0, 1.0, false, false);
    }
    if (auto v = opt.text("bias_correction")) {
        if (*v != "true" && *v != "false") {
            throw RangeError("bias_correction", opt.line("bias_correction"),
                             "optimizer.bias_correction must be true or false");
        }
        hp.bias_correction = *v == "true";
    }
    xf.run.initial_s_hat = opt.real("initial_s_hat", 0.0, -1.0, 1.0, false, false);

    const bool landscape_given = land.present() || top.has("landscape");
    xf.uses_model = model.present();
    if (landscape_given && xf.uses_model) {
        throw SyntaxError(sections.at("model").line,
                          "config has both a landscape and a model; choose one");
    }
    if (!landscape_given && !xf.uses_model) {
        throw SyntaxError(0, "config needs a [landscape] or a [model] section");
    }

    if (landscape_given) {
        LandscapeSpec ls;
        std::string name = "quadratic";
        std::string key = "landscape";
        Reader* where = &top;
        if (auto v = top.text("landscape")) {
            name = *v;
        }
        if (auto v = land.text("name")) {
            name = *v;
            key = "name";
            where = &land;
        }
        if (name == "quadratic") {
            ls.kind = LandscapeSpec::Kind::quadratic;
        } else if (name == "rosenbrock") {
            ls.kind = LandscapeSpec::Kind::rosenbrock;
        } else {
            throw UnknownKeyError(name, where->line(key),
                                  "unknown landscape '" + name + "' in " + where->qualified(key));
        }
        ls.dim = land.count("dim", 2, ls.kind == LandscapeSpec::Kind::rosenbrock ? 2 : 1);
        ls.curvature = land.reals("curvature", ls.curvature, 0.0, inf, true, true);
        ls.center = land.reals("center", ls.center, -inf, inf, true, true);
        ls.start = land.reals("start", ls.kind == LandscapeSpec::Kind::rosenbrock
                                           ? std::vector<double>{-1.0}
                                           : ls.start,
                              -inf, inf, true, true);
        ls.noise_sigma = land.real("noise_sigma", 0.0, 0.0, inf, false, true);
        ls.adversary_kappa = land.real("adversary_kappa", 0.0, 0.0, inf, false, true);
        ls.adversary_period = land.count("adversary_period", 5, 1);
        const auto check_length = [&](const std::string& key, const std::vector<double>& v) {
            if (v.size() != 1 && v.size() != ls.dim) {
                throw RangeError(key, land.line(key),
                                 "landscape." + key + " needs 1 or " + std::to_string(ls.dim) +
                                     " entries");
            }
        };
        check_length("curvature", ls.curvature);
        check_length("center", ls.center);
        check_length("start", ls.start);
        xf.run.problem = ls;
    } else {
        DataSection& d = xf.data;
        d.seed = data.seed("seed", xf.run.seed);
        if (auto v = data.text("source")) {
            if (*v == "gaussian_mixture") {
                d.source = DataSection::Source::gaussian_mixture;
            } else if (*v == "csv") {
                d.source = DataSection::Source::csv;
            } else {
                throw UnknownKeyError(*v, data.line("source"),
                                      "unknown data source '" + *v + "' in data.source");
            }
        }
        if (auto v = data.text("path")) {
            d.path = *v;
        } else if (d.source == DataSection::Source::csv) {
            throw RangeError("path", data.line("source"), "data.path is required for csv data");
        }
        d.classes = data.count("classes", d.source == DataSection::Source::csv ? 0 : d.classes,
                               d.source == DataSection::Source::csv ? 0 : 1);
        d.dim = data.count("dim", d.dim, 1);
        d.per_class = data.count("per_class", d.per_class, 1);
        d.spread = data.real("spread", d.spread, 0.0, inf, false, true);

        ModelTask task;
        task.data = load_data(d, data.line("path"), base_dir);
        task.init_seed = model.seed("init_seed", xf.run.seed);
        task.batch_size = model.count("batch_size", std::min<std::size_t>(32, task.data->size()), 1);
        auto layers = model.counts("layers", 1);
        if (layers.empty()) {
            layers = {task.data->dim, 32, task.data->classes};
        }
        task.spec.layer_sizes = layers;
        if (layers.size() < 2) {
            throw RangeError("layers", model.line("layers"), "model.layers needs >= 2 entries");
        }
        if (layers.front() != task.data->dim) {
            throw RangeError("layers", model.line("layers"),
                             "model.layers input size " + std::to_string(layers.front()) +
                                 " does not match data dim " + std::to_string(task.data->dim));
        }
        if (layers.back() < task.data->classes) {
            throw RangeError("layers", model.line("layers"),
                             "model.layers output size is smaller than the class count");
        }
        if (task.batch_size > task.data->size()) {
            throw RangeError("batch_size", model.line("batch_size"),
                             "model.batch_size exceeds the dataset size " +
                                 std::to_string(task.data->size()));
        }
        xf.run.problem = task;
    }

    Reader online(sections, "online");
    xf.online.tasks = online.count("tasks", xf.online.tasks, 1);
    xf.online.delta = online.real("delta", xf.online.delta, 0.0, 1.0, false, false);
    xf.online.epochs_per_task = online.count("epochs_per_task", xf.online.epochs_per_task, 1);

    Reader warm(sections, "warmup");
    xf.switch_step = warm.count("switch_step", 0, 0);
    if (xf.switch_step > xf.run.steps) {
        throw RangeError("switch_step", warm.line("switch_step"),
                         "warmup.switch_step outside [0, " + std::to_string(xf.run.steps) + "]");
    }

    Reader bar(sections, "barrier");
    xf.barrier.n_alpha = bar.count("n_alpha", xf.barrier.n_alpha, 2);
    xf.barrier.shared_steps = bar.count("shared_steps", xf.barrier.shared_steps, 0);
    xf.barrier.spawn_steps = bar.count("spawn_steps", xf.barrier.spawn_steps, 0);

    Reader grid(sections, "grid");
    for (const auto& name : grid.words("optimizer")) {
        xf.grid.optimizers.push_back(checked_optimizer(grid, "optimizer", name));
    }
    xf.grid.eta = grid.reals("eta", {}, 0.0, inf, false, true);
    xf.grid.beta = grid.reals("beta", {}, 0.0, 1.0, false, true);
    xf.grid.gamma = grid.reals("gamma", {}, 0.0, 1.0, false, false);
    xf.grid.epsilon = grid.reals("epsilon", {}, 0.0, inf, false, true);
    if (auto v = grid.text("metric")) {
        if (*v != "final_loss" && *v != "final_accuracy" && *v != "online_accuracy") {
            throw UnknownKeyError(*v, grid.line("metric"), "unknown metric '" + *v + "'");
        }
        if (*v != "final_loss" && !xf.uses_model) {
            throw RangeError("metric", grid.line("metric"),
                             "grid.metric '" + *v + "' needs a [model] section");
        }
        xf.grid.metric = *v;
    }
    xf.grid.goal = xf.grid.metric == "final_loss" ? Goal::minimize : Goal::maximize;
    if (auto v = grid.text("goal")) {
        if (*v == "min") {
            xf.grid.goal = Goal::minimize;
        } else if (*v == "max") {
            xf.grid.goal = Goal::maximize;
        } else {
            throw RangeError("goal", grid.line("goal"), "grid.goal must be min or max");
        }
    }

    Reader gc(sections, "gradcheck");
    xf.gradcheck.points = gc.count("points", xf.gradcheck.points, 1);
    xf.gradcheck.h = gc.real("h", xf.gradcheck.h, 0.0, inf, true, true);
    xf.gradcheck.threshold = gc.real("threshold", xf.gradcheck.threshold, 0.0, inf, true, true);

    Reader output(sections, "output");
    if (auto v = output.text("dir")) {
        xf.out_dir = *v;
    }

    // Keys that are valid but were not consumed belong to sections whose
    // meaning depends on another choice (e.g. [landscape] keys in a model run).
    for (auto& [name, section] : sections) {
        for (auto& [key, entry] : section.entries) {
            if (!entry.used) {
                throw UnknownKeyError(key, entry.line,
                                      "key '" + key + "' is not used by this configuration");
            }
        }
    }

    try {
        xf.run.validate();
    } catch (const std::exception& e) {
        throw RangeError("", 0, e.what());
    }
    return xf;
}

} // namespace

ExperimentFile parse_config_text(std::string_view text) {
    auto sections = tokenize(text);
    return build(sections, std::filesystem::current_path());
}

ExperimentFile parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFileError(path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    auto sections = tokenize(buf.str());
    return build(sections, path.has_parent_path() ? path.parent_path()
                                                  : std::filesystem::current_path());
}

} // namespace tamopt::cli
