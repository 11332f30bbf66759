#include "tamopt/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tamopt/bench.hpp"
#include "tamopt/cli/config.hpp"
#include "tamopt/gradcheck.hpp"
#include "tamopt/io.hpp"

namespace tamopt::cli {

namespace {

using nlohmann::json;

struct Context {
    ExperimentFile xf;
    std::filesystem::path out_dir;
    std::size_t threads = 1;
    std::ostream& out;
};

std::uint64_t seed_of(const ExperimentFile& xf, std::size_t i) { return split_seed(xf.run.seed, i); }

std::string telemetry_csv(const TrajectoryRecord& rec) {
    std::string s = "step,loss,grad_norm,S,s_hat,d,m_norm,update_norm\n";
    for (const auto& t : rec.telemetry) {
        s += std::to_string(t.t);
        for (double v : {t.loss, t.grad_norm, t.S, t.s_hat, t.d, t.m_norm, t.update_norm}) {
            s += ',';
            s += format_double(v);
        }
        s += '\n';
    }
    return s;
}

json failure_json(const std::optional<RunFailure>& f) {
    if (!f) {
        return nullptr;
    }
    return json{{"step", f->step}, {"reason", f->reason}};
}

std::string per_seed_name(const std::string& stem, std::size_t seeds, std::size_t i) {
    return seeds == 1 ? stem + ".csv" : stem + "_seed" + std::to_string(i) + ".csv";
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

int trajectory_like(Context& ctx, bool warmup) {
    const ExperimentFile& xf = ctx.xf;
    std::vector<TrajectoryRecord> records(xf.seeds);
    parallel_for(xf.seeds, ctx.threads, [&](std::size_t i) {
        RunConfig cfg = xf.run;
        cfg.seed = seed_of(xf, i);
        records[i] = warmup ? run_warmup_switch(cfg, xf.switch_step) : run_trajectory(cfg);
    });
    json runs = json::array();
    double loss_sum = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < xf.seeds; ++i) {
        const auto& rec = records[i];
        write_file_atomic(ctx.out_dir / per_seed_name("trajectory", xf.seeds, i),
                          telemetry_csv(rec));
        const double final_loss = rec.ok() ? full_loss(xf.run.problem, rec.final_theta)
                                           : std::numeric_limits<double>::quiet_NaN();
        loss_sum += final_loss;
        ok = ok && rec.ok();
        runs.push_back({{"seed_index", i},
                        {"seed", seed_of(xf, i)},
                        {"steps_recorded", rec.telemetry.size()},
                        {"final_loss", rec.ok() ? json(final_loss) : json(nullptr)},
                        {"failure", failure_json(rec.failure)}});
    }
    json summary{{"command", warmup ? "warmup" : "trajectory"},
                 {"optimizer", warmup ? "tam->sgdm" : xf.run.optimizer},
                 {"runs", runs},
                 {"mean_final_loss",
                  ok ? json(loss_sum / static_cast<double>(xf.seeds)) : json(nullptr)}};
    if (warmup) {
        summary["switch_step"] = xf.switch_step;
        summary["eta_tam"] = xf.run.hp.eta;
        summary["eta_sgdm"] = xf.run.hp.eta / 2.0;
    }
    write_json(ctx.out_dir / "summary.json", summary);
    ctx.out << (warmup ? "warmup" : "trajectory") << ": " << xf.seeds << " run(s) written to "
            << ctx.out_dir.string() << "\n";
    return ok ? 0 : 1;
}

int online(Context& ctx) {
    const ExperimentFile& xf = ctx.xf;
    const auto* task = std::get_if<ModelTask>(&xf.run.problem);
    if (!task) {
        throw RangeError("model", 0, "online needs a [model] section");
    }
    std::vector<OnlineResult> results(xf.seeds);
    parallel_for(xf.seeds, ctx.threads, [&](std::size_t i) {
        RunConfig cfg = xf.run;
        cfg.seed = seed_of(xf, i);
        RngStream rng(split_seed(cfg.seed, 4));
        const TaskStream stream = make_task_stream(task->data, xf.online.tasks, xf.online.delta, rng);
        results[i] = run_online(stream, cfg, {xf.online.epochs_per_task});
    });
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.trajectory.ok();
    }
    const std::size_t tasks = results.front().task_accuracy.size();
    std::string csv = "task,online_accuracy,first_batch_accuracy\n";
    double total = 0.0;
    double total_first = 0.0;
    for (std::size_t k = 0; k < tasks; ++k) {
        double acc = 0.0;
        double first = 0.0;
        for (const auto& r : results) {
            acc += k < r.task_accuracy.size() ? r.task_accuracy[k] : 0.0;
            first += k < r.first_batch_accuracy.size() ? r.first_batch_accuracy[k] : 0.0;
        }
        acc /= static_cast<double>(results.size());
        first /= static_cast<double>(results.size());
        total += acc;
        total_first += first;
        csv += std::to_string(k) + "," + format_double(acc) + "," + format_double(first) + "\n";
    }
    csv += "mean," + format_double(total / static_cast<double>(tasks)) + "," +
           format_double(total_first / static_cast<double>(tasks)) + "\n";
    write_file_atomic(ctx.out_dir / "online.csv", csv);

    json runs = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        runs.push_back({{"seed_index", i},
                        {"seed", seed_of(xf, i)},
                        {"task_accuracy", results[i].task_accuracy},
                        {"first_batch_accuracy", results[i].first_batch_accuracy},
                        {"mean_accuracy", results[i].mean_accuracy},
                        {"failure", failure_json(results[i].trajectory.failure)}});
    }
    write_json(ctx.out_dir / "summary.json",
               {{"command", "online"},
                {"optimizer", xf.run.optimizer},
                {"tasks", xf.online.tasks},
                {"delta", xf.online.delta},
                {"epochs_per_task", xf.online.epochs_per_task},
                {"mean_accuracy", total / static_cast<double>(tasks)},
                {"runs", runs}});
    ctx.out << "online: mean accuracy " << format_double(total / static_cast<double>(tasks))
            << " over " << tasks << " task(s)\n";
    return ok ? 0 : 1;
}

int barrier(Context& ctx) {
    const ExperimentFile& xf = ctx.xf;
    std::vector<BarrierReport> reports(xf.seeds);
    std::vector<std::optional<RunFailure>> failures(xf.seeds);
    parallel_for(xf.seeds, ctx.threads, [&](std::size_t i) {
        RunConfig shared = xf.run;
        shared.seed = seed_of(xf, i);
        shared.steps = xf.barrier.shared_steps;
        ParamVector theta = initial_theta(shared);
        OptimizerState state = OptimizerState::zeros(theta.size(), shared.initial_s_hat);
        if (shared.steps > 0) {
            TrajectoryRecord rec = run_trajectory(shared);
            if (!rec.ok()) {
                failures[i] = rec.failure;
                return;
            }
            theta = rec.final_theta;
            state = rec.final_state;
        }
        RunConfig branch = shared;
        branch.steps = xf.barrier.spawn_steps;
        const DivergedPair pair = spawn_and_diverge(theta, state, branch,
                                                    split_seed(shared.seed, 101),
                                                    split_seed(shared.seed, 102));
        if (!pair.a.ok() || !pair.b.ok()) {
            failures[i] = pair.a.ok() ? pair.b.failure : pair.a.failure;
            return;
        }
        reports[i] = loss_barrier(
            pair.a.final_theta, pair.b.final_theta,
            [&](const ParamVector& p) { return full_loss(xf.run.problem, p); }, xf.barrier.n_alpha);
    });
    std::string csv = "seed_index,alpha,loss,linear,excess\n";
    json runs = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < xf.seeds; ++i) {
        if (failures[i]) {
            ok = false;
            runs.push_back({{"seed_index", i}, {"failure", failure_json(failures[i])}});
            continue;
        }
        const auto& r = reports[i];
        for (std::size_t k = 0; k < r.alphas.size(); ++k) {
            const double linear = r.loss_start + r.alphas[k] * (r.loss_end - r.loss_start);
            csv += std::to_string(i) + "," + format_double(r.alphas[k]) + "," +
                   format_double(r.losses[k]) + "," + format_double(linear) + "," +
                   format_double(r.losses[k] - linear) + "\n";
        }
        runs.push_back({{"seed_index", i},
                        {"seed", seed_of(xf, i)},
                        {"barrier", r.barrier},
                        {"loss_start", r.loss_start},
                        {"loss_end", r.loss_end},
                        {"failure", nullptr}});
    }
    write_file_atomic(ctx.out_dir / "barrier.csv", csv);
    write_json(ctx.out_dir / "summary.json", {{"command", "barrier"},
                                              {"optimizer", xf.run.optimizer},
                                              {"n_alpha", xf.barrier.n_alpha},
                                              {"shared_steps", xf.barrier.shared_steps},
                                              {"spawn_steps", xf.barrier.spawn_steps},
                                              {"runs", runs}});
    ctx.out << "barrier: " << xf.seeds << " pair(s) evaluated\n";
    return ok ? 0 : 1;
}

int gridsearch(Context& ctx) {
    const ExperimentFile& xf = ctx.xf;
    const GridSection& g = xf.grid;
    const auto or_default = [](const std::vector<double>& v, double d) {
        return v.empty() ? std::vector<double>{d} : v;
    };
    const auto optimizers =
        g.optimizers.empty() ? std::vector<std::string>{xf.run.optimizer} : g.optimizers;
    std::vector<GridPoint> points;
    for (const auto& name : optimizers) {
        for (double eta : or_default(g.eta, xf.run.hp.eta)) {
            for (double beta : or_default(g.beta, xf.run.hp.beta)) {
                for (double gamma : or_default(g.gamma, xf.run.hp.gamma)) {
                    for (double eps : or_default(g.epsilon, xf.run.hp.epsilon)) {
                        GridPoint p;
                        p.config = xf.run;
                        p.config.optimizer = name;
                        p.config.hp.eta = eta;
                        p.config.hp.beta = beta;
                        p.config.hp.gamma = gamma;
                        p.config.hp.epsilon = eps;
                        p.n_seeds = xf.seeds;
                        p.label = name + " eta=" + format_double(eta) + " beta=" +
                                  format_double(beta) + " gamma=" + format_double(gamma) +
                                  " epsilon=" + format_double(eps);
                        points.push_back(std::move(p));
                    }
                }
            }
        }
    }
    Metric metric;
    if (g.metric == "final_loss") {
        metric = final_loss_metric();
    } else if (g.metric == "final_accuracy") {
        metric = final_accuracy_metric();
    } else {
        metric = online_accuracy_metric(xf.online.tasks, xf.online.delta,
                                        {xf.online.epochs_per_task});
    }
    const GridResult result = grid_search(points, metric, g.goal, ctx.threads);

    std::string csv = "index,optimizer,eta,beta,gamma,epsilon,mean_metric,status\n";
    json rows = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const auto& row = result.rows[i];
        csv += std::to_string(i) + "," + p.config.optimizer + "," + format_double(p.config.hp.eta) +
               "," + format_double(p.config.hp.beta) + "," + format_double(p.config.hp.gamma) +
               "," + format_double(p.config.hp.epsilon) + "," +
               (row.error ? std::string("nan") : format_double(row.mean)) + "," +
               (row.error ? "failed" : "ok") + "\n";
        json per_seed = json::array();
        for (double v : row.per_seed) {
            per_seed.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        }
        rows.push_back({{"index", i},
                        {"label", row.label},
                        {"optimizer", p.config.optimizer},
                        {"eta", p.config.hp.eta},
                        {"beta", p.config.hp.beta},
                        {"gamma", p.config.hp.gamma},
                        {"epsilon", p.config.hp.epsilon},
                        {"per_seed", per_seed},
                        {"mean", row.error ? json(nullptr) : json(row.mean)},
                        {"error", row.error ? json(*row.error) : json(nullptr)}});
    }
    write_file_atomic(ctx.out_dir / "results.csv", csv);
    json best = nullptr;
    if (result.best) {
        best = rows[*result.best];
    }
    write_json(ctx.out_dir / "summary.json",
               {{"command", "gridsearch"},
                {"metric", g.metric},
                {"goal", g.goal == Goal::minimize ? "min" : "max"},
                {"best", best},
                {"rows", rows}});
    if (!result.best) {
        ctx.out << "gridsearch: every grid point failed\n";
        return 1;
    }
    ctx.out << "gridsearch: best " << result.rows[*result.best].label << " ("
            << g.metric << " = " << format_double(result.rows[*result.best].mean) << ")\n";
    return 0;
}

int gradcheck(Context& ctx) {
    const ExperimentFile& xf = ctx.xf;
    std::vector<GradCheckResult> results(xf.gradcheck.points);
    parallel_for(results.size(), ctx.threads, [&](std::size_t k) {
        RngStream rng(split_seed(xf.run.seed, k));
        if (const auto* task = std::get_if<ModelTask>(&xf.run.problem)) {
            // Zero biases can place pre-activations exactly on a ReLU kink.
            ParamVector theta = init_mlp(task->spec, rng);
            for (auto& v : theta) {
                v += 0.1 * rng.normal();
            }
            const Dataset& data = *task->data;
            std::vector<std::size_t> order(data.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                order[i] = i;
            }
            rng.shuffle(std::span<std::size_t>(order));
            std::vector<double> inputs;
            std::vector<std::size_t> labels;
            for (std::size_t i = 0; i < task->batch_size; ++i) {
                const auto row = data.row(order[i]);
                inputs.insert(inputs.end(), row.begin(), row.end());
                labels.push_back(data.labels[order[i]]);
            }
            const Batch batch{inputs, labels};
            const MlpEvaluation e = forward_backward(theta, task->spec, batch);
            results[k] = check_gradient(
                [&](const ParamVector& p) { return evaluate_mlp(p, task->spec, batch).loss; },
                theta, e.grad, xf.gradcheck.h);
        } else {
            LandscapeSpec clean = std::get<LandscapeSpec>(xf.run.problem);
            clean.noise_sigma = 0.0;
            clean.adversary_kappa = 0.0;
            auto land = build_landscape(clean, 0);
            ParamVector theta = clean.start_point();
            for (auto& v : theta) {
                v += rng.normal();
            }
            const Evaluation e = land->evaluate(theta);
            results[k] = check_gradient([&](const ParamVector& p) { return land->loss(p); }, theta,
                                        e.grad, xf.gradcheck.h);
        }
    });
    std::string csv = "point,max_rel_error\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < results.size(); ++k) {
        csv += std::to_string(k) + "," + format_double(results[k].max_rel_error) + "\n";
        worst = std::max(worst, results[k].max_rel_error);
    }
    const bool pass = worst < xf.gradcheck.threshold;
    write_file_atomic(ctx.out_dir / "gradcheck.csv", csv);
    write_json(ctx.out_dir / "summary.json", {{"command", "gradcheck"},
                                              {"points", results.size()},
                                              {"h", xf.gradcheck.h},
                                              {"threshold", xf.gradcheck.threshold},
                                              {"max_rel_error", worst},
                                              {"pass", pass}});
    ctx.out << "gradcheck max_rel_error=" << format_double(worst)
            << " threshold=" << format_double(xf.gradcheck.threshold) << (pass ? " PASS" : " FAIL")
            << "\n";
    return pass ? 0 : 1;
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& key = "", std::size_t line = 0) {
    json j{{"error", kind}, {"message", message}};
    if (!key.empty()) {
        j["key"] = key;
    }
    if (line > 0) {
        j["line"] = line;
    }
    err << j.dump() << "\n";
}

} // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"trajectory", "online",     "warmup",
                                                   "barrier",    "gridsearch", "gradcheck"};
    return names;
}

std::size_t resolve_threads(std::optional<std::size_t> flag) {
    if (flag) {
        return std::max<std::size_t>(*flag, 1);
    }
    if (const char* env = std::getenv("TAMOPT_THREADS")) {
        try {
            const long long v = parse_integer(env);
            if (v >= 1) {
                return static_cast<std::size_t>(v);
            }
        } catch (const std::invalid_argument&) {
        }
    }
    return 1;
}

int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err) {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), options.subcommand) == names.end()) {
        report_error(err, "usage", "unknown subcommand '" + options.subcommand + "'");
        return 2;
    }
    try {
        ExperimentFile xf = parse_config(options.config);
        if (options.seeds) {
            if (*options.seeds < 1) {
                throw RangeError("seeds", 0, "--seeds must be >= 1");
            }
            xf.seeds = *options.seeds;
        }
        Context ctx{xf, options.out_dir.value_or(xf.out_dir), std::max<std::size_t>(options.threads, 1),
                    out};
        std::filesystem::create_directories(ctx.out_dir);

        int code = 0;
        const std::string& cmd = options.subcommand;
        if (cmd == "trajectory") {
            code = trajectory_like(ctx, false);
        } else if (cmd == "warmup") {
            code = trajectory_like(ctx, true);
        } else if (cmd == "online") {
            code = online(ctx);
        } else if (cmd == "barrier") {
            code = barrier(ctx);
        } else if (cmd == "gridsearch") {
            code = gridsearch(ctx);
        } else {
            code = gradcheck(ctx);
        }
        write_json(ctx.out_dir / "metadata.json", {{"command", cmd},
                                                   {"config", options.config.string()},
                                                   {"threads", ctx.threads},
                                                   {"seeds", xf.seeds},
                                                   {"created_utc", utc_now()}});
        if (code != 0) {
            report_error(err, "run_failed", cmd + " did not complete successfully");
        }
        return code;
    } catch (const ConfigError& e) {
        report_error(err, e.kind(), e.what(), e.key(), e.line());
        return 2;
    } catch (const std::exception& e) {
        report_error(err, "runtime", e.what());
        return 1;
    }
}

} // namespace tamopt::cli
