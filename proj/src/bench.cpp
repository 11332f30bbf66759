#include "tamopt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

namespace tamopt {

namespace {

struct Sample {
    double loss = 0.0;
    ParamVector grad;
    std::size_t correct = 0;
    std::size_t batch = 0;
};

// Stochastic objective for one run: a landscape instance or a minibatch
// stream over a dataset.
class Objective {
public:
    Objective(const Problem& problem, std::uint64_t seed) {
        if (const auto* ls = std::get_if<LandscapeSpec>(&problem)) {
            m_landscape = build_landscape(*ls, seed);
        } else {
            const auto& task = std::get<ModelTask>(problem);
            m_task = &task;
            m_sampler.emplace(task.data->size(), task.batch_size, RngStream(seed));
            m_labels = task.data->labels;
        }
    }

    void relabel(std::span<const std::size_t> mapping) {
        m_labels = apply_permutation(m_task->data->labels, mapping);
    }

    Sample next(const ParamVector& theta) {
        if (m_landscape) {
            Evaluation e = m_landscape->evaluate(theta);
            return {e.loss, std::move(e.grad), 0, 0};
        }
        const auto idx = m_sampler->next();
        const Dataset& data = *m_task->data;
        m_inputs.resize(idx.size() * data.dim);
        m_batch_labels.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto row = data.row(idx[k]);
            std::copy(row.begin(), row.end(), m_inputs.begin() + static_cast<long>(k * data.dim));
            m_batch_labels[k] = m_labels[idx[k]];
        }
        MlpEvaluation e = forward_backward(theta, m_task->spec, {m_inputs, m_batch_labels});
        return {e.loss, std::move(e.grad), e.correct, idx.size()};
    }

    std::size_t batches_per_epoch() const { return m_sampler ? m_sampler->batches_per_epoch() : 1; }

private:
    std::unique_ptr<Landscape> m_landscape;
    const ModelTask* m_task = nullptr;
    std::optional<BatchSampler> m_sampler;
    std::vector<std::size_t> m_labels;
    std::vector<double> m_inputs;
    std::vector<std::size_t> m_batch_labels;
};

// Shared step loop. `pick` returns the step function and hyperparameters for
// the given 1-based step index; `observe` sees each sample before the update.
template <typename Pick, typename Observe>
void drive(Objective& objective, std::size_t steps, std::size_t every, bool keep_params,
           ParamVector& theta, OptimizerState& state, TrajectoryRecord& rec, Pick&& pick,
           Observe&& observe) {
    for (std::size_t step = 1; step <= steps; ++step) {
        Sample s = objective.next(theta);
        observe(step, s);
        if (!std::isfinite(s.loss)) {
            rec.failure = RunFailure{state.t + 1, "non-finite loss"};
            return;
        }
        if (!s.grad.all_finite()) {
            rec.failure = RunFailure{state.t + 1, "non-finite gradient"};
            return;
        }
        const auto& [fn, hp] = pick(step);
        StepResult r;
        try {
            r = fn(theta, s.grad, state, hp);
        } catch (const NumericError& e) {
            rec.failure = RunFailure{state.t + 1, e.what()};
            return;
        }
        if (!r.theta.all_finite()) {
            rec.failure = RunFailure{state.t + 1, "non-finite parameters after update"};
            return;
        }
        r.telemetry.loss = s.loss;
        theta = std::move(r.theta);
        state = std::move(r.state);
        if (step % every == 0) {
            rec.telemetry.push_back(r.telemetry);
            if (keep_params) {
                rec.parameters.push_back(theta);
            }
        }
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const ModelTask& model_task(const RunConfig& cfg, const char* who) {
    const auto* task = std::get_if<ModelTask>(&cfg.problem);
    if (!task) {
        throw DomainError(std::string(who) + " needs a model problem");
    }
    return *task;
}

} // namespace

void RunConfig::validate() const {
    if (!is_known_optimizer(optimizer)) {
        throw DomainError("unknown optimizer '" + optimizer + "'");
    }
    hp.validate();
    if (telemetry_every < 1) {
        throw DomainError("telemetry cadence must be >= 1");
    }
    if (!(initial_s_hat >= -1.0 && initial_s_hat <= 1.0)) {
        throw DomainError("initial s_hat must lie in [-1, 1]");
    }
    if (const auto* ls = std::get_if<LandscapeSpec>(&problem)) {
        ls->validate();
    } else {
        const auto& task = std::get<ModelTask>(problem);
        task.spec.validate();
        if (!task.data) {
            throw DomainError("model problem has no dataset");
        }
        task.data->validate();
        if (task.data->dim != task.spec.input_dim() || task.data->classes > task.spec.classes()) {
            throw DimensionError("dataset does not match the model's input/output sizes");
        }
        if (task.batch_size < 1 || task.batch_size > task.data->size()) {
            throw DomainError("batch size must lie in [1, dataset size]");
        }
    }
}

bool same_trajectory(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    const bool same_failure =
        a.failure.has_value() == b.failure.has_value() &&
        (!a.failure || (a.failure->step == b.failure->step && a.failure->reason == b.failure->reason));
    return a.telemetry == b.telemetry && a.parameters == b.parameters &&
           a.final_theta == b.final_theta && a.final_state == b.final_state && same_failure &&
           a.switch_step == b.switch_step;
}

std::size_t count_bound_violations(std::span<const StepTelemetry> telemetry) {
    std::size_t bad = 0;
    for (const auto& t : telemetry) {
        const bool ok = t.S >= -1.0 && t.S <= 1.0 && t.s_hat >= -1.0 && t.s_hat <= 1.0 &&
                        t.d >= 0.0 && t.d <= 1.0;
        bad += ok ? 0 : 1;
    }
    return bad;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, RngStream rng)
    : m_order(n), m_batch(batch_size), m_cursor(n), m_rng(rng) {
    if (batch_size < 1 || batch_size > n) {
        throw DomainError("batch size must lie in [1, dataset size]");
    }
    for (std::size_t i = 0; i < n; ++i) {
        m_order[i] = i;
    }
}

std::span<const std::size_t> BatchSampler::next() {
    if (m_cursor + m_batch > m_order.size()) {
        m_rng.shuffle(std::span<std::size_t>(m_order));
        m_cursor = 0;
    }
    std::span<const std::size_t> out(m_order.data() + m_cursor, m_batch);
    m_cursor += m_batch;
    return out;
}

ParamVector initial_theta(const RunConfig& cfg) {
    if (cfg.initial_theta) {
        return *cfg.initial_theta;
    }
    if (const auto* ls = std::get_if<LandscapeSpec>(&cfg.problem)) {
        return ls->start_point();
    }
    const auto& task = std::get<ModelTask>(cfg.problem);
    RngStream rng(task.init_seed);
    return init_mlp(task.spec, rng);
}

double full_loss(const Problem& problem, const ParamVector& theta) {
    if (const auto* ls = std::get_if<LandscapeSpec>(&problem)) {
        return build_landscape(*ls, 0)->loss(theta);
    }
    const auto& task = std::get<ModelTask>(problem);
    return evaluate_mlp(theta, task.spec, whole(*task.data)).loss;
}

double full_accuracy(const ModelTask& task, const ParamVector& theta) {
    return evaluate_mlp(theta, task.spec, whole(*task.data)).accuracy;
}

TrajectoryRecord run_trajectory(const RunConfig& cfg) {
    const ParamVector theta = initial_theta(cfg);
    return run_trajectory_from(cfg, theta, OptimizerState::zeros(theta.size(), cfg.initial_s_hat));
}

TrajectoryRecord run_trajectory_from(const RunConfig& cfg, const ParamVector& theta0,
                                     const OptimizerState& state0) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    Objective objective(cfg.problem, cfg.seed);
    const StepFunction fn = make_step_function(cfg.optimizer);
    const std::pair<const StepFunction&, const HyperParams&> choice{fn, cfg.hp};

    TrajectoryRecord rec;
    ParamVector theta = theta0;
    OptimizerState state = state0;
    require_same_size(theta, state.m, "initial theta/state");
    drive(objective, cfg.steps, cfg.telemetry_every, cfg.record_parameters, theta, state, rec,
          [&](std::size_t) { return choice; }, [](std::size_t, const Sample&) {});
    rec.final_theta = std::move(theta);
    rec.final_state = std::move(state);
    rec.wall_seconds = seconds_since(start);
    return rec;
}

OnlineResult run_online(const TaskStream& stream, const RunConfig& cfg,
                        const OnlineOptions& options) {
    if (stream.tasks() == 0 || !stream.base) {
        throw DomainError("online run needs a non-empty task stream");
    }
    if (options.epochs_per_task < 1) {
        throw DomainError("epochs per task must be >= 1");
    }
    RunConfig local = cfg;
    ModelTask task = model_task(cfg, "run_online");
    task.data = stream.base;
    local.problem = task;
    local.validate();

    const auto start = std::chrono::steady_clock::now();
    Objective objective(local.problem, local.seed);
    const StepFunction fn = make_step_function(local.optimizer);
    const std::pair<const StepFunction&, const HyperParams&> choice{fn, local.hp};
    const std::size_t steps_per_task = options.epochs_per_task * objective.batches_per_epoch();

    OnlineResult result;
    ParamVector theta = initial_theta(local);
    OptimizerState state = OptimizerState::zeros(theta.size(), local.initial_s_hat);
    for (std::size_t k = 0; k < stream.tasks(); ++k) {
        objective.relabel(stream.mapping(k));
        double acc_sum = 0.0;
        std::size_t scored = 0;
        double first = 0.0;
        drive(objective, steps_per_task, local.telemetry_every, local.record_parameters, theta,
              state, result.trajectory, [&](std::size_t) { return choice; },
              [&](std::size_t step, const Sample& s) {
                  const double acc =
                      static_cast<double>(s.correct) / static_cast<double>(s.batch);
                  if (step == 1) {
                      first = acc;
                  }
                  acc_sum += acc;
                  ++scored;
              });
        result.task_accuracy.push_back(acc_sum / static_cast<double>(scored));
        result.first_batch_accuracy.push_back(first);
        if (result.trajectory.failure) {
            break;
        }
    }
    double total = 0.0;
    for (double a : result.task_accuracy) {
        total += a;
    }
    result.mean_accuracy = total / static_cast<double>(result.task_accuracy.size());
    result.trajectory.final_theta = std::move(theta);
    result.trajectory.final_state = std::move(state);
    result.trajectory.wall_seconds = seconds_since(start);
    return result;
}

TrajectoryRecord run_warmup_switch(const RunConfig& cfg, std::size_t switch_step) {
    cfg.validate();
    if (switch_step > cfg.steps) {
        throw DomainError("switch step must lie in [0, steps]");
    }
    const auto start = std::chrono::steady_clock::now();
    Objective objective(cfg.problem, cfg.seed);
    const StepFunction tam = make_step_function("tam");
    const StepFunction sgdm = make_step_function("sgdm");
    HyperParams after = cfg.hp;
    after.eta = cfg.hp.eta / 2.0;
    const std::pair<const StepFunction&, const HyperParams&> warm{tam, cfg.hp};
    const std::pair<const StepFunction&, const HyperParams&> cool{sgdm, after};

    TrajectoryRecord rec;
    rec.switch_step = switch_step;
    ParamVector theta = initial_theta(cfg);
    OptimizerState state = OptimizerState::zeros(theta.size(), cfg.initial_s_hat);
    drive(objective, cfg.steps, cfg.telemetry_every, cfg.record_parameters, theta, state, rec,
          [&](std::size_t step) { return step <= switch_step ? warm : cool; },
          [](std::size_t, const Sample&) {});
    rec.final_theta = std::move(theta);
    rec.final_state = std::move(state);
    rec.wall_seconds = seconds_since(start);
    return rec;
}

double recompute_barrier(const BarrierReport& report) {
    double barrier = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < report.alphas.size(); ++i) {
        const double a = report.alphas[i];
        const double linear = report.loss_start + a * (report.loss_end - report.loss_start);
        barrier = std::max(barrier, report.losses[i] - linear);
    }
    return barrier;
}

BarrierReport loss_barrier(const ParamVector& theta1, const ParamVector& theta2,
                           const std::function<double(const ParamVector&)>& loss_eval,
                           std::size_t n_alpha) {
    require_same_size(theta1, theta2, "loss_barrier");
    if (n_alpha < 2) {
        throw DomainError("loss barrier needs n_alpha >= 2");
    }
    BarrierReport report;
    const ParamVector delta = difference(theta2, theta1);
    for (std::size_t i = 0; i < n_alpha; ++i) {
        const double a = i + 1 == n_alpha
                             ? 1.0
                             : static_cast<double>(i) / static_cast<double>(n_alpha - 1);
        const double loss = i + 1 == n_alpha ? loss_eval(theta2) : loss_eval(axpy(a, delta, theta1));
        report.alphas.push_back(a);
        report.losses.push_back(loss);
    }
    report.loss_start = report.losses.front();
    report.loss_end = report.losses.back();
    report.barrier = recompute_barrier(report);
    return report;
}

DivergedPair spawn_and_diverge(const ParamVector& theta, const OptimizerState& state,
                               const RunConfig& cfg, std::uint64_t seed_a, std::uint64_t seed_b,
                               std::size_t threads) {
    RunConfig ca = cfg;
    RunConfig cb = cfg;
    ca.seed = seed_a;
    cb.seed = seed_b;
    DivergedPair out;
    parallel_for(2, threads, [&](std::size_t i) {
        if (i == 0) {
            out.a = run_trajectory_from(ca, theta, state);
        } else {
            out.b = run_trajectory_from(cb, theta, state);
        }
    });
    return out;
}

GridResult grid_search(std::span<const GridPoint> points, const Metric& metric, Goal goal,
                       std::size_t threads) {
    if (points.empty()) {
        throw DomainError("grid search needs at least one point");
    }
    struct Job {
        std::size_t point;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    GridResult result;
    for (std::size_t p = 0; p < points.size(); ++p) {
        if (points[p].n_seeds < 1) {
            throw DomainError("grid point '" + points[p].label + "' has no seeds");
        }
        GridRow row;
        row.label = points[p].label;
        row.per_seed.assign(points[p].n_seeds, std::numeric_limits<double>::quiet_NaN());
        result.rows.push_back(std::move(row));
        for (std::size_t s = 0; s < points[p].n_seeds; ++s) {
            jobs.push_back({p, s});
        }
    }
    std::vector<std::optional<std::string>> errors(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        const Job job = jobs[j];
        RunConfig cfg = points[job.point].config;
        cfg.seed = split_seed(cfg.seed, job.seed_index);
        try {
            const double v = metric(cfg);
            if (!std::isfinite(v)) {
                errors[j] = "non-finite metric";
            }
            result.rows[job.point].per_seed[job.seed_index] = v;
        } catch (const std::exception& e) {
            errors[j] = e.what();
        }
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& row = result.rows[jobs[j].point];
        if (errors[j] && !row.error) {
            row.error = "seed " + std::to_string(jobs[j].seed_index) + ": " + *errors[j];
        }
    }
    for (std::size_t p = 0; p < result.rows.size(); ++p) {
        auto& row = result.rows[p];
        if (row.error) {
            row.mean = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double sum = 0.0;
        for (double v : row.per_seed) {
            sum += v;
        }
        row.mean = sum / static_cast<double>(row.per_seed.size());
        if (!result.best) {
            result.best = p;
            continue;
        }
        const double incumbent = result.rows[*result.best].mean;
        const bool better = goal == Goal::minimize ? row.mean < incumbent : row.mean > incumbent;
        if (better) {
            result.best = p;
        }
    }
    return result;
}

Metric final_loss_metric() {
    return [](const RunConfig& cfg) {
        const TrajectoryRecord rec = run_trajectory(cfg);
        if (rec.failure) {
            throw std::runtime_error("run failed at step " + std::to_string(rec.failure->step) +
                                     ": " + rec.failure->reason);
        }
        return full_loss(cfg.problem, rec.final_theta);
    };
}

Metric final_accuracy_metric() {
    return [](const RunConfig& cfg) {
        const ModelTask& task = model_task(cfg, "final accuracy metric");
        const TrajectoryRecord rec = run_trajectory(cfg);
        if (rec.failure) {
            throw std::runtime_error("run failed at step " + std::to_string(rec.failure->step) +
                                     ": " + rec.failure->reason);
        }
        return full_accuracy(task, rec.final_theta);
    };
}

Metric online_accuracy_metric(std::size_t n_tasks, double delta, OnlineOptions options) {
    return [=](const RunConfig& cfg) {
        const ModelTask& task = model_task(cfg, "online accuracy metric");
        RngStream rng(split_seed(cfg.seed, 4));
        const TaskStream stream = make_task_stream(task.data, n_tasks, delta, rng);
        const OnlineResult r = run_online(stream, cfg, options);
        if (r.trajectory.failure) {
            throw std::runtime_error("online run failed at step " +
                                     std::to_string(r.trajectory.failure->step));
        }
        return r.mean_accuracy;
    };
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            guarded(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    guarded(i);
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace tamopt
