#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tamopt/landscapes.hpp"
#include "tamopt/nn.hpp"
#include "tamopt/optim.hpp"
#include "tamopt/vecmath.hpp"

namespace tamopt {

/// Classifier training problem. Minibatches are drawn from `data` in epochs,
/// each epoch a fresh seeded shuffle; the trailing partial batch is dropped.
struct ModelTask {
    MlpSpec spec;
    std::shared_ptr<const Dataset> data;
    std::size_t batch_size = 32;
    std::uint64_t init_seed = 0; ///< seed of init_mlp when no initial theta is given
};

using Problem = std::variant<LandscapeSpec, ModelTask>;

struct RunConfig {
    std::string optimizer = "tam";
    HyperParams hp;
    Problem problem;
    std::size_t steps = 100;
    std::uint64_t seed = 0; ///< drives batch order and gradient noise
    std::size_t telemetry_every = 1;
    double initial_s_hat = 0.0;
    std::optional<ParamVector> initial_theta;
    bool record_parameters = false; ///< keep theta after every recorded step

    void validate() const;
};

struct RunFailure {
    std::uint64_t step = 0;
    std::string reason;
};

struct TrajectoryRecord {
    std::vector<StepTelemetry> telemetry;
    std::vector<ParamVector> parameters; ///< filled only with record_parameters
    ParamVector final_theta;
    OptimizerState final_state;
    double wall_seconds = 0.0;
    std::optional<RunFailure> failure;
    std::optional<std::uint64_t> switch_step; ///< set by run_warmup_switch

    bool ok() const noexcept { return !failure.has_value(); }
};

/// Same telemetry, parameters, final state and failure; wall time is ignored.
bool same_trajectory(const TrajectoryRecord& a, const TrajectoryRecord& b);

/// Steps whose S, s_hat or d leave their bounds ([-1,1], [-1,1], [0,1]).
std::size_t count_bound_violations(std::span<const StepTelemetry> telemetry);

/// Seeded epoch-wise minibatch index sampler.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::size_t batch_size, RngStream rng);

    /// Indices of the next batch; reshuffles when an epoch is exhausted.
    std::span<const std::size_t> next();

    std::size_t batches_per_epoch() const noexcept { return m_order.size() / m_batch; }

private:
    std::vector<std::size_t> m_order;
    std::size_t m_batch;
    std::size_t m_cursor;
    RngStream m_rng;
};

ParamVector initial_theta(const RunConfig& cfg);

/// Clean full objective: landscape loss, or mean cross-entropy over the dataset.
double full_loss(const Problem& problem, const ParamVector& theta);

/// Fraction of the dataset classified correctly. Model problems only.
double full_accuracy(const ModelTask& task, const ParamVector& theta);

/// Optimizer loop: sample, evaluate, step, record. A non-finite loss,
/// gradient or parameter stops the run and is reported in `failure`.
TrajectoryRecord run_trajectory(const RunConfig& cfg);

/// As above but continuing from an explicit parameter vector and state.
TrajectoryRecord run_trajectory_from(const RunConfig& cfg, const ParamVector& theta,
                                     const OptimizerState& state);

struct OnlineOptions {
    std::size_t epochs_per_task = 40;
};

struct OnlineResult {
    std::vector<double> task_accuracy;        ///< prequential accuracy per task
    std::vector<double> first_batch_accuracy; ///< accuracy on each task's first batch
    double mean_accuracy = 0.0;
    TrajectoryRecord trajectory;
};

/// Trains through every task of the stream without resetting parameters or
/// optimizer state. Each batch is scored before the update it drives; a task's
/// online accuracy is the mean of those scores. `cfg.problem` must be a
/// ModelTask; its spec, batch size and init seed are used, its data is
/// replaced by the stream's base dataset.
OnlineResult run_online(const TaskStream& stream, const RunConfig& cfg,
                        const OnlineOptions& options = {});

/// Steps 1..sw use TAM at cfg.hp.eta; steps sw+1..budget use SGDM at half
/// that rate, carrying momentum and the step counter across the switch.
TrajectoryRecord run_warmup_switch(const RunConfig& cfg, std::size_t switch_step);

struct BarrierReport {
    std::vector<double> alphas;
    std::vector<double> losses;         ///< L((1 - a) theta1 + a theta2)
    double loss_start = 0.0;            ///< L(theta1)
    double loss_end = 0.0;              ///< L(theta2)
    double barrier = 0.0;
};

/// max over the report's grid of losses[i] - (loss_start + a (loss_end - loss_start)).
double recompute_barrier(const BarrierReport& report);

/// Loss along the straight line between two parameter vectors on
/// n_alpha evenly spaced points of [0, 1]. Interpolants are
/// theta1 + a (theta2 - theta1), with a = 1 mapped to theta2 itself.
BarrierReport loss_barrier(const ParamVector& theta1, const ParamVector& theta2,
                           const std::function<double(const ParamVector&)>& loss_eval,
                           std::size_t n_alpha = 11);

struct DivergedPair {
    TrajectoryRecord a;
    TrajectoryRecord b;
};

/// Continues two copies of (theta, state) for cfg.steps steps that differ only
/// in their sampling seed.
DivergedPair spawn_and_diverge(const ParamVector& theta, const OptimizerState& state,
                               const RunConfig& cfg, std::uint64_t seed_a, std::uint64_t seed_b,
                               std::size_t threads = 1);

/// Scores one run. Receives the config with its per-seed seed already set.
using Metric = std::function<double(const RunConfig&)>;

enum class Goal { minimize, maximize };

struct GridPoint {
    std::string label;
    RunConfig config;
    std::size_t n_seeds = 1; ///< seed i = split_seed(config.seed, i)
};

struct GridRow {
    std::string label;
    std::vector<double> per_seed;
    double mean = 0.0;
    std::optional<std::string> error;
};

struct GridResult {
    std::optional<std::size_t> best; ///< empty when every point failed
    std::vector<GridRow> rows;
};

/// Evaluates every point over its seeds and picks the best mean. Ties go to
/// the earliest point. A throwing or non-finite metric marks that row failed.
GridResult grid_search(std::span<const GridPoint> points, const Metric& metric, Goal goal,
                       std::size_t threads = 1);

/// Full objective at the end of a trajectory run.
Metric final_loss_metric();

/// Full-dataset accuracy at the end of a trajectory run (model problems).
Metric final_accuracy_metric();

/// Mean online accuracy of a label-flip stream built from the config's data.
Metric online_accuracy_metric(std::size_t n_tasks, double delta, OnlineOptions options);

/// Runs fn(0..count-1) on up to `threads` workers. Exceptions are rethrown
/// after all workers finish (the first by index wins).
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace tamopt
