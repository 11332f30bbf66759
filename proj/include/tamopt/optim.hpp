#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tamopt/vecmath.hpp"

namespace tamopt {

/// Immutable per-run optimizer settings. Defaults follow the usual TAM / Adam
/// settings: gamma 0.9, epsilon 1e-8, beta 0.9, beta2 0.999, c 1e-8.
struct HyperParams {
    double eta = 0.1;          ///< learning rate
    double beta = 0.9;         ///< momentum coefficient
    double gamma = 0.9;        ///< decay of the smoothed cosine similarity
    double epsilon = 1e-8;     ///< floor added to the damping factor
    double beta2 = 0.999;      ///< second-moment decay (adaptive variants)
    double c = 1e-8;           ///< adaptive denominator constant
    double weight_decay = 0.0; ///< decoupled decay lambda

    /// Replaces the computed damping d_t with a constant in [0, 1] for the
    /// TAM family. Used to reduce TAM to SGDM in tests and experiments.
    std::optional<double> damping_override;

    /// Bias correction of the moment estimates. Unset means the variant's
    /// default: on for Adam, off for AdaTAM and AdaTAM2.
    std::optional<bool> bias_correction;

    /// Throws DomainError if any field is outside its valid range.
    void validate() const;
};

struct OptimizerState {
    ParamVector m;       ///< momentum
    double s_hat = 0.0;  ///< smoothed momentum/gradient cosine
    ParamVector v;       ///< second moment (adaptive variants; zero otherwise)
    std::uint64_t t = 0; ///< number of steps taken

    static OptimizerState zeros(std::size_t n, double s_hat0 = 0.0) {
        return OptimizerState{ParamVector(n), s_hat0, ParamVector(n), 0};
    }

    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct StepTelemetry {
    std::uint64_t t = 0;
    double loss = 0.0; ///< filled in by the caller
    double grad_norm = 0.0;
    double S = 0.0;     ///< raw cosine between m_{t-1} and g_t
    double s_hat = 0.0; ///< smoothed cosine after this step
    double d = 1.0;     ///< damping applied to g_t; 1 for undamped optimizers
    double m_norm = 0.0;
    double update_norm = 0.0; ///< ||theta' - theta||

    friend bool operator==(const StepTelemetry&, const StepTelemetry&) = default;
};

struct StepResult {
    ParamVector theta;
    OptimizerState state;
    StepTelemetry telemetry;
};

/// Cosine between previous momentum and gradient, clamped to [-1, 1].
/// Returns 0 when either vector is exactly zero.
double cosine_similarity(const ParamVector& m_prev, const ParamVector& g);

/// Torque-aware momentum:
///   S_t = cos(m_{t-1}, g_t), s_t = gamma s_{t-1} + (1 - gamma) S_t,
///   d_t = (1 + s_t) / 2,     m_t = beta m_{t-1} + (epsilon + d_t) g_t,
///   theta' = theta - eta m_t.
StepResult tam_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                    const HyperParams& hp);

/// Heavy-ball momentum: m_t = beta m_{t-1} + g_t, theta' = theta - eta m_t.
/// S and s_hat are tracked for telemetry only.
StepResult sgdm_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                     const HyperParams& hp);

struct SgdResult {
    ParamVector theta;
    StepTelemetry telemetry;
};

/// Plain gradient step theta' = theta - eta g.
SgdResult sgd_step(const ParamVector& theta, const ParamVector& g, const HyperParams& hp);

/// Adam, bias-corrected unless hp.bias_correction is explicitly false.
StepResult adam_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                     const HyperParams& hp);

/// AdaTAM: TAM momentum with Adam's second moment,
/// theta' = theta - eta m_t / (sqrt(v_t) + c). No bias correction by default.
StepResult adatam_step(const ParamVector& theta, const ParamVector& g,
                       const OptimizerState& state, const HyperParams& hp);

/// AdaTAM2: m_t = (1 - (epsilon + d_t)) m_{t-1} + (epsilon + d_t) g_t.
/// The complement coefficient is used as written; it is -epsilon when d_t = 1.
StepResult adatam2_step(const ParamVector& theta, const ParamVector& g,
                        const OptimizerState& state, const HyperParams& hp);

using StepFunction = std::function<StepResult(const ParamVector&, const ParamVector&,
                                              const OptimizerState&, const HyperParams&)>;

/// Wraps `inner` so that after its update theta' -= eta * lambda * theta, using
/// the pre-step theta. lambda = 0 returns a wrapper with identical results.
StepFunction with_decoupled_weight_decay(StepFunction inner, double lambda);

/// Registry of optimizer names: sgd, sgdm, tam, adam, adatam, adatam2, and the
/// aliases adamw and adatamw. Decoupled decay is applied whenever
/// hp.weight_decay > 0 at call time.
StepFunction make_step_function(std::string_view name);

bool is_known_optimizer(std::string_view name);
const std::vector<std::string>& optimizer_names();

} // namespace tamopt
