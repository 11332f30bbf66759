#include "tamopt/optim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace tamopt {

namespace {

void check_range(bool ok, const char* name, const char* range, double value) {
    if (!ok) {
        throw DomainError(std::string("hyperparameter '") + name + "' = " + std::to_string(value) +
                          " outside " + range);
    }
}

void check_inputs(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                  const HyperParams& hp) {
    require_same_size(theta, g, "theta/g");
    require_same_size(theta, state.m, "theta/m");
    require_same_size(theta, state.v, "theta/v");
    require_finite(theta, "theta");
    require_finite(g, "g");
    require_finite(state.m, "m");
    require_finite(state.v, "v");
    if (!std::isfinite(state.s_hat)) {
        throw NumericError("s_hat", "non-finite value in 's_hat'");
    }
    hp.validate();
}

struct Alignment {
    double S;
    double s_hat;
    double d;
};

// Cosine, smoothing and damping shared by every momentum variant.
Alignment align(const ParamVector& m_prev, const ParamVector& g, double s_hat_prev,
                const HyperParams& hp) {
    Alignment a{};
    a.S = cosine_similarity(m_prev, g);
    a.s_hat = hp.gamma * s_hat_prev + (1.0 - hp.gamma) * a.S;
    a.d = hp.damping_override ? *hp.damping_override : (1.0 + a.s_hat) / 2.0;
    assert(a.S >= -1.0 && a.S <= 1.0);
    assert(a.s_hat >= -1.0 && a.s_hat <= 1.0);
    assert(a.d >= 0.0 && a.d <= 1.0);
    return a;
}

StepTelemetry make_telemetry(const ParamVector& theta, const ParamVector& theta_new,
                             const ParamVector& g, const OptimizerState& state, double S,
                             double s_hat, double d) {
    StepTelemetry tel;
    tel.t = state.t;
    tel.grad_norm = norm(g);
    tel.S = S;
    tel.s_hat = s_hat;
    tel.d = d;
    tel.m_norm = norm(state.m);
    tel.update_norm = norm(difference(theta_new, theta));
    return tel;
}

enum class MomentumRule { damped, damped_ema };

StepResult torque_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                       const HyperParams& hp, MomentumRule rule, bool adaptive) {
    check_inputs(theta, g, state, hp);
    const Alignment a = align(state.m, g, state.s_hat, hp);
    const double coeff = hp.epsilon + a.d;
    const double keep = rule == MomentumRule::damped ? hp.beta : 1.0 - coeff;

    OptimizerState next = state;
    next.t = state.t + 1;
    next.s_hat = a.s_hat;
    ParamVector theta_new(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        next.m[i] = keep * state.m[i] + coeff * g[i];
    }
    if (!adaptive) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            theta_new[i] = theta[i] - hp.eta * next.m[i];
        }
    } else {
        const bool corrected = hp.bias_correction.value_or(false);
        const double t = static_cast<double>(next.t);
        const double bc1 = corrected ? 1.0 - std::pow(hp.beta, t) : 1.0;
        const double bc2 = corrected ? 1.0 - std::pow(hp.beta2, t) : 1.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            next.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g[i] * g[i];
            const double m_hat = next.m[i] / bc1;
            const double v_hat = next.v[i] / bc2;
            theta_new[i] = theta[i] - hp.eta * m_hat / (std::sqrt(v_hat) + hp.c);
        }
    }
    StepTelemetry tel = make_telemetry(theta, theta_new, g, next, a.S, a.s_hat, a.d);
    return {std::move(theta_new), std::move(next), tel};
}

StepResult sgd_as_stateful(const ParamVector& theta, const ParamVector& g,
                           const OptimizerState& state, const HyperParams& hp) {
    require_same_size(theta, state.m, "theta/m");
    auto [theta_new, tel] = sgd_step(theta, g, hp);
    OptimizerState next = state;
    next.t = state.t + 1;
    next.m = g;
    tel.t = next.t;
    tel.m_norm = tel.grad_norm;
    return {std::move(theta_new), std::move(next), tel};
}

StepFunction base_step(std::string_view name) {
    if (name == "sgd") return sgd_as_stateful;
    if (name == "sgdm") return sgdm_step;
    if (name == "tam") return tam_step;
    if (name == "adam" || name == "adamw") return adam_step;
    if (name == "adatam" || name == "adatamw") return adatam_step;
    if (name == "adatam2") return adatam2_step;
    throw DomainError("unknown optimizer '" + std::string(name) + "'");
}

} // namespace

void HyperParams::validate() const {
    check_range(std::isfinite(eta) && eta >= 0.0, "eta", "[0, inf)", eta);
    check_range(beta >= 0.0 && beta < 1.0, "beta", "[0, 1)", beta);
    check_range(gamma >= 0.0 && gamma <= 1.0, "gamma", "[0, 1]", gamma);
    check_range(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon", "[0, inf)", epsilon);
    check_range(beta2 >= 0.0 && beta2 < 1.0, "beta2", "[0, 1)", beta2);
    check_range(std::isfinite(c) && c > 0.0, "c", "(0, inf)", c);
    check_range(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay", "[0, inf)",
                weight_decay);
    if (damping_override) {
        const double d = *damping_override;
        check_range(d >= 0.0 && d <= 1.0, "damping_override", "[0, 1]", d);
    }
}

double cosine_similarity(const ParamVector& m_prev, const ParamVector& g) {
    const double num = dot(m_prev, g);
    const double nm = norm(m_prev);
    const double ng = norm(g);
    if (nm == 0.0 || ng == 0.0) {
        return 0.0;
    }
    const double c = num / (nm * ng);
    if (std::isfinite(c)) {
        return std::clamp(c, -1.0, 1.0);
    }
    // Overflow in the sums: rescale both vectors by their largest entry.
    const auto unit_max = [](const ParamVector& v) {
        double mx = 0.0;
        for (double x : v) {
            mx = std::max(mx, std::fabs(x));
        }
        return scaled(1.0 / mx, v);
    };
    const ParamVector a = unit_max(m_prev);
    const ParamVector b = unit_max(g);
    return std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0);
}

StepResult tam_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                    const HyperParams& hp) {
    return torque_step(theta, g, state, hp, MomentumRule::damped, false);
}

StepResult adatam_step(const ParamVector& theta, const ParamVector& g,
                       const OptimizerState& state, const HyperParams& hp) {
    return torque_step(theta, g, state, hp, MomentumRule::damped, true);
}

StepResult adatam2_step(const ParamVector& theta, const ParamVector& g,
                        const OptimizerState& state, const HyperParams& hp) {
    return torque_step(theta, g, state, hp, MomentumRule::damped_ema, true);
}

StepResult sgdm_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                     const HyperParams& hp) {
    check_inputs(theta, g, state, hp);
    const double S = cosine_similarity(state.m, g);
    const double s_hat = hp.gamma * state.s_hat + (1.0 - hp.gamma) * S;

    OptimizerState next = state;
    next.t = state.t + 1;
    next.s_hat = s_hat;
    ParamVector theta_new(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        next.m[i] = hp.beta * state.m[i] + g[i];
        theta_new[i] = theta[i] - hp.eta * next.m[i];
    }
    StepTelemetry tel = make_telemetry(theta, theta_new, g, next, S, s_hat, 1.0);
    return {std::move(theta_new), std::move(next), tel};
}

SgdResult sgd_step(const ParamVector& theta, const ParamVector& g, const HyperParams& hp) {
    require_same_size(theta, g, "theta/g");
    require_finite(theta, "theta");
    require_finite(g, "g");
    hp.validate();
    ParamVector theta_new(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        theta_new[i] = theta[i] - hp.eta * g[i];
    }
    StepTelemetry tel;
    tel.grad_norm = norm(g);
    tel.m_norm = tel.grad_norm;
    tel.update_norm = norm(difference(theta_new, theta));
    return {std::move(theta_new), tel};
}

StepResult adam_step(const ParamVector& theta, const ParamVector& g, const OptimizerState& state,
                     const HyperParams& hp) {
    check_inputs(theta, g, state, hp);
    const double S = cosine_similarity(state.m, g);
    const double s_hat = hp.gamma * state.s_hat + (1.0 - hp.gamma) * S;

    OptimizerState next = state;
    next.t = state.t + 1;
    next.s_hat = s_hat;
    const bool corrected = hp.bias_correction.value_or(true);
    const double t = static_cast<double>(next.t);
    const double bc1 = corrected ? 1.0 - std::pow(hp.beta, t) : 1.0;
    const double bc2 = corrected ? 1.0 - std::pow(hp.beta2, t) : 1.0;
    ParamVector theta_new(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        next.m[i] = hp.beta * state.m[i] + (1.0 - hp.beta) * g[i];
        next.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g[i] * g[i];
        const double m_hat = next.m[i] / bc1;
        const double v_hat = next.v[i] / bc2;
        theta_new[i] = theta[i] - hp.eta * m_hat / (std::sqrt(v_hat) + hp.c);
    }
    StepTelemetry tel = make_telemetry(theta, theta_new, g, next, S, s_hat, 1.0);
    return {std::move(theta_new), std::move(next), tel};
}

StepFunction with_decoupled_weight_decay(StepFunction inner, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DomainError("weight decay lambda must be finite and >= 0");
    }
    return [inner = std::move(inner), lambda](const ParamVector& theta, const ParamVector& g,
                                              const OptimizerState& state,
                                              const HyperParams& hp) {
        StepResult r = inner(theta, g, state, hp);
        if (lambda == 0.0) {
            return r;
        }
        const double shrink = hp.eta * lambda;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            r.theta[i] -= shrink * theta[i];
        }
        r.telemetry.update_norm = norm(difference(r.theta, theta));
        return r;
    };
}

StepFunction make_step_function(std::string_view name) {
    StepFunction inner = base_step(name);
    return [inner = std::move(inner)](const ParamVector& theta, const ParamVector& g,
                                      const OptimizerState& state, const HyperParams& hp) {
        if (hp.weight_decay > 0.0) {
            return with_decoupled_weight_decay(inner, hp.weight_decay)(theta, g, state, hp);
        }
        return inner(theta, g, state, hp);
    };
}

const std::vector<std::string>& optimizer_names() {
    static const std::vector<std::string> names = {"sgd",    "sgdm",    "tam",   "adam",
                                                   "adatam", "adatam2", "adamw", "adatamw"};
    return names;
}

bool is_known_optimizer(std::string_view name) {
    const auto& names = optimizer_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

} // namespace tamopt
