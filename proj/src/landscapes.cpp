#include "tamopt/landscapes.hpp"

#include <cmath>
#include <string>

namespace tamopt {

namespace {

ParamVector broadcast(const std::vector<double>& values, std::size_t dim, const char* name) {
    if (values.size() == 1) {
        return ParamVector::filled(dim, values.front());
    }
    if (values.size() != dim) {
        throw DomainError(std::string(name) + " must have 1 or " + std::to_string(dim) +
                          " entries, got " + std::to_string(values.size()));
    }
    return ParamVector(values);
}

} // namespace

Quadratic::Quadratic(ParamVector curvature, ParamVector center)
    : m_curvature(std::move(curvature)), m_center(std::move(center)) {
    require_same_size(m_curvature, m_center, "quadratic curvature/center");
    if (m_curvature.empty()) {
        throw DomainError("quadratic needs dim >= 1");
    }
    for (double a : m_curvature) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw DomainError("quadratic curvature entries must be > 0");
        }
    }
    require_finite(m_center, "center");
}

double Quadratic::loss(const ParamVector& theta) const {
    require_same_size(theta, m_center, "quadratic");
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double r = theta[i] - m_center[i];
        sum += m_curvature[i] * r * r;
    }
    return 0.5 * sum;
}

Evaluation Quadratic::evaluate(const ParamVector& theta) {
    Evaluation e{loss(theta), ParamVector(theta.size())};
    for (std::size_t i = 0; i < theta.size(); ++i) {
        e.grad[i] = m_curvature[i] * (theta[i] - m_center[i]);
    }
    return e;
}

Rosenbrock::Rosenbrock(std::size_t dim) : m_dim(dim) {
    if (dim < 2) {
        throw DomainError("rosenbrock needs dim >= 2");
    }
}

double Rosenbrock::loss(const ParamVector& theta) const {
    if (theta.size() != m_dim) {
        throw DimensionError("rosenbrock: theta has wrong length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < m_dim; ++i) {
        const double valley = theta[i + 1] - theta[i] * theta[i];
        const double offset = 1.0 - theta[i];
        sum += 100.0 * valley * valley + offset * offset;
    }
    return sum;
}

Evaluation Rosenbrock::evaluate(const ParamVector& theta) {
    Evaluation e{loss(theta), ParamVector(m_dim)};
    for (std::size_t i = 0; i + 1 < m_dim; ++i) {
        const double valley = theta[i + 1] - theta[i] * theta[i];
        e.grad[i] += -400.0 * theta[i] * valley - 2.0 * (1.0 - theta[i]);
        e.grad[i + 1] += 200.0 * valley;
    }
    return e;
}

Noisy::Noisy(std::unique_ptr<Landscape> base, double sigma, RngStream rng)
    : m_base(std::move(base)), m_sigma(sigma), m_rng(rng) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw DomainError("noise sigma must be finite and >= 0");
    }
}

Evaluation Noisy::evaluate(const ParamVector& theta) {
    Evaluation e = m_base->evaluate(theta);
    if (m_sigma == 0.0) {
        return e;
    }
    for (auto& g : e.grad) {
        g += m_sigma * m_rng.normal();
    }
    return e;
}

AlternatingAdversary::AlternatingAdversary(std::unique_ptr<Landscape> base, double kappa,
                                           std::size_t period, RngStream rng)
    : m_base(std::move(base)), m_kappa(kappa), m_period(period), m_rng(rng) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
        throw DomainError("adversary kappa must be finite and >= 0");
    }
    if (period < 1) {
        throw DomainError("adversary period must be >= 1");
    }
}

Evaluation AlternatingAdversary::evaluate(const ParamVector& theta) {
    Evaluation e = m_base->evaluate(theta);
    ++m_queries;
    if (!is_spike_query(m_queries) || m_kappa == 0.0) {
        return e;
    }
    const double gnorm = norm(e.grad);
    if (gnorm == 0.0) {
        return e;
    }
    // Random direction, reflected into the half-space opposing the gradient.
    ParamVector u(e.grad.size());
    double along = 0.0;
    double unorm = 0.0;
    do {
        u = m_rng.normal_vector(e.grad.size());
        along = dot(u, e.grad);
        unorm = norm(u);
    } while (along == 0.0 || unorm == 0.0);
    const double sign = along > 0.0 ? -1.0 : 1.0;
    const double scale = sign * m_kappa * gnorm / unorm;
    for (std::size_t i = 0; i < u.size(); ++i) {
        e.grad[i] += scale * u[i];
    }
    return e;
}

std::unique_ptr<Landscape> quadratic(ParamVector curvature, ParamVector center) {
    return std::make_unique<Quadratic>(std::move(curvature), std::move(center));
}

std::unique_ptr<Landscape> rosenbrock(std::size_t dim) { return std::make_unique<Rosenbrock>(dim); }

std::unique_ptr<Landscape> noisy(std::unique_ptr<Landscape> base, double sigma, RngStream rng) {
    return std::make_unique<Noisy>(std::move(base), sigma, rng);
}

std::unique_ptr<Landscape> alternating_adversary(std::unique_ptr<Landscape> base, double kappa,
                                                 std::size_t period, RngStream rng) {
    return std::make_unique<AlternatingAdversary>(std::move(base), kappa, period, rng);
}

void LandscapeSpec::validate() const {
    if (dim < 1) {
        throw DomainError("landscape dim must be >= 1");
    }
    if (kind == Kind::rosenbrock && dim < 2) {
        throw DomainError("rosenbrock needs dim >= 2");
    }
    broadcast(start, dim, "start");
    if (kind == Kind::quadratic) {
        broadcast(curvature, dim, "curvature");
        broadcast(center, dim, "center");
    }
    if (!(noise_sigma >= 0.0)) {
        throw DomainError("noise_sigma must be >= 0");
    }
    if (!(adversary_kappa >= 0.0)) {
        throw DomainError("adversary_kappa must be >= 0");
    }
    if (adversary_period < 1) {
        throw DomainError("adversary_period must be >= 1");
    }
}

ParamVector LandscapeSpec::start_point() const { return broadcast(start, dim, "start"); }

std::unique_ptr<Landscape> build_landscape(const LandscapeSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::unique_ptr<Landscape> out;
    if (spec.kind == LandscapeSpec::Kind::quadratic) {
        out = quadratic(broadcast(spec.curvature, spec.dim, "curvature"),
                        broadcast(spec.center, spec.dim, "center"));
    } else {
        out = rosenbrock(spec.dim);
    }
    if (spec.noise_sigma > 0.0) {
        out = noisy(std::move(out), spec.noise_sigma, RngStream(split_seed(seed, 1)));
    }
    if (spec.adversary_kappa > 0.0) {
        out = alternating_adversary(std::move(out), spec.adversary_kappa, spec.adversary_period,
                                    RngStream(split_seed(seed, 2)));
    }
    return out;
}

const char* landscape_kind_name(LandscapeSpec::Kind kind) {
    return kind == LandscapeSpec::Kind::quadratic ? "quadratic" : "rosenbrock";
}

} // namespace tamopt
