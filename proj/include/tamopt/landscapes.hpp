#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tamopt/vecmath.hpp"

namespace tamopt {

struct Evaluation {
    double loss = 0.0;
    ParamVector grad;
};

/// A differentiable objective. `evaluate` may consume randomness (stochastic
/// variants); `loss` is always the clean, deterministic objective value.
class Landscape {
public:
    virtual ~Landscape() = default;

    virtual std::size_t dim() const = 0;
    virtual Evaluation evaluate(const ParamVector& theta) = 0;
    virtual double loss(const ParamVector& theta) const = 0;
};

/// L = 1/2 sum_i A_i (theta_i - b_i)^2.
class Quadratic final : public Landscape {
public:
    Quadratic(ParamVector curvature, ParamVector center);

    std::size_t dim() const override { return m_curvature.size(); }
    Evaluation evaluate(const ParamVector& theta) override;
    double loss(const ParamVector& theta) const override;

    const ParamVector& curvature() const noexcept { return m_curvature; }
    const ParamVector& center() const noexcept { return m_center; }

private:
    ParamVector m_curvature;
    ParamVector m_center;
};

/// L = sum_i [100 (theta_{i+1} - theta_i^2)^2 + (1 - theta_i)^2].
class Rosenbrock final : public Landscape {
public:
    explicit Rosenbrock(std::size_t dim);

    std::size_t dim() const override { return m_dim; }
    Evaluation evaluate(const ParamVector& theta) override;
    double loss(const ParamVector& theta) const override;

private:
    std::size_t m_dim;
};

/// Adds sigma * z, z ~ N(0, I), to the base gradient. The loss is untouched.
class Noisy final : public Landscape {
public:
    Noisy(std::unique_ptr<Landscape> base, double sigma, RngStream rng);

    std::size_t dim() const override { return m_base->dim(); }
    Evaluation evaluate(const ParamVector& theta) override;
    double loss(const ParamVector& theta) const override { return m_base->loss(theta); }

private:
    std::unique_ptr<Landscape> m_base;
    double m_sigma;
    RngStream m_rng;
};

/// Synthetic torqued gradients: every `period`-th query (queries counted from
/// 1) gets an extra kappa * ||g_base|| * u, where u is a random unit vector
/// with u . g_base < 0. Other queries pass through. The loss is untouched.
class AlternatingAdversary final : public Landscape {
public:
    AlternatingAdversary(std::unique_ptr<Landscape> base, double kappa, std::size_t period,
                         RngStream rng);

    std::size_t dim() const override { return m_base->dim(); }
    Evaluation evaluate(const ParamVector& theta) override;
    double loss(const ParamVector& theta) const override { return m_base->loss(theta); }

    /// Whether query number `q` (1-based) receives a spike.
    bool is_spike_query(std::uint64_t q) const noexcept { return q % m_period == 0; }
    std::uint64_t queries() const noexcept { return m_queries; }

private:
    std::unique_ptr<Landscape> m_base;
    double m_kappa;
    std::size_t m_period;
    RngStream m_rng;
    std::uint64_t m_queries = 0;
};

std::unique_ptr<Landscape> quadratic(ParamVector curvature, ParamVector center);
std::unique_ptr<Landscape> rosenbrock(std::size_t dim);
std::unique_ptr<Landscape> noisy(std::unique_ptr<Landscape> base, double sigma, RngStream rng);
std::unique_ptr<Landscape> alternating_adversary(std::unique_ptr<Landscape> base, double kappa,
                                                 std::size_t period, RngStream rng);

/// Value description of a landscape, instantiated per run so that stochastic
/// wrappers draw from that run's seed.
struct LandscapeSpec {
    enum class Kind { quadratic, rosenbrock };

    Kind kind = Kind::quadratic;
    std::size_t dim = 2;
    std::vector<double> curvature = {1.0}; ///< one entry (broadcast) or dim entries
    std::vector<double> center = {0.0};    ///< one entry (broadcast) or dim entries
    std::vector<double> start = {1.0};     ///< initial theta, broadcast like above
    double noise_sigma = 0.0;
    double adversary_kappa = 0.0;
    std::size_t adversary_period = 5;

    /// Throws DomainError if sizes or ranges are invalid.
    void validate() const;
    ParamVector start_point() const;
};

/// Builds base -> optional noise -> optional adversary. The noise and the
/// adversary use independent streams split from `seed`.
std::unique_ptr<Landscape> build_landscape(const LandscapeSpec& spec, std::uint64_t seed);

const char* landscape_kind_name(LandscapeSpec::Kind kind);

} // namespace tamopt
