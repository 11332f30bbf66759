#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "tamopt/errors.hpp"

namespace tamopt {

/// Flat vector of doubles holding parameters, gradients and optimizer moments.
/// The length is fixed once constructed; there is no resize or push_back.
class ParamVector {
public:
    explicit ParamVector(std::size_t n = 0) : m_values(n, 0.0) {}
    explicit ParamVector(std::vector<double> values) : m_values(std::move(values)) {}
    ParamVector(std::initializer_list<double> values) : m_values(values) {}

    static ParamVector filled(std::size_t n, double value) {
        return ParamVector(std::vector<double>(n, value));
    }

    std::size_t size() const noexcept { return m_values.size(); }
    bool empty() const noexcept { return m_values.empty(); }

    double& operator[](std::size_t i) noexcept { return m_values[i]; }
    double operator[](std::size_t i) const noexcept { return m_values[i]; }

    std::span<double> values() noexcept { return m_values; }
    std::span<const double> values() const noexcept { return m_values; }

    auto begin() noexcept { return m_values.begin(); }
    auto end() noexcept { return m_values.end(); }
    auto begin() const noexcept { return m_values.begin(); }
    auto end() const noexcept { return m_values.end(); }

    const std::vector<double>& to_vector() const noexcept { return m_values; }

    bool all_finite() const noexcept;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> m_values;
};

/// Sequential left-to-right sum of a[i]*b[i]. The order is fixed so results are
/// reproducible bit for bit.
double dot(const ParamVector& a, const ParamVector& b);

/// sqrt(dot(a, a)); exactly 0.0 for the zero vector.
double norm(const ParamVector& a);

/// alpha * x + y, elementwise.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);

/// alpha * x, elementwise.
ParamVector scaled(double alpha, const ParamVector& x);

/// x - y, elementwise.
ParamVector difference(const ParamVector& x, const ParamVector& y);

/// Throws DimensionError unless both operands have the same length.
void require_same_size(const ParamVector& a, const ParamVector& b, std::string_view what);

/// Throws NumericError naming `field` if any entry is NaN or Inf.
void require_finite(const ParamVector& v, std::string_view field);

/// Seeded pseudo-random stream.
///
/// Generator: xoshiro256** (Blackman & Vigna, 2018). The 256-bit state is
/// expanded from the 64-bit seed with splitmix64 (increment
/// 0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB).
/// Every derived draw (uniform, bounded index, normal) is computed here from
/// raw 64-bit outputs, so sequences do not depend on the standard library's
/// distribution implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return m_seed; }

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
    std::uint64_t index(std::uint64_t n) noexcept;

    /// Standard normal draw (Box-Muller, second variate cached).
    double normal() noexcept;

    /// Vector of i.i.d. standard normals.
    ParamVector normal_vector(std::size_t n);

    /// In-place Fisher-Yates shuffle driven by `index`.
    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t m_seed;
    std::uint64_t m_state[4];
    double m_cached_normal = 0.0;
    bool m_has_cached_normal = false;
};

/// Derives the seed of run `index` from a base seed:
/// base XOR (index * 0x9E3779B97F4A7C15). Index 0 maps to the base seed.
constexpr std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return base ^ (index * 0x9E3779B97F4A7C15ULL);
}

} // namespace tamopt
