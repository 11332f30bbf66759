#include "tamopt/vecmath.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tamopt {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace

bool ParamVector::all_finite() const noexcept {
    for (double v : m_values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void require_same_size(const ParamVector& a, const ParamVector& b, std::string_view what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
}

void require_finite(const ParamVector& v, std::string_view field) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw NumericError(std::string(field), "non-finite value in '" + std::string(field) +
                                                       "' at index " + std::to_string(i));
        }
    }
}

double dot(const ParamVector& a, const ParamVector& b) {
    require_same_size(a, b, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double norm(const ParamVector& a) {
    double sum = 0.0;
    for (double v : a) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
    require_same_size(x, y, "axpy");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = alpha * x[i] + y[i];
    }
    return out;
}

ParamVector scaled(double alpha, const ParamVector& x) {
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = alpha * x[i];
    }
    return out;
}

ParamVector difference(const ParamVector& x, const ParamVector& y) {
    require_same_size(x, y, "difference");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] - y[i];
    }
    return out;
}

RngStream::RngStream(std::uint64_t seed) : m_seed(seed) {
    std::uint64_t x = seed;
    for (auto& s : m_state) {
        s = splitmix64(x);
    }
}

std::uint64_t RngStream::next_u64() noexcept {
    const std::uint64_t result = rotl(m_state[1] * 5, 7) * 9;
    const std::uint64_t t = m_state[1] << 17;
    m_state[2] ^= m_state[0];
    m_state[3] ^= m_state[1];
    m_state[1] ^= m_state[2];
    m_state[0] ^= m_state[3];
    m_state[2] ^= t;
    m_state[3] = rotl(m_state[3], 45);
    return result;
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::index(std::uint64_t n) noexcept {
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

double RngStream::normal() noexcept {
    if (m_has_cached_normal) {
        m_has_cached_normal = false;
        return m_cached_normal;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    m_cached_normal = r * std::sin(angle);
    m_has_cached_normal = true;
    return r * std::cos(angle);
}

ParamVector RngStream::normal_vector(std::size_t n) {
    ParamVector out(n);
    for (auto& v : out) {
        v = normal();
    }
    return out;
}

} // namespace tamopt
