#pragma once

// Reference implementations written against plain std::vector<double> with
// scalar loops. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

// Neumaier compensated sum of a[i]*b[i].
inline double compensated_dot(const Vec& a, const Vec& b) {
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double term = a[i] * b[i];
        const double t = sum + term;
        if (std::fabs(sum) >= std::fabs(term)) {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

enum class Rule { sgdm, tam, adam, adatam, adatam2 };

struct Params {
    double eta = 0.1;
    double beta = 0.9;
    double gamma = 0.9;
    double eps = 1e-8;
    double beta2 = 0.999;
    double c = 1e-8;
    bool bias_correction = false;
    std::optional<double> d_override;
};

struct State {
    Vec m;
    Vec v;
    double s_hat = 0.0;
    long t = 0;

    explicit State(std::size_t n, double s0 = 0.0) : m(n, 0.0), v(n, 0.0), s_hat(s0) {}
};

inline double cosine(const Vec& m, const Vec& g) {
    double mg = 0.0;
    double mm = 0.0;
    double gg = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        mg += m[i] * g[i];
        mm += m[i] * m[i];
        gg += g[i] * g[i];
    }
    if (mm == 0.0 || gg == 0.0) {
        return 0.0;
    }
    return std::clamp(mg / (std::sqrt(mm) * std::sqrt(gg)), -1.0, 1.0);
}

// One optimizer step on theta in place.
inline void step(Rule rule, Vec& theta, const Vec& g, State& st, const Params& p) {
    const std::size_t n = theta.size();
    st.t += 1;
    if (rule == Rule::sgdm) {
        for (std::size_t i = 0; i < n; ++i) {
            st.m[i] = p.beta * st.m[i] + g[i];
            theta[i] -= p.eta * st.m[i];
        }
        return;
    }
    if (rule == Rule::adam) {
        const double bc1 = p.bias_correction ? 1.0 - std::pow(p.beta, double(st.t)) : 1.0;
        const double bc2 = p.bias_correction ? 1.0 - std::pow(p.beta2, double(st.t)) : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            st.m[i] = p.beta * st.m[i] + (1.0 - p.beta) * g[i];
            st.v[i] = p.beta2 * st.v[i] + (1.0 - p.beta2) * g[i] * g[i];
            theta[i] -= p.eta * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + p.c);
        }
        return;
    }
    const double S = cosine(st.m, g);
    st.s_hat = p.gamma * st.s_hat + (1.0 - p.gamma) * S;
    const double d = p.d_override ? *p.d_override : (1.0 + st.s_hat) / 2.0;
    const double k = p.eps + d;
    for (std::size_t i = 0; i < n; ++i) {
        if (rule == Rule::adatam2) {
            st.m[i] = (1.0 - k) * st.m[i] + k * g[i];
        } else {
            st.m[i] = p.beta * st.m[i] + k * g[i];
        }
    }
    if (rule == Rule::tam) {
        for (std::size_t i = 0; i < n; ++i) {
            theta[i] -= p.eta * st.m[i];
        }
        return;
    }
    const double bc1 = p.bias_correction ? 1.0 - std::pow(p.beta, double(st.t)) : 1.0;
    const double bc2 = p.bias_correction ? 1.0 - std::pow(p.beta2, double(st.t)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        st.v[i] = p.beta2 * st.v[i] + (1.0 - p.beta2) * g[i] * g[i];
        theta[i] -= p.eta * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + p.c);
    }
}

// Central differences, error normalised by max(1, |analytic|).
inline double fd_max_rel_error(const std::function<double(const Vec&)>& f, Vec x,
                               const Vec& analytic, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        const double fd = (fp - fm) / (2.0 * h);
        worst = std::max(worst, std::fabs(analytic[i] - fd) / std::max(1.0, std::fabs(analytic[i])));
    }
    return worst;
}

// Softmax cross-entropy of a ReLU MLP, mean over samples, written directly
// from the layer equations. Layout per layer: W (out x in, row-major), then b.
inline double mlp_loss(const Vec& theta, const std::vector<std::size_t>& sizes, const Vec& inputs,
                       const std::vector<std::size_t>& labels) {
    const std::size_t n = labels.size();
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        Vec a(inputs.begin() + long(s * sizes[0]), inputs.begin() + long((s + 1) * sizes[0]));
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const std::size_t in = sizes[l];
            const std::size_t out = sizes[l + 1];
            Vec z(out, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                double acc = theta[off + out * in + o];
                for (std::size_t j = 0; j < in; ++j) {
                    acc += theta[off + o * in + j] * a[j];
                }
                z[o] = (l + 2 < sizes.size()) ? std::max(0.0, acc) : acc;
            }
            off += out * in + out;
            a = z;
        }
        const double mx = *std::max_element(a.begin(), a.end());
        double se = 0.0;
        for (double z : a) {
            se += std::exp(z - mx);
        }
        total += std::log(se) + mx - a[labels[s]];
    }
    return total / double(n);
}

} // namespace oracle
