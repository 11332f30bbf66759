#include "tamopt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "tamopt/io.hpp"

namespace tamopt {

namespace {

struct LayerView {
    std::size_t n_in;
    std::size_t n_out;
    std::size_t weight_offset;
    std::size_t bias_offset;
};

std::vector<LayerView> layers_of(const MlpSpec& spec) {
    std::vector<LayerView> out;
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t n_in = spec.layer_sizes[l];
        const std::size_t n_out = spec.layer_sizes[l + 1];
        out.push_back({n_in, n_out, offset, offset + n_in * n_out});
        offset += n_in * n_out + n_out;
    }
    return out;
}

void check_batch(const ParamVector& theta, const MlpSpec& spec, const Batch& batch) {
    spec.validate();
    if (theta.size() != spec.parameter_count()) {
        throw DimensionError("mlp: theta has " + std::to_string(theta.size()) +
                             " entries, spec needs " + std::to_string(spec.parameter_count()));
    }
    if (batch.labels.empty()) {
        throw DimensionError("mlp: empty batch");
    }
    if (batch.inputs.size() != batch.labels.size() * spec.input_dim()) {
        throw DimensionError("mlp: batch inputs do not match input width " +
                             std::to_string(spec.input_dim()));
    }
    for (std::size_t y : batch.labels) {
        if (y >= spec.classes()) {
            throw DimensionError("mlp: label " + std::to_string(y) + " out of range");
        }
    }
}

// Activations of every layer for one sample; acts[0] is the input, the last
// entry holds the logits. pre[l] holds pre-activations of layer l + 1.
struct Trace {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> pre;
};

void forward_sample(const ParamVector& theta, const std::vector<LayerView>& layers,
                    std::span<const double> x, Trace& trace) {
    trace.acts.resize(layers.size() + 1);
    trace.pre.resize(layers.size());
    trace.acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerView& L = layers[l];
        const bool hidden = l + 1 < layers.size();
        auto& z = trace.pre[l];
        auto& a = trace.acts[l + 1];
        z.assign(L.n_out, 0.0);
        a.assign(L.n_out, 0.0);
        const auto& prev = trace.acts[l];
        for (std::size_t o = 0; o < L.n_out; ++o) {
            double sum = theta[L.bias_offset + o];
            const std::size_t row = L.weight_offset + o * L.n_in;
            for (std::size_t i = 0; i < L.n_in; ++i) {
                sum += theta[row + i] * prev[i];
            }
            z[o] = sum;
            a[o] = hidden ? (sum > 0.0 ? sum : 0.0) : sum;
        }
    }
}

struct SampleScore {
    double loss;
    bool correct;
};

// Cross-entropy of the logits against `label`; fills softmax probabilities.
SampleScore score_logits(const std::vector<double>& logits, std::size_t label,
                         std::vector<double>& probs) {
    const double top = *std::max_element(logits.begin(), logits.end());
    probs.resize(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        probs[k] = std::exp(logits[k] - top);
        total += probs[k];
    }
    for (auto& p : probs) {
        p /= total;
    }
    const double loss = std::log(total) + top - logits[label];
    const auto argmax = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    return {loss, argmax == label};
}

} // namespace

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) {
        throw DomainError("mlp spec needs at least input and output sizes");
    }
    for (std::size_t n : layer_sizes) {
        if (n < 1) {
            throw DomainError("mlp layer sizes must be >= 1");
        }
    }
}

std::size_t MlpSpec::parameter_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    }
    return total;
}

void Dataset::validate() const {
    if (features.size() != labels.size() * dim) {
        throw DimensionError("dataset: feature count does not match rows * dim");
    }
    for (std::size_t y : labels) {
        if (y >= classes) {
            throw DomainError("dataset: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(classes) + ")");
        }
    }
}

ParamVector init_mlp(const MlpSpec& spec, RngStream& rng) {
    spec.validate();
    ParamVector theta(spec.parameter_count());
    for (const LayerView& L : layers_of(spec)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(L.n_in));
        for (std::size_t k = 0; k < L.n_in * L.n_out; ++k) {
            theta[L.weight_offset + k] = rng.uniform(-limit, limit);
        }
    }
    return theta;
}

MlpEvaluation forward_backward(const ParamVector& theta, const MlpSpec& spec, Batch batch) {
    check_batch(theta, spec, batch);
    const auto layers = layers_of(spec);
    const std::size_t n = batch.labels.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    MlpEvaluation out{0.0, ParamVector(theta.size()), 0};
    Trace trace;
    std::vector<double> probs;
    std::vector<double> delta;
    std::vector<double> delta_prev;
    double loss_sum = 0.0;

    for (std::size_t s = 0; s < n; ++s) {
        forward_sample(theta, layers, batch.inputs.subspan(s * spec.input_dim(), spec.input_dim()),
                       trace);
        const SampleScore sc = score_logits(trace.acts.back(), batch.labels[s], probs);
        loss_sum += sc.loss;
        out.correct += sc.correct ? 1 : 0;

        delta = probs;
        delta[batch.labels[s]] -= 1.0;
        for (auto& v : delta) {
            v *= inv_n;
        }
        for (std::size_t l = layers.size(); l-- > 0;) {
            const LayerView& L = layers[l];
            const auto& prev = trace.acts[l];
            for (std::size_t o = 0; o < L.n_out; ++o) {
                const std::size_t row = L.weight_offset + o * L.n_in;
                for (std::size_t i = 0; i < L.n_in; ++i) {
                    out.grad[row + i] += delta[o] * prev[i];
                }
                out.grad[L.bias_offset + o] += delta[o];
            }
            if (l == 0) {
                break;
            }
            delta_prev.assign(L.n_in, 0.0);
            for (std::size_t o = 0; o < L.n_out; ++o) {
                const std::size_t row = L.weight_offset + o * L.n_in;
                for (std::size_t i = 0; i < L.n_in; ++i) {
                    delta_prev[i] += theta[row + i] * delta[o];
                }
            }
            const auto& z_prev = trace.pre[l - 1];
            for (std::size_t i = 0; i < L.n_in; ++i) {
                if (!(z_prev[i] > 0.0)) {
                    delta_prev[i] = 0.0;
                }
            }
            delta.swap(delta_prev);
        }
    }
    out.loss = loss_sum * inv_n;
    return out;
}

MlpScores evaluate_mlp(const ParamVector& theta, const MlpSpec& spec, Batch batch) {
    check_batch(theta, spec, batch);
    const auto layers = layers_of(spec);
    const std::size_t n = batch.labels.size();
    Trace trace;
    std::vector<double> probs;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t s = 0; s < n; ++s) {
        forward_sample(theta, layers, batch.inputs.subspan(s * spec.input_dim(), spec.input_dim()),
                       trace);
        const SampleScore sc = score_logits(trace.acts.back(), batch.labels[s], probs);
        loss_sum += sc.loss;
        correct += sc.correct ? 1 : 0;
    }
    return {loss_sum / static_cast<double>(n),
            static_cast<double>(correct) / static_cast<double>(n)};
}

Batch whole(const Dataset& data) { return {data.features, data.labels}; }

Dataset make_gaussian_mixture(std::size_t n_classes, std::size_t dim, std::size_t n_per_class,
                              double spread, RngStream& rng) {
    if (n_classes < 1 || dim < 1 || n_per_class < 1) {
        throw DomainError("gaussian mixture: counts must be >= 1");
    }
    if (!(spread >= 0.0) || !std::isfinite(spread)) {
        throw DomainError("gaussian mixture: spread must be finite and >= 0");
    }
    std::vector<ParamVector> means;
    for (std::size_t k = 0; k < n_classes; ++k) {
        means.push_back(rng.normal_vector(dim));
    }
    Dataset data;
    data.dim = dim;
    data.classes = n_classes;
    data.features.reserve(n_classes * n_per_class * dim);
    data.labels.reserve(n_classes * n_per_class);
    for (std::size_t k = 0; k < n_classes; ++k) {
        for (std::size_t s = 0; s < n_per_class; ++s) {
            for (std::size_t j = 0; j < dim; ++j) {
                data.features.push_back(means[k][j] + spread * rng.normal());
            }
            data.labels.push_back(k);
        }
    }
    return data;
}

std::vector<std::size_t> flip_permutation(std::size_t n_classes, double delta, RngStream& rng) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
        throw DomainError("label flip delta must lie in [0, 1]");
    }
    const auto k = static_cast<std::size_t>(std::lround(delta * static_cast<double>(n_classes)));
    if (k == 1) {
        throw DomainError("label flip with delta " + std::to_string(delta) + " and " +
                          std::to_string(n_classes) + " classes moves exactly one class");
    }
    std::vector<std::size_t> perm(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        perm[c] = c;
    }
    if (k == 0) {
        return perm;
    }
    // Partial Fisher-Yates: the first k slots become a uniform random k-subset
    // in random order.
    std::vector<std::size_t> pool = perm;
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.index(n_classes - i));
        std::swap(pool[i], pool[j]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        perm[pool[i]] = pool[(i + 1) % k];
    }
    return perm;
}

std::vector<std::size_t> apply_permutation(std::span<const std::size_t> labels,
                                           std::span<const std::size_t> perm) {
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= perm.size()) {
            throw DomainError("label " + std::to_string(labels[i]) + " outside permutation");
        }
        out[i] = perm[labels[i]];
    }
    return out;
}

LabelFlip label_flip(std::span<const std::size_t> labels, std::size_t n_classes, double delta,
                     RngStream& rng) {
    LabelFlip out;
    out.permutation = flip_permutation(n_classes, delta, rng);
    out.labels = apply_permutation(labels, out.permutation);
    return out;
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t c = 0; c < perm.size(); ++c) {
        inv[perm[c]] = c;
    }
    return inv;
}

std::vector<std::size_t> TaskStream::mapping(std::size_t task) const {
    const std::size_t C = base->classes;
    std::vector<std::size_t> map(C);
    for (std::size_t c = 0; c < C; ++c) {
        map[c] = c;
    }
    for (std::size_t k = 1; k <= task; ++k) {
        for (auto& y : map) {
            y = flips[k][y];
        }
    }
    return map;
}

TaskStream make_task_stream(std::shared_ptr<const Dataset> base, std::size_t n_tasks, double delta,
                            RngStream& rng) {
    if (!base || n_tasks < 1) {
        throw DomainError("task stream needs a dataset and at least one task");
    }
    TaskStream stream;
    stream.delta = delta;
    const std::size_t C = base->classes;
    std::vector<std::size_t> identity(C);
    for (std::size_t c = 0; c < C; ++c) {
        identity[c] = c;
    }
    stream.flips.push_back(identity);
    for (std::size_t k = 1; k < n_tasks; ++k) {
        stream.flips.push_back(flip_permutation(C, delta, rng));
    }
    stream.base = std::move(base);
    return stream;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t j = 0; j < data.dim; ++j) {
        out << 'f' << j << ',';
    }
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) {
            out << format_double(v) << ',';
        }
        out << data.labels[i] << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, std::size_t classes) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DomainError("dataset csv: missing header");
    }
    const auto header = split(trim(line), ',');
    if (header.size() < 2 || trim(header.back()) != "label") {
        throw DomainError("dataset csv: header must end with 'label'");
    }
    Dataset data;
    data.dim = header.size() - 1;
    std::size_t line_no = 1;
    std::size_t max_label = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(trim(line), ',');
        if (cells.size() != data.dim + 1) {
            throw DomainError("dataset csv line " + std::to_string(line_no) + ": expected " +
                              std::to_string(data.dim + 1) + " columns");
        }
        try {
            for (std::size_t j = 0; j < data.dim; ++j) {
                data.features.push_back(parse_double(cells[j]));
            }
            const long long y = parse_integer(cells.back());
            if (y < 0) {
                throw std::invalid_argument("negative label");
            }
            data.labels.push_back(static_cast<std::size_t>(y));
            max_label = std::max(max_label, static_cast<std::size_t>(y));
        } catch (const std::invalid_argument& e) {
            throw DomainError("dataset csv line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    data.classes = classes == 0 ? max_label + 1 : classes;
    data.validate();
    return data;
}

} // namespace tamopt
