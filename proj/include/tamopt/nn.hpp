#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tamopt/vecmath.hpp"

namespace tamopt {

/// Fully connected classifier: ReLU on hidden layers, softmax cross-entropy on
/// the output.
///
/// Flattened parameter layout, layer by layer: the weight matrix of layer l
/// (n_out rows by n_in columns, row-major) followed by its n_out biases.
struct MlpSpec {
    std::vector<std::size_t> layer_sizes; ///< input, hidden..., output

    void validate() const;
    std::size_t parameter_count() const;
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t classes() const { return layer_sizes.back(); }
};

/// Samples stored row-major: `features` holds size() rows of `dim` values.
struct Dataset {
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(features).subspan(i * dim, dim);
    }
    void validate() const;
};

/// Non-owning view of a minibatch: inputs row-major, one label per row.
struct Batch {
    std::span<const double> inputs;
    std::span<const std::size_t> labels;
};

struct MlpEvaluation {
    double loss = 0.0;       ///< mean cross-entropy
    ParamVector grad;        ///< gradient of the mean loss
    std::size_t correct = 0; ///< argmax hits, ties resolved to the lowest class
};

struct MlpScores {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), drawn layer by layer in
/// storage order; biases are zero.
ParamVector init_mlp(const MlpSpec& spec, RngStream& rng);

/// Mean softmax cross-entropy over the batch and its exact gradient.
/// ReLU has subgradient 0 at exactly 0.
MlpEvaluation forward_backward(const ParamVector& theta, const MlpSpec& spec, Batch batch);

/// Forward pass only.
MlpScores evaluate_mlp(const ParamVector& theta, const MlpSpec& spec, Batch batch);

Batch whole(const Dataset& data);

/// `n_classes` isotropic Gaussian clusters. Class means are drawn as
/// N(0, I_dim) vectors, samples are mean + spread * N(0, I_dim). Rows are
/// stored class by class, exactly n_per_class rows per class.
Dataset make_gaussian_mixture(std::size_t n_classes, std::size_t dim, std::size_t n_per_class,
                              double spread, RngStream& rng);

struct LabelFlip {
    std::vector<std::size_t> labels;
    std::vector<std::size_t> permutation; ///< new_label = permutation[old_label]
};

/// Picks k = round(delta * n_classes) classes uniformly at random and shifts
/// them cyclically among themselves; the rest stay fixed. k = 1 is rejected
/// because a single class cannot be moved.
std::vector<std::size_t> flip_permutation(std::size_t n_classes, double delta, RngStream& rng);

LabelFlip label_flip(std::span<const std::size_t> labels, std::size_t n_classes, double delta,
                     RngStream& rng);

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm);

std::vector<std::size_t> apply_permutation(std::span<const std::size_t> labels,
                                           std::span<const std::size_t> perm);

/// Sequence of relabeled tasks over one base dataset. Task 0 uses the original
/// labels; each later task applies one more flip to the previous task's
/// labelling, so consecutive tasks differ in exactly round(delta * C) classes.
struct TaskStream {
    std::shared_ptr<const Dataset> base;
    std::vector<std::vector<std::size_t>> flips; ///< flips[k] maps task k-1 labels to task k
    double delta = 0.0;

    std::size_t tasks() const noexcept { return flips.size(); }
    /// Composite map from base labels to the labels of task k.
    std::vector<std::size_t> mapping(std::size_t task) const;
};

TaskStream make_task_stream(std::shared_ptr<const Dataset> base, std::size_t n_tasks, double delta,
                            RngStream& rng);

/// CSV, one row per sample: f0,...,f{dim-1},label. Header row
/// "f0,...,f{dim-1},label". Floats use 17 significant digits.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Reads the format above. `classes` = 0 infers max(label) + 1.
Dataset read_dataset_csv(std::istream& in, std::size_t classes = 0);

} // namespace tamopt
