#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oneshot/autodiff.hpp"
#include "oneshot/tensor.hpp"

namespace oneshot {

/// Architecture description. "mlp" takes flat [D] samples and stacks
/// linear -> batch norm -> relu blocks of the given hidden widths before a
/// linear head. "small_cnn" takes [C,H,W] samples and stacks
/// 3x3 conv (pad 1) -> batch norm -> relu -> 2x2 max pool blocks with the
/// given channel counts, then global average pooling and a linear head.
struct ModelSpec {
    std::string arch = "small_cnn";
    std::vector<int> input_shape;
    std::vector<int> hidden;
    int num_classes = 2;

    bool operator==(const ModelSpec&) const = default;
};

void validate(const ModelSpec& spec);

/// A model is plain data plus a graph: copying it copies the weights and
/// running statistics, which is how trials get independent instances. The
/// mode field governs every batch-norm layer at once.
struct Model {
    ModelSpec spec;
    Graph graph;
    ParameterSet params;
    std::vector<BatchNormState> bn_states;
    StatsMode mode = StatsMode::INFERENCE;
    NodeId input = -1;
    NodeId logits = -1;
    NodeId loss = -1;

    ForwardContext context() { return {&params, &bn_states, mode}; }
    ForwardContext context(StatsMode override_mode) {
        return {&params, &bn_states, override_mode};
    }
};

/// Builds the graph and initializes parameters: He-scaled normal weights,
/// zero biases, unit batch-norm scale, zero shift, running mean 0 and
/// running variance 1. Deterministic in the seed.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct Prediction {
    std::vector<int> labels;
    Tensor probs;
};

/// Softmax over each row of a [N,K] tensor.
Tensor softmax_rows(const Tensor& logits);

/// Class predictions for a batch; ties resolve to the smallest class index.
/// Labels are 1-based. The default mode leaves running statistics untouched.
Prediction predict(Model& model, const Tensor& batch,
                   StatsMode mode = StatsMode::INFERENCE);

/// Fraction of samples whose predicted class matches the 1-based label.
double accuracy(Model& model, const std::vector<Sample>& data, int chunk = 256);

}  // namespace oneshot
