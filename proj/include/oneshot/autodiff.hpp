#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "oneshot/batchnorm.hpp"
#include "oneshot/tensor.hpp"

namespace oneshot {

enum class OpKind {
    INPUT,
    PARAM,
    LINEAR,
    CONV2D,
    RELU,
    MAX_POOL2,
    GLOBAL_AVG_POOL,
    BATCH_NORM,
    SOFTMAX_CROSS_ENTROPY,
    ADD,
    SQUARE,
    SUM,
    SCALAR_MUL,
    QUADRATIC_PENALTY,
};

using NodeId = int;

/// Everything a forward pass needs besides the batch itself. The graph holds
/// structure only; parameter values and batch-norm running statistics live
/// with the caller so a model can be copied or checkpointed as plain data.
struct ForwardContext {
    const ParameterSet* params = nullptr;
    std::vector<BatchNormState>* bn_states = nullptr;
    StatsMode mode = StatsMode::INFERENCE;
};

struct Node {
    OpKind kind = OpKind::INPUT;
    std::string label;
    std::vector<NodeId> inputs;

    int int_attr = 0;
    double scalar_attr = 0.0;
    std::vector<int> shape_attr;
    Tensor weights_attr;
    Tensor anchor_attr;

    Tensor value;
    Tensor grad;
    BnCache bn_cache;
    std::vector<std::size_t> argmax_cache;
    Tensor probs_cache;
};

/// Reverse-mode autodiff over a statically built computation graph. Node ids
/// increase in construction order, which is also a valid topological order.
/// Values and gradients are retained on the nodes after forward/backward.
class Graph {
public:
    NodeId input(std::vector<int> sample_shape);
    NodeId param(const std::string& name, std::vector<int> shape);
    NodeId linear(NodeId x, NodeId w, NodeId b, const std::string& label);
    NodeId conv2d(NodeId x, NodeId w, NodeId b, int pad, const std::string& label);
    NodeId relu(NodeId x);
    NodeId max_pool2(NodeId x);
    NodeId global_avg_pool(NodeId x);
    NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, int bn_index,
                      const std::string& label);
    NodeId softmax_cross_entropy(NodeId logits, const std::string& label);
    NodeId add(NodeId a, NodeId b);
    NodeId square(NodeId x);
    NodeId sum(NodeId x);
    NodeId scalar_mul(NodeId x, double k);
    NodeId quadratic_penalty(NodeId x, Tensor weights, Tensor anchor, double coeff,
                             const std::string& label);

    void set_loss(NodeId id);
    NodeId loss_node() const { return loss_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const Node& node(NodeId id) const;
    NodeId param_node(const std::string& name) const;
    std::vector<std::string> param_names() const;

    /// Evaluates the loss node on a labelled batch. Labels are 1-based class
    /// indices. Returns the scalar loss. Batch-norm side effects follow
    /// ctx.mode.
    double forward(const ForwardContext& ctx, const Tensor& batch,
                   const std::vector<int>& labels);

    /// Evaluates only the ancestors of `target` (no labels required as long
    /// as no cross-entropy node is an ancestor) and returns its value.
    Tensor forward_to(NodeId target, const ForwardContext& ctx, const Tensor& batch);

    /// Backpropagates from the most recent forward() and returns one gradient
    /// tensor per parameter node, zero where a parameter did not participate.
    ParameterSet backward();

    const Tensor& value(NodeId id) const;
    const Tensor& grad(NodeId id) const;

private:
    NodeId add_node(Node n);
    void check_id(NodeId id, const std::string& where) const;
    void eval_needed(NodeId target, const ForwardContext& ctx, const Tensor& batch,
                     const std::vector<int>* labels);
    void eval_node(NodeId id, const ForwardContext& ctx, const Tensor& batch,
                   const std::vector<int>* labels);
    void backprop_node(NodeId id);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> param_ids_;
    NodeId input_ = -1;
    NodeId loss_ = -1;
    std::vector<int> labels_;
    std::vector<char> needed_;
    NodeId last_target_ = -1;
    StatsMode last_mode_ = StatsMode::INFERENCE;
    bool forward_done_ = false;
};

}  // namespace oneshot
