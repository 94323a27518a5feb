#include "oneshot/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oneshot {

namespace {

std::size_t idx4(const std::vector<int>& s, int a, int b, int c, int d) {
    return ((static_cast<std::size_t>(a) * s[1] + b) * s[2] + c) * s[3] + d;
}

void check_positive_dims(const std::vector<int>& shape, const std::string& what) {
    if (shape.empty()) throw std::invalid_argument(what + " shape must not be empty");
    for (int d : shape)
        if (d <= 0)
            throw std::invalid_argument(what + " shape must be positive, got " +
                                        shape_string(shape));
}

}  // namespace

NodeId Graph::add_node(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

void Graph::check_id(NodeId id, const std::string& where) const {
    if (id < 0 || id >= num_nodes())
        throw std::invalid_argument(where + ": node id " + std::to_string(id) +
                                    " out of range");
}

const Node& Graph::node(NodeId id) const {
    check_id(id, "node");
    return nodes_[static_cast<std::size_t>(id)];
}

NodeId Graph::param_node(const std::string& name) const {
    auto it = param_ids_.find(name);
    if (it == param_ids_.end())
        throw std::out_of_range("no parameter node named " + name);
    return it->second;
}

std::vector<std::string> Graph::param_names() const {
    std::vector<std::string> names;
    names.reserve(param_ids_.size());
    for (const auto& [name, id] : param_ids_) names.push_back(name);
    return names;
}

NodeId Graph::input(std::vector<int> sample_shape) {
    if (input_ >= 0) throw std::logic_error("graph already has an input node");
    check_positive_dims(sample_shape, "input sample");
    Node n;
    n.kind = OpKind::INPUT;
    n.label = "input";
    n.shape_attr = std::move(sample_shape);
    input_ = add_node(std::move(n));
    return input_;
}

NodeId Graph::param(const std::string& name, std::vector<int> shape) {
    if (param_ids_.count(name))
        throw std::invalid_argument("duplicate parameter node: " + name);
    check_positive_dims(shape, "parameter " + name);
    Node n;
    n.kind = OpKind::PARAM;
    n.label = name;
    n.shape_attr = std::move(shape);
    NodeId id = add_node(std::move(n));
    param_ids_[name] = id;
    return id;
}

NodeId Graph::linear(NodeId x, NodeId w, NodeId b, const std::string& label) {
    check_id(x, label);
    check_id(w, label);
    check_id(b, label);
    Node n;
    n.kind = OpKind::LINEAR;
    n.label = label;
    n.inputs = {x, w, b};
    return add_node(std::move(n));
}

NodeId Graph::conv2d(NodeId x, NodeId w, NodeId b, int pad, const std::string& label) {
    check_id(x, label);
    check_id(w, label);
    check_id(b, label);
    if (pad < 0) throw std::invalid_argument(label + ": padding must be non-negative");
    Node n;
    n.kind = OpKind::CONV2D;
    n.label = label;
    n.inputs = {x, w, b};
    n.int_attr = pad;
    return add_node(std::move(n));
}

NodeId Graph::relu(NodeId x) {
    check_id(x, "relu");
    Node n;
    n.kind = OpKind::RELU;
    n.label = "relu" + std::to_string(num_nodes());
    n.inputs = {x};
    return add_node(std::move(n));
}

NodeId Graph::max_pool2(NodeId x) {
    check_id(x, "max_pool2");
    Node n;
    n.kind = OpKind::MAX_POOL2;
    n.label = "max_pool" + std::to_string(num_nodes());
    n.inputs = {x};
    return add_node(std::move(n));
}

NodeId Graph::global_avg_pool(NodeId x) {
    check_id(x, "global_avg_pool");
    Node n;
    n.kind = OpKind::GLOBAL_AVG_POOL;
    n.label = "global_avg_pool";
    n.inputs = {x};
    return add_node(std::move(n));
}

NodeId Graph::batch_norm(NodeId x, NodeId gamma, NodeId beta, int bn_index,
                         const std::string& label) {
    check_id(x, label);
    check_id(gamma, label);
    check_id(beta, label);
    if (bn_index < 0) throw std::invalid_argument(label + ": negative batch-norm index");
    Node n;
    n.kind = OpKind::BATCH_NORM;
    n.label = label;
    n.inputs = {x, gamma, beta};
    n.int_attr = bn_index;
    return add_node(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, const std::string& label) {
    check_id(logits, label);
    Node n;
    n.kind = OpKind::SOFTMAX_CROSS_ENTROPY;
    n.label = label;
    n.inputs = {logits};
    return add_node(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    check_id(a, "add");
    check_id(b, "add");
    Node n;
    n.kind = OpKind::ADD;
    n.label = "add" + std::to_string(num_nodes());
    n.inputs = {a, b};
    return add_node(std::move(n));
}

NodeId Graph::square(NodeId x) {
    check_id(x, "square");
    Node n;
    n.kind = OpKind::SQUARE;
    n.label = "square" + std::to_string(num_nodes());
    n.inputs = {x};
    return add_node(std::move(n));
}

NodeId Graph::sum(NodeId x) {
    check_id(x, "sum");
    Node n;
    n.kind = OpKind::SUM;
    n.label = "sum" + std::to_string(num_nodes());
    n.inputs = {x};
    return add_node(std::move(n));
}

NodeId Graph::scalar_mul(NodeId x, double k) {
    check_id(x, "scalar_mul");
    Node n;
    n.kind = OpKind::SCALAR_MUL;
    n.label = "scalar_mul" + std::to_string(num_nodes());
    n.inputs = {x};
    n.scalar_attr = k;
    return add_node(std::move(n));
}

NodeId Graph::quadratic_penalty(NodeId x, Tensor weights, Tensor anchor, double coeff,
                                const std::string& label) {
    check_id(x, label);
    if (!weights.same_shape(anchor))
        throw std::invalid_argument(label + ": weight shape " + shape_string(weights.shape()) +
                                    " does not match anchor shape " +
                                    shape_string(anchor.shape()));
    Node n;
    n.kind = OpKind::QUADRATIC_PENALTY;
    n.label = label;
    n.inputs = {x};
    n.scalar_attr = coeff;
    n.weights_attr = std::move(weights);
    n.anchor_attr = std::move(anchor);
    return add_node(std::move(n));
}

void Graph::set_loss(NodeId id) {
    check_id(id, "set_loss");
    loss_ = id;
}

void Graph::eval_node(NodeId id, const ForwardContext& ctx, const Tensor& batch,
                      const std::vector<int>* labels) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    auto in = [&](int i) -> const Tensor& {
        return nodes_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(i)])].value;
    };

    switch (n.kind) {
        case OpKind::INPUT: {
            if (batch.ndim() != static_cast<int>(n.shape_attr.size()) + 1)
                throw std::invalid_argument("input batch has shape " +
                                            shape_string(batch.shape()) +
                                            " but samples are " + shape_string(n.shape_attr));
            for (std::size_t i = 0; i < n.shape_attr.size(); ++i)
                if (batch.dim(static_cast<int>(i) + 1) != n.shape_attr[i])
                    throw std::invalid_argument("input batch has shape " +
                                                shape_string(batch.shape()) +
                                                " but samples are " +
                                                shape_string(n.shape_attr));
            if (!batch.all_finite())
                throw std::invalid_argument("input batch contains non-finite values");
            n.value = batch;
            break;
        }
        case OpKind::PARAM: {
            if (!ctx.params) throw std::logic_error("forward context has no parameter set");
            const Tensor& p = ctx.params->at(n.label);
            if (p.shape() != n.shape_attr)
                throw std::invalid_argument("parameter " + n.label + " has shape " +
                                            shape_string(p.shape()) + ", expected " +
                                            shape_string(n.shape_attr));
            n.value = p;
            break;
        }
        case OpKind::LINEAR: {
            const Tensor& x = in(0);
            const Tensor& w = in(1);
            const Tensor& b = in(2);
            if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1 || x.dim(1) != w.dim(1) ||
                b.dim(0) != w.dim(0))
                throw std::invalid_argument(n.label + ": incompatible shapes, x " +
                                            shape_string(x.shape()) + " w " +
                                            shape_string(w.shape()) + " b " +
                                            shape_string(b.shape()));
            const int N = x.dim(0), in_dim = x.dim(1), out_dim = w.dim(0);
            Tensor y({N, out_dim});
            for (int s = 0; s < N; ++s)
                for (int o = 0; o < out_dim; ++o) {
                    double acc = b[o];
                    for (int i = 0; i < in_dim; ++i)
                        acc += w[static_cast<std::size_t>(o) * in_dim + i] *
                               x[static_cast<std::size_t>(s) * in_dim + i];
                    y[static_cast<std::size_t>(s) * out_dim + o] = acc;
                }
            n.value = std::move(y);
            break;
        }
        case OpKind::CONV2D: {
            const Tensor& x = in(0);
            const Tensor& w = in(1);
            const Tensor& b = in(2);
            if (x.ndim() != 4 || w.ndim() != 4 || b.ndim() != 1 || x.dim(1) != w.dim(1) ||
                b.dim(0) != w.dim(0))
                throw std::invalid_argument(n.label + ": incompatible shapes, x " +
                                            shape_string(x.shape()) + " w " +
                                            shape_string(w.shape()) + " b " +
                                            shape_string(b.shape()));
            const int p = n.int_attr;
            const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            const int O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
            const int Ho = H + 2 * p - kh + 1, Wo = W + 2 * p - kw + 1;
            if (Ho < 1 || Wo < 1)
                throw std::invalid_argument(n.label + ": kernel " + shape_string(w.shape()) +
                                            " too large for input " + shape_string(x.shape()) +
                                            " with padding " + std::to_string(p));
            Tensor y({N, O, Ho, Wo});
            for (int s = 0; s < N; ++s)
                for (int o = 0; o < O; ++o)
                    for (int i = 0; i < Ho; ++i)
                        for (int j = 0; j < Wo; ++j) {
                            double acc = b[o];
                            for (int c = 0; c < C; ++c)
                                for (int u = 0; u < kh; ++u) {
                                    const int xi = i + u - p;
                                    if (xi < 0 || xi >= H) continue;
                                    for (int v = 0; v < kw; ++v) {
                                        const int xj = j + v - p;
                                        if (xj < 0 || xj >= W) continue;
                                        acc += w[idx4(w.shape(), o, c, u, v)] *
                                               x[idx4(x.shape(), s, c, xi, xj)];
                                    }
                                }
                            y[idx4(y.shape(), s, o, i, j)] = acc;
                        }
            n.value = std::move(y);
            break;
        }
        case OpKind::RELU: {
            const Tensor& x = in(0);
            Tensor y(x.shape());
            for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
            n.value = std::move(y);
            break;
        }
        case OpKind::MAX_POOL2: {
            const Tensor& x = in(0);
            if (x.ndim() != 4)
                throw std::invalid_argument(n.label + ": expects [N,C,H,W], got " +
                                            shape_string(x.shape()));
            const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            const int Ho = H / 2, Wo = W / 2;
            if (Ho < 1 || Wo < 1)
                throw std::invalid_argument(n.label + ": input " + shape_string(x.shape()) +
                                            " too small for 2x2 pooling");
            Tensor y({N, C, Ho, Wo});
            n.argmax_cache.assign(y.numel(), 0);
            for (int s = 0; s < N; ++s)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < Ho; ++i)
                        for (int j = 0; j < Wo; ++j) {
                            std::size_t best = idx4(x.shape(), s, c, 2 * i, 2 * j);
                            double best_v = x[best];
                            for (int u = 0; u < 2; ++u)
                                for (int v = 0; v < 2; ++v) {
                                    const std::size_t k =
                                        idx4(x.shape(), s, c, 2 * i + u, 2 * j + v);
                                    if (x[k] > best_v) {
                                        best_v = x[k];
                                        best = k;
                                    }
                                }
                            const std::size_t oi = idx4(y.shape(), s, c, i, j);
                            y[oi] = best_v;
                            n.argmax_cache[oi] = best;
                        }
            n.value = std::move(y);
            break;
        }
        case OpKind::GLOBAL_AVG_POOL: {
            const Tensor& x = in(0);
            if (x.ndim() != 4)
                throw std::invalid_argument(n.label + ": expects [N,C,H,W], got " +
                                            shape_string(x.shape()));
            const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            Tensor y({N, C});
            for (int s = 0; s < N; ++s)
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int i = 0; i < H; ++i)
                        for (int j = 0; j < W; ++j) acc += x[idx4(x.shape(), s, c, i, j)];
                    y[static_cast<std::size_t>(s) * C + c] = acc / (H * W);
                }
            n.value = std::move(y);
            break;
        }
        case OpKind::BATCH_NORM: {
            if (!ctx.bn_states)
                throw std::logic_error(n.label + ": forward context has no batch-norm states");
            const int bi = n.int_attr;
            if (bi >= static_cast<int>(ctx.bn_states->size()))
                throw std::invalid_argument(n.label + ": batch-norm index " +
                                            std::to_string(bi) + " out of range");
            n.value = bn_forward(in(0), in(1), in(2),
                                 (*ctx.bn_states)[static_cast<std::size_t>(bi)], ctx.mode,
                                 &n.bn_cache);
            break;
        }
        case OpKind::SOFTMAX_CROSS_ENTROPY: {
            const Tensor& z = in(0);
            if (z.ndim() != 2)
                throw std::invalid_argument(n.label + ": expects [N,K] logits, got " +
                                            shape_string(z.shape()));
            if (!labels) throw std::logic_error(n.label + ": forward pass provided no labels");
            const int N = z.dim(0), K = z.dim(1);
            if (static_cast<int>(labels->size()) != N)
                throw std::invalid_argument(n.label + ": " + std::to_string(labels->size()) +
                                            " labels for batch of " + std::to_string(N));
            n.probs_cache = Tensor({N, K});
            double loss = 0.0;
            for (int s = 0; s < N; ++s) {
                const int y = (*labels)[static_cast<std::size_t>(s)];
                if (y < 1 || y > K)
                    throw std::invalid_argument(n.label + ": label " + std::to_string(y) +
                                                " outside 1.." + std::to_string(K));
                const std::size_t row = static_cast<std::size_t>(s) * K;
                double mx = z[row];
                for (int k = 1; k < K; ++k) mx = std::max(mx, z[row + k]);
                double denom = 0.0;
                for (int k = 0; k < K; ++k) denom += std::exp(z[row + k] - mx);
                for (int k = 0; k < K; ++k)
                    n.probs_cache[row + k] = std::exp(z[row + k] - mx) / denom;
                loss += std::log(denom) - (z[row + y - 1] - mx);
            }
            n.value = Tensor::scalar(loss / N);
            break;
        }
        case OpKind::ADD: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            if (!a.same_shape(b))
                throw std::invalid_argument(n.label + ": shape mismatch " +
                                            shape_string(a.shape()) + " vs " +
                                            shape_string(b.shape()));
            Tensor y(a.shape());
            for (std::size_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
            n.value = std::move(y);
            break;
        }
        case OpKind::SQUARE: {
            const Tensor& x = in(0);
            Tensor y(x.shape());
            for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] * x[i];
            n.value = std::move(y);
            break;
        }
        case OpKind::SUM: {
            const Tensor& x = in(0);
            double acc = 0.0;
            for (std::size_t i = 0; i < x.numel(); ++i) acc += x[i];
            n.value = Tensor::scalar(acc);
            break;
        }
        case OpKind::SCALAR_MUL: {
            const Tensor& x = in(0);
            Tensor y(x.shape());
            for (std::size_t i = 0; i < x.numel(); ++i) y[i] = n.scalar_attr * x[i];
            n.value = std::move(y);
            break;
        }
        case OpKind::QUADRATIC_PENALTY: {
            const Tensor& x = in(0);
            if (!x.same_shape(n.weights_attr))
                throw std::invalid_argument(n.label + ": input shape " +
                                            shape_string(x.shape()) +
                                            " does not match penalty weights " +
                                            shape_string(n.weights_attr.shape()));
            double acc = 0.0;
            for (std::size_t i = 0; i < x.numel(); ++i) {
                const double d = x[i] - n.anchor_attr[i];
                acc += n.weights_attr[i] * d * d;
            }
            n.value = Tensor::scalar(0.5 * n.scalar_attr * acc);
            break;
        }
    }
}

void Graph::eval_needed(NodeId target, const ForwardContext& ctx, const Tensor& batch,
                        const std::vector<int>* labels) {
    check_id(target, "forward");
    needed_.assign(nodes_.size(), 0);
    std::vector<NodeId> stack{target};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        if (needed_[static_cast<std::size_t>(id)]) continue;
        needed_[static_cast<std::size_t>(id)] = 1;
        for (NodeId dep : nodes_[static_cast<std::size_t>(id)].inputs) stack.push_back(dep);
    }
    for (Node& n : nodes_) n.grad = Tensor();
    for (NodeId id = 0; id <= target; ++id)
        if (needed_[static_cast<std::size_t>(id)]) eval_node(id, ctx, batch, labels);
    last_target_ = target;
    last_mode_ = ctx.mode;
    forward_done_ = true;
}

double Graph::forward(const ForwardContext& ctx, const Tensor& batch,
                      const std::vector<int>& labels) {
    if (loss_ < 0) throw std::logic_error("no loss node set");
    labels_ = labels;
    eval_needed(loss_, ctx, batch, &labels_);
    return nodes_[static_cast<std::size_t>(loss_)].value[0];
}

Tensor Graph::forward_to(NodeId target, const ForwardContext& ctx, const Tensor& batch) {
    eval_needed(target, ctx, batch, nullptr);
    return nodes_[static_cast<std::size_t>(target)].value;
}

void Graph::backprop_node(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& dy = n.grad;
    auto input_node = [&](int i) -> Node& {
        return nodes_[static_cast<std::size_t>(n.inputs[static_cast<std::size_t>(i)])];
    };

    switch (n.kind) {
        case OpKind::INPUT:
        case OpKind::PARAM:
            break;
        case OpKind::LINEAR: {
            Node& xn = input_node(0);
            Node& wn = input_node(1);
            Node& bn = input_node(2);
            const Tensor& x = xn.value;
            const Tensor& w = wn.value;
            const int N = x.dim(0), in_dim = x.dim(1), out_dim = w.dim(0);
            for (int s = 0; s < N; ++s)
                for (int o = 0; o < out_dim; ++o) {
                    const double g = dy[static_cast<std::size_t>(s) * out_dim + o];
                    bn.grad[o] += g;
                    for (int i = 0; i < in_dim; ++i) {
                        wn.grad[static_cast<std::size_t>(o) * in_dim + i] +=
                            g * x[static_cast<std::size_t>(s) * in_dim + i];
                        xn.grad[static_cast<std::size_t>(s) * in_dim + i] +=
                            g * w[static_cast<std::size_t>(o) * in_dim + i];
                    }
                }
            break;
        }
        case OpKind::CONV2D: {
            Node& xn = input_node(0);
            Node& wn = input_node(1);
            Node& bn = input_node(2);
            const Tensor& x = xn.value;
            const Tensor& w = wn.value;
            const int p = n.int_attr;
            const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            const int O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
            const int Ho = n.value.dim(2), Wo = n.value.dim(3);
            for (int s = 0; s < N; ++s)
                for (int o = 0; o < O; ++o)
                    for (int i = 0; i < Ho; ++i)
                        for (int j = 0; j < Wo; ++j) {
                            const double g = dy[idx4(n.value.shape(), s, o, i, j)];
                            bn.grad[o] += g;
                            for (int c = 0; c < C; ++c)
                                for (int u = 0; u < kh; ++u) {
                                    const int xi = i + u - p;
                                    if (xi < 0 || xi >= H) continue;
                                    for (int v = 0; v < kw; ++v) {
                                        const int xj = j + v - p;
                                        if (xj < 0 || xj >= W) continue;
                                        wn.grad[idx4(w.shape(), o, c, u, v)] +=
                                            g * x[idx4(x.shape(), s, c, xi, xj)];
                                        xn.grad[idx4(x.shape(), s, c, xi, xj)] +=
                                            g * w[idx4(w.shape(), o, c, u, v)];
                                    }
                                }
                        }
            break;
        }
        case OpKind::RELU: {
            Node& xn = input_node(0);
            for (std::size_t i = 0; i < dy.numel(); ++i)
                if (xn.value[i] > 0.0) xn.grad[i] += dy[i];
            break;
        }
        case OpKind::MAX_POOL2: {
            Node& xn = input_node(0);
            for (std::size_t i = 0; i < dy.numel(); ++i) xn.grad[n.argmax_cache[i]] += dy[i];
            break;
        }
        case OpKind::GLOBAL_AVG_POOL: {
            Node& xn = input_node(0);
            const Tensor& x = xn.value;
            const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            const double inv = 1.0 / (H * W);
            for (int s = 0; s < N; ++s)
                for (int c = 0; c < C; ++c) {
                    const double g = dy[static_cast<std::size_t>(s) * C + c] * inv;
                    for (int i = 0; i < H; ++i)
                        for (int j = 0; j < W; ++j) xn.grad[idx4(x.shape(), s, c, i, j)] += g;
                }
            break;
        }
        case OpKind::BATCH_NORM: {
            Node& xn = input_node(0);
            Node& gn = input_node(1);
            Node& bn = input_node(2);
            BnGrads g = bn_backward(dy, n.bn_cache, last_mode_);
            for (std::size_t i = 0; i < g.dx.numel(); ++i) xn.grad[i] += g.dx[i];
            for (std::size_t i = 0; i < g.dgamma.numel(); ++i) gn.grad[i] += g.dgamma[i];
            for (std::size_t i = 0; i < g.dbeta.numel(); ++i) bn.grad[i] += g.dbeta[i];
            break;
        }
        case OpKind::SOFTMAX_CROSS_ENTROPY: {
            Node& zn = input_node(0);
            const int N = zn.value.dim(0), K = zn.value.dim(1);
            const double up = dy[0];
            for (int s = 0; s < N; ++s) {
                const std::size_t row = static_cast<std::size_t>(s) * K;
                const int y = labels_[static_cast<std::size_t>(s)] - 1;
                for (int k = 0; k < K; ++k) {
                    const double target = (k == y) ? 1.0 : 0.0;
                    zn.grad[row + k] += up * (n.probs_cache[row + k] - target) / N;
                }
            }
            break;
        }
        case OpKind::ADD: {
            for (int side = 0; side < 2; ++side) {
                Node& a = input_node(side);
                for (std::size_t i = 0; i < dy.numel(); ++i) a.grad[i] += dy[i];
            }
            break;
        }
        case OpKind::SQUARE: {
            Node& xn = input_node(0);
            for (std::size_t i = 0; i < dy.numel(); ++i)
                xn.grad[i] += 2.0 * xn.value[i] * dy[i];
            break;
        }
        case OpKind::SUM: {
            Node& xn = input_node(0);
            const double g = dy[0];
            for (std::size_t i = 0; i < xn.grad.numel(); ++i) xn.grad[i] += g;
            break;
        }
        case OpKind::SCALAR_MUL: {
            Node& xn = input_node(0);
            for (std::size_t i = 0; i < dy.numel(); ++i) xn.grad[i] += n.scalar_attr * dy[i];
            break;
        }
        case OpKind::QUADRATIC_PENALTY: {
            Node& xn = input_node(0);
            const double up = dy[0] * n.scalar_attr;
            for (std::size_t i = 0; i < xn.value.numel(); ++i)
                xn.grad[i] += up * n.weights_attr[i] * (xn.value[i] - n.anchor_attr[i]);
            break;
        }
    }
}

ParameterSet Graph::backward() {
    if (!forward_done_) throw std::logic_error("backward called before forward");
    if (last_target_ != loss_)
        throw std::logic_error("backward requires a forward pass of the loss node");
    if (last_mode_ == StatsMode::INFERENCE)
        throw std::logic_error("cannot backpropagate through an inference-mode forward");
    Node& loss_node = nodes_[static_cast<std::size_t>(loss_)];
    if (loss_node.value.numel() != 1)
        throw std::logic_error("loss node must be scalar, has shape " +
                               shape_string(loss_node.value.shape()));

    for (NodeId id = 0; id <= last_target_; ++id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (needed_[static_cast<std::size_t>(id)]) n.grad = Tensor::zeros(n.value.shape());
    }
    loss_node.grad[0] = 1.0;
    for (NodeId id = last_target_; id >= 0; --id)
        if (needed_[static_cast<std::size_t>(id)]) backprop_node(id);

    ParameterSet grads;
    for (const auto& [name, id] : param_ids_) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (needed_[static_cast<std::size_t>(id)])
            grads.insert(name, n.grad);
        else
            grads.insert(name, Tensor::zeros(n.shape_attr));
    }
    return grads;
}

const Tensor& Graph::value(NodeId id) const {
    check_id(id, "value");
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!forward_done_ || n.value.empty())
        throw std::logic_error("node " + n.label + " has no value, run forward first");
    return n.value;
}

const Tensor& Graph::grad(NodeId id) const {
    check_id(id, "grad");
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty())
        throw std::logic_error("node " + n.label + " has no gradient, run backward first");
    return n.grad;
}

}  // namespace oneshot
