#include "oneshot/continual.hpp"

#include <numeric>
#include <stdexcept>

namespace oneshot {

ReplayBuffer make_replay_buffer(const std::vector<Sample>& data, int capacity,
                                RngStream& rng) {
    if (capacity < 1) throw std::invalid_argument("buffer capacity must be positive");
    if (capacity > static_cast<int>(data.size()))
        throw std::invalid_argument("buffer capacity " + std::to_string(capacity) +
                                    " exceeds dataset size " + std::to_string(data.size()));
    std::vector<int> idx;
    sample_without_replacement(rng, static_cast<int>(data.size()), capacity, idx);
    ReplayBuffer buf;
    buf.items.reserve(static_cast<std::size_t>(capacity));
    for (int i : idx) buf.items.push_back(data[static_cast<std::size_t>(i)]);
    return buf;
}

Batch sample_buffer_batch(const ReplayBuffer& buf, int count, RngStream& rng) {
    if (buf.items.empty()) throw std::invalid_argument("replay buffer is empty");
    if (count < 1 || count > static_cast<int>(buf.items.size()))
        throw std::invalid_argument("batch of " + std::to_string(count) +
                                    " from a buffer of " + std::to_string(buf.items.size()));
    std::vector<int> idx;
    sample_without_replacement(rng, static_cast<int>(buf.items.size()), count, idx);
    return make_batch(buf.items, idx);
}

namespace {

ComposedBatch finish_composed(std::vector<Sample>&& combined, std::vector<char>&& mask,
                              int buffer_count, int new_count, RngStream& rng) {
    std::vector<int> order(combined.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(rng, order);
    std::vector<Sample> mixed;
    mixed.reserve(combined.size());
    std::vector<char> mixed_mask;
    mixed_mask.reserve(mask.size());
    for (int i : order) {
        mixed.push_back(std::move(combined[static_cast<std::size_t>(i)]));
        mixed_mask.push_back(mask[static_cast<std::size_t>(i)]);
    }
    ComposedBatch out;
    out.batch = make_batch(mixed);
    out.from_new = std::move(mixed_mask);
    out.buffer_count = buffer_count;
    out.new_count = new_count;
    return out;
}

}  // namespace

ComposedBatch compose_minibatch(const ReplayBuffer& buf, int buffer_count,
                                const Sample& new_sample, int copy_count,
                                const AugmentConfig& aug, RngStream& rng) {
    if (buf.items.empty()) throw std::invalid_argument("replay buffer is empty");
    if (buffer_count < 1 || buffer_count > static_cast<int>(buf.items.size()))
        throw std::invalid_argument("batch of " + std::to_string(buffer_count) +
                                    " from a buffer of " + std::to_string(buf.items.size()));
    if (copy_count < 1) throw std::invalid_argument("need at least one augmented copy");

    std::vector<int> idx;
    sample_without_replacement(rng, static_cast<int>(buf.items.size()), buffer_count, idx);
    std::vector<Sample> combined;
    combined.reserve(static_cast<std::size_t>(buffer_count + copy_count));
    std::vector<char> mask;
    mask.reserve(combined.capacity());
    for (int i : idx) {
        combined.push_back(buf.items[static_cast<std::size_t>(i)]);
        mask.push_back(0);
    }
    for (Sample& s : replicate(new_sample, copy_count, aug, rng)) {
        combined.push_back(std::move(s));
        mask.push_back(1);
    }
    return finish_composed(std::move(combined), std::move(mask), buffer_count, copy_count,
                           rng);
}

ComposedBatch compose_mixed_batch(const ReplayBuffer& buf, int buffer_count,
                                  const ReplayBuffer& new_pool, int new_count,
                                  RngStream& rng) {
    if (buf.items.empty()) throw std::invalid_argument("replay buffer is empty");
    if (buffer_count < 1 || buffer_count > static_cast<int>(buf.items.size()))
        throw std::invalid_argument("batch of " + std::to_string(buffer_count) +
                                    " from a buffer of " + std::to_string(buf.items.size()));
    if (new_pool.items.empty()) throw std::invalid_argument("new-domain pool is empty");
    if (new_count < 1 || new_count > static_cast<int>(new_pool.items.size()))
        throw std::invalid_argument("batch of " + std::to_string(new_count) +
                                    " from a pool of " + std::to_string(new_pool.items.size()));

    std::vector<int> idx;
    sample_without_replacement(rng, static_cast<int>(buf.items.size()), buffer_count, idx);
    std::vector<Sample> combined;
    combined.reserve(static_cast<std::size_t>(buffer_count + new_count));
    std::vector<char> mask;
    mask.reserve(combined.capacity());
    for (int i : idx) {
        combined.push_back(buf.items[static_cast<std::size_t>(i)]);
        mask.push_back(0);
    }
    std::vector<int> new_idx;
    sample_without_replacement(rng, static_cast<int>(new_pool.items.size()), new_count,
                               new_idx);
    for (int i : new_idx) {
        combined.push_back(new_pool.items[static_cast<std::size_t>(i)]);
        mask.push_back(1);
    }
    return finish_composed(std::move(combined), std::move(mask), buffer_count, new_count,
                           rng);
}

FisherDiag ewc_fisher(Model& model, const ReplayBuffer& buf, StatsMode mode) {
    if (buf.items.empty()) throw std::invalid_argument("replay buffer is empty");
    FisherDiag fd;
    fd.fisher = model.params.zeros_like();
    fd.anchor = model.params;
    for (const Sample& s : buf.items) {
        Batch b = make_batch({s});
        ForwardContext ctx = model.context(mode);
        model.graph.forward(ctx, b.x, b.labels);
        ParameterSet grads = model.graph.backward();
        for (auto& [name, acc] : fd.fisher) {
            const Tensor& g = grads.at(name);
            for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] += g[i] * g[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(buf.items.size());
    for (auto& [name, acc] : fd.fisher)
        for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] *= inv;
    return fd;
}

void attach_ewc_penalty(Model& model, const FisherDiag& fd, double lambda) {
    if (lambda < 0.0)
        throw std::invalid_argument("penalty strength must be non-negative, got " +
                                    std::to_string(lambda));
    if (fd.fisher.size() != model.params.size())
        throw std::invalid_argument("fisher covers " + std::to_string(fd.fisher.size()) +
                                    " parameters, model has " +
                                    std::to_string(model.params.size()));
    Graph& g = model.graph;
    NodeId total = model.loss;
    for (const auto& [name, p] : model.params) {
        const Tensor& f = fd.fisher.at(name);
        const Tensor& a = fd.anchor.at(name);
        if (!f.same_shape(p) || !a.same_shape(p))
            throw std::invalid_argument("fisher entry for " + name +
                                        " does not match the parameter shape");
        NodeId pen = g.quadratic_penalty(g.param_node(name), f, a, lambda, "penalty." + name);
        total = g.add(total, pen);
    }
    g.set_loss(total);
    model.loss = total;
}

FlatProjection gem_project(const std::vector<double>& grad,
                           const std::vector<double>& reference) {
    if (grad.size() != reference.size())
        throw std::invalid_argument("gradient has " + std::to_string(grad.size()) +
                                    " entries, reference has " +
                                    std::to_string(reference.size()));
    FlatProjection out;
    out.grad = grad;
    double dot = 0.0;
    double ref_norm2 = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        dot += grad[i] * reference[i];
        ref_norm2 += reference[i] * reference[i];
    }
    out.dot = dot;
    if (ref_norm2 == 0.0) {
        out.degenerate = true;
        out.post_dot = dot;
        return out;
    }
    if (dot >= 0.0) {
        out.post_dot = dot;
        return out;
    }
    const double coef = dot / ref_norm2;
    for (std::size_t i = 0; i < grad.size(); ++i) out.grad[i] -= coef * reference[i];
    out.projected = true;
    double post = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) post += out.grad[i] * reference[i];
    out.post_dot = post;
    return out;
}

GemProjection gem_project(const ParameterSet& grads, const ParameterSet& reference) {
    if (grads.size() != reference.size())
        throw std::invalid_argument("gradient and reference cover different parameters");
    for (const auto& [name, g] : grads) {
        if (!reference.at(name).same_shape(g))
            throw std::invalid_argument("reference gradient for " + name +
                                        " has mismatched shape");
    }
    FlatProjection flat = gem_project(grads.flatten(), reference.flatten());
    GemProjection out;
    out.grads = grads;
    out.grads.assign_flat(flat.grad);
    out.projected = flat.projected;
    out.degenerate = flat.degenerate;
    out.dot = flat.dot;
    out.post_dot = flat.post_dot;
    return out;
}

ParameterSet gem_reference_gradient(Model& model, const ReplayBuffer& buf, int batch_size,
                                    RngStream& rng) {
    Batch b = sample_buffer_batch(buf, batch_size, rng);
    ForwardContext ctx = model.context();
    model.graph.forward(ctx, b.x, b.labels);
    return model.graph.backward();
}

}  // namespace oneshot
