#include "oneshot/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oneshot/rng.hpp"

namespace oneshot {

void validate(const ModelSpec& spec) {
    if (spec.arch != "mlp" && spec.arch != "small_cnn")
        throw std::invalid_argument("unknown architecture: " + spec.arch);
    if (spec.num_classes < 2)
        throw std::invalid_argument("need at least 2 classes, got " +
                                    std::to_string(spec.num_classes));
    if (spec.hidden.empty()) throw std::invalid_argument("hidden layer list is empty");
    for (int h : spec.hidden)
        if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
    if (spec.arch == "mlp") {
        if (spec.input_shape.size() != 1 || spec.input_shape[0] <= 0)
            throw std::invalid_argument("mlp input shape must be [D], got " +
                                        shape_string(spec.input_shape));
    } else {
        if (spec.input_shape.size() != 3)
            throw std::invalid_argument("small_cnn input shape must be [C,H,W], got " +
                                        shape_string(spec.input_shape));
        for (int d : spec.input_shape)
            if (d <= 0)
                throw std::invalid_argument("small_cnn input shape must be positive, got " +
                                            shape_string(spec.input_shape));
        int h = spec.input_shape[1], w = spec.input_shape[2];
        for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
            if (h < 2 || w < 2)
                throw std::invalid_argument("input " + shape_string(spec.input_shape) +
                                            " too small for " +
                                            std::to_string(spec.hidden.size()) +
                                            " pooling stages");
            h /= 2;
            w /= 2;
        }
    }
}

namespace {

Tensor he_normal(RngStream& rng, std::vector<int> shape, int fan_in) {
    Tensor t(std::move(shape));
    const double scale = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
    return t;
}

}  // namespace

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
    validate(spec);
    Model m;
    m.spec = spec;
    RngStream rng = RngStream::named(seed, "init");

    Graph& g = m.graph;
    m.input = g.input(spec.input_shape);
    NodeId x = m.input;
    int bn_index = 0;

    auto add_bn_relu = [&](NodeId in, int channels, const std::string& tag) {
        const std::string gname = tag + ".gamma";
        const std::string bname = tag + ".beta";
        m.params.insert(gname, Tensor::full({channels}, 1.0));
        m.params.insert(bname, Tensor::zeros({channels}));
        NodeId gamma = g.param(gname, {channels});
        NodeId beta = g.param(bname, {channels});
        m.bn_states.push_back(make_bn_state(channels));
        NodeId bn = g.batch_norm(in, gamma, beta, bn_index++, tag);
        return g.relu(bn);
    };

    int feat;
    if (spec.arch == "mlp") {
        feat = spec.input_shape[0];
        for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
            const int width = spec.hidden[i];
            const std::string tag = "fc" + std::to_string(i + 1);
            m.params.insert(tag + ".weight", he_normal(rng, {width, feat}, feat));
            m.params.insert(tag + ".bias", Tensor::zeros({width}));
            NodeId w = g.param(tag + ".weight", {width, feat});
            NodeId b = g.param(tag + ".bias", {width});
            x = g.linear(x, w, b, tag);
            x = add_bn_relu(x, width, "bn" + std::to_string(i + 1));
            feat = width;
        }
    } else {
        int channels = spec.input_shape[0];
        for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
            const int out_ch = spec.hidden[i];
            const std::string tag = "conv" + std::to_string(i + 1);
            m.params.insert(tag + ".weight",
                            he_normal(rng, {out_ch, channels, 3, 3}, channels * 9));
            m.params.insert(tag + ".bias", Tensor::zeros({out_ch}));
            NodeId w = g.param(tag + ".weight", {out_ch, channels, 3, 3});
            NodeId b = g.param(tag + ".bias", {out_ch});
            x = g.conv2d(x, w, b, 1, tag);
            x = add_bn_relu(x, out_ch, "bn" + std::to_string(i + 1));
            x = g.max_pool2(x);
            channels = out_ch;
        }
        x = g.global_avg_pool(x);
        feat = channels;
    }

    m.params.insert("head.weight", he_normal(rng, {spec.num_classes, feat}, feat));
    m.params.insert("head.bias", Tensor::zeros({spec.num_classes}));
    NodeId hw = g.param("head.weight", {spec.num_classes, feat});
    NodeId hb = g.param("head.bias", {spec.num_classes});
    m.logits = g.linear(x, hw, hb, "head");
    m.loss = g.softmax_cross_entropy(m.logits, "cross_entropy");
    g.set_loss(m.loss);
    return m;
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.ndim() != 2)
        throw std::invalid_argument("softmax expects [N,K], got " +
                                    shape_string(logits.shape()));
    const int N = logits.dim(0), K = logits.dim(1);
    Tensor probs({N, K});
    for (int s = 0; s < N; ++s) {
        const std::size_t row = static_cast<std::size_t>(s) * K;
        double mx = logits[row];
        for (int k = 1; k < K; ++k) mx = std::max(mx, logits[row + k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(logits[row + k] - mx);
        for (int k = 0; k < K; ++k) probs[row + k] = std::exp(logits[row + k] - mx) / denom;
    }
    return probs;
}

Prediction predict(Model& model, const Tensor& batch, StatsMode mode) {
    ForwardContext ctx = model.context(mode);
    Tensor logits = model.graph.forward_to(model.logits, ctx, batch);
    Prediction p;
    p.probs = softmax_rows(logits);
    const int N = p.probs.dim(0), K = p.probs.dim(1);
    p.labels.reserve(static_cast<std::size_t>(N));
    for (int s = 0; s < N; ++s) {
        const std::size_t row = static_cast<std::size_t>(s) * K;
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (p.probs[row + k] > p.probs[row + best]) best = k;
        p.labels.push_back(best + 1);
    }
    return p;
}

double accuracy(Model& model, const std::vector<Sample>& data, int chunk) {
    if (data.empty()) throw std::invalid_argument("cannot score an empty dataset");
    if (chunk < 1) throw std::invalid_argument("chunk size must be positive");
    std::size_t correct = 0;
    for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(chunk)) {
        const std::size_t stop = std::min(data.size(), start + static_cast<std::size_t>(chunk));
        std::vector<Sample> part(data.begin() + static_cast<std::ptrdiff_t>(start),
                                 data.begin() + static_cast<std::ptrdiff_t>(stop));
        Batch b = make_batch(part);
        Prediction p = predict(model, b.x);
        for (std::size_t i = 0; i < p.labels.size(); ++i)
            if (p.labels[i] == b.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace oneshot
