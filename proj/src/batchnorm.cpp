#include "oneshot/batchnorm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace oneshot {

std::string to_string(StatsMode mode) {
    switch (mode) {
        case StatsMode::UPDATED_STATS: return "updated_stats";
        case StatsMode::FIXED_STATS: return "fixed_stats";
        case StatsMode::INFERENCE: return "inference";
    }
    throw std::logic_error("unknown stats mode");
}

StatsMode stats_mode_from_string(const std::string& s) {
    if (s == "updated_stats") return StatsMode::UPDATED_STATS;
    if (s == "fixed_stats") return StatsMode::FIXED_STATS;
    if (s == "inference") return StatsMode::INFERENCE;
    throw std::invalid_argument("unknown stats mode: " + s);
}

BatchNormState make_bn_state(int channels) {
    BatchNormState st;
    st.running_mean = Tensor::zeros({channels});
    st.running_var = Tensor::full({channels}, 1.0);
    return st;
}

namespace {

struct BnLayout {
    int n = 0;
    int c = 0;
    int spatial = 1;

    std::size_t index(int sample, int channel, int s) const {
        return (static_cast<std::size_t>(sample) * c + channel) * spatial + s;
    }
    int reduce_count() const { return n * spatial; }
};

BnLayout check_layout(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const BatchNormState& state) {
    if (x.ndim() != 2 && x.ndim() != 4)
        throw std::invalid_argument("batch norm expects [N,C] or [N,C,H,W] input, got " +
                                    shape_string(x.shape()));
    BnLayout lay;
    lay.n = x.dim(0);
    lay.c = x.dim(1);
    if (x.ndim() == 4) lay.spatial = x.dim(2) * x.dim(3);
    if (gamma.shape() != std::vector<int>{lay.c} || beta.shape() != std::vector<int>{lay.c})
        throw std::invalid_argument("batch norm affine parameters must have shape [" +
                                    std::to_string(lay.c) + "], got gamma " +
                                    shape_string(gamma.shape()) + " beta " +
                                    shape_string(beta.shape()));
    if (state.channels() != lay.c)
        throw std::invalid_argument("batch norm state has " + std::to_string(state.channels()) +
                                    " channels but input has " + std::to_string(lay.c));
    return lay;
}

}  // namespace

Tensor bn_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, StatsMode mode, BnCache* cache) {
    BnLayout lay = check_layout(x, gamma, beta, state);
    if (mode == StatsMode::UPDATED_STATS && lay.n < 2)
        throw std::invalid_argument("batch statistics need at least 2 samples, got " +
                                    std::to_string(lay.n));

    Tensor use_mean({lay.c});
    Tensor use_var({lay.c});
    if (mode == StatsMode::UPDATED_STATS) {
        const double m = static_cast<double>(lay.reduce_count());
        for (int c = 0; c < lay.c; ++c) {
            double sum = 0.0;
            for (int n = 0; n < lay.n; ++n)
                for (int s = 0; s < lay.spatial; ++s) sum += x[lay.index(n, c, s)];
            const double mu = sum / m;
            double sq = 0.0;
            for (int n = 0; n < lay.n; ++n)
                for (int s = 0; s < lay.spatial; ++s) {
                    const double d = x[lay.index(n, c, s)] - mu;
                    sq += d * d;
                }
            use_mean[c] = mu;
            use_var[c] = sq / m;
        }
        for (int c = 0; c < lay.c; ++c) {
            state.running_mean[c] =
                (1.0 - state.momentum) * state.running_mean[c] + state.momentum * use_mean[c];
            state.running_var[c] =
                (1.0 - state.momentum) * state.running_var[c] + state.momentum * use_var[c];
        }
    } else {
        use_mean = state.running_mean;
        use_var = state.running_var;
    }

    Tensor inv_std({lay.c});
    for (int c = 0; c < lay.c; ++c) inv_std[c] = 1.0 / std::sqrt(use_var[c] + state.epsilon);

    Tensor x_hat(x.shape());
    Tensor y(x.shape());
    for (int c = 0; c < lay.c; ++c) {
        const double mu = use_mean[c];
        const double inv = inv_std[c];
        const double g = gamma[c];
        const double b = beta[c];
        for (int n = 0; n < lay.n; ++n)
            for (int s = 0; s < lay.spatial; ++s) {
                const std::size_t i = lay.index(n, c, s);
                x_hat[i] = (x[i] - mu) * inv;
                y[i] = g * x_hat[i] + b;
            }
    }

    if (cache) {
        cache->mode = mode;
        cache->in_shape = x.shape();
        cache->x_hat = std::move(x_hat);
        cache->inv_std = std::move(inv_std);
        cache->gamma = gamma;
    }
    return y;
}

BnGrads bn_backward(const Tensor& upstream, const BnCache& cache, StatsMode mode) {
    if (cache.mode == StatsMode::INFERENCE)
        throw std::logic_error("cannot backpropagate through an inference-mode forward");
    if (mode != cache.mode)
        throw std::logic_error("backward stats mode " + to_string(mode) +
                               " does not match forward mode " + to_string(cache.mode));
    if (upstream.shape() != cache.in_shape)
        throw std::invalid_argument("upstream gradient shape " + shape_string(upstream.shape()) +
                                    " does not match forward input " +
                                    shape_string(cache.in_shape));

    BnLayout lay;
    lay.n = cache.in_shape[0];
    lay.c = cache.in_shape[1];
    if (cache.in_shape.size() == 4) lay.spatial = cache.in_shape[2] * cache.in_shape[3];
    const double m = static_cast<double>(lay.reduce_count());

    BnGrads g;
    g.dx = Tensor(cache.in_shape);
    g.dgamma = Tensor({lay.c});
    g.dbeta = Tensor({lay.c});

    for (int c = 0; c < lay.c; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int n = 0; n < lay.n; ++n)
            for (int s = 0; s < lay.spatial; ++s) {
                const std::size_t i = lay.index(n, c, s);
                sum_dy += upstream[i];
                sum_dy_xhat += upstream[i] * cache.x_hat[i];
            }
        g.dbeta[c] = sum_dy;
        g.dgamma[c] = sum_dy_xhat;

        const double scale = cache.gamma[c] * cache.inv_std[c];
        if (cache.mode == StatsMode::FIXED_STATS) {
            for (int n = 0; n < lay.n; ++n)
                for (int s = 0; s < lay.spatial; ++s) {
                    const std::size_t i = lay.index(n, c, s);
                    g.dx[i] = upstream[i] * scale;
                }
        } else {
            const double mean_dy = sum_dy / m;
            const double mean_dy_xhat = sum_dy_xhat / m;
            for (int n = 0; n < lay.n; ++n)
                for (int s = 0; s < lay.spatial; ++s) {
                    const std::size_t i = lay.index(n, c, s);
                    g.dx[i] = scale * (upstream[i] - mean_dy - cache.x_hat[i] * mean_dy_xhat);
                }
        }
    }
    return g;
}

void record_trace(StatsTrace& trace, int step, const std::string& layer,
                  const BatchNormState& state) {
    const int c = state.channels();
    double mean = 0.0;
    double var = 0.0;
    for (int i = 0; i < c; ++i) {
        mean += state.running_mean[i];
        var += state.running_var[i];
    }
    trace.rows.push_back({step, layer, mean / c, var / c});
}

static std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trace_csv(const StatsTrace& trace) {
    std::string out = "step,layer,running_mean,running_var\n";
    for (const TraceRow& r : trace.rows) {
        out += std::to_string(r.step);
        out += ',';
        out += r.layer;
        out += ',';
        out += fmt_double(r.running_mean);
        out += ',';
        out += fmt_double(r.running_var);
        out += '\n';
    }
    return out;
}

void write_trace_csv(const StatsTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << trace_csv(trace);
}

}  // namespace oneshot
