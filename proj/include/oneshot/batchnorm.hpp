#pragma once

#include <string>
#include <vector>

#include "oneshot/tensor.hpp"

namespace oneshot {

/// How a batch-norm layer treats its statistics during a forward pass.
///   UPDATED_STATS: normalize with batch statistics, update running averages.
///   FIXED_STATS:   normalize with the stored running statistics in both the
///                  forward and backward pass; running averages never move.
///   INFERENCE:     normalize with running statistics; no gradients available.
enum class StatsMode { UPDATED_STATS, FIXED_STATS, INFERENCE };

std::string to_string(StatsMode mode);
StatsMode stats_mode_from_string(const std::string& s);

struct BatchNormState {
    Tensor running_mean;
    Tensor running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    int channels() const { return running_mean.dim(0); }
    bool operator==(const BatchNormState&) const = default;
};

/// Fresh state: mean 0, variance 1.
BatchNormState make_bn_state(int channels);

/// Everything the backward pass needs from the matching forward pass.
struct BnCache {
    StatsMode mode = StatsMode::INFERENCE;
    std::vector<int> in_shape;
    Tensor x_hat;
    Tensor inv_std;
    Tensor gamma;
};

/// Normalizes x (shape [N,C] or [N,C,H,W]) per channel and applies the
/// affine transform gamma * x_hat + beta. In UPDATED_STATS mode the batch
/// requires at least two samples and `state` is mutated:
///   running <- (1 - momentum) * running + momentum * batch_stat
/// with the biased batch variance. Other modes leave `state` untouched.
Tensor bn_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, StatsMode mode, BnCache* cache = nullptr);

struct BnGrads {
    Tensor dx;
    Tensor dgamma;
    Tensor dbeta;
};

/// Backward through the forward pass recorded in `cache`. The caller passes
/// the mode it believes was used; a mismatch is an error, as is any attempt
/// to differentiate an INFERENCE forward. FIXED_STATS treats the running
/// statistics as constants, so dx = upstream * gamma / sqrt(var + eps).
BnGrads bn_backward(const Tensor& upstream, const BnCache& cache, StatsMode mode);

/// One sampled point of a layer's running statistics, channel-averaged.
struct TraceRow {
    int step = 0;
    std::string layer;
    double running_mean = 0.0;
    double running_var = 0.0;
};

struct StatsTrace {
    std::vector<TraceRow> rows;
};

void record_trace(StatsTrace& trace, int step, const std::string& layer,
                  const BatchNormState& state);
std::string trace_csv(const StatsTrace& trace);
void write_trace_csv(const StatsTrace& trace, const std::string& path);

}  // namespace oneshot
