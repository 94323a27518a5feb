#pragma once

#include "oneshot/augment.hpp"
#include "oneshot/model.hpp"
#include "oneshot/rng.hpp"
#include "oneshot/tensor.hpp"

namespace oneshot {

/// A fixed pool of original-domain samples kept around while adapting to a
/// new one.
struct ReplayBuffer {
    std::vector<Sample> items;
};

/// Draws `capacity` samples from data without replacement.
ReplayBuffer make_replay_buffer(const std::vector<Sample>& data, int capacity,
                                RngStream& rng);

/// A without-replacement batch from the buffer.
Batch sample_buffer_batch(const ReplayBuffer& buf, int count, RngStream& rng);

/// One adaptation step's batch. from_new marks, per row, whether the sample
/// came from the new domain rather than the buffer.
struct ComposedBatch {
    Batch batch;
    std::vector<char> from_new;
    int buffer_count = 0;
    int new_count = 0;
};

/// buffer_count samples drawn from the buffer plus copy_count augmented
/// duplicates of the new sample, shuffled together.
ComposedBatch compose_minibatch(const ReplayBuffer& buf, int buffer_count,
                                const Sample& new_sample, int copy_count,
                                const AugmentConfig& aug, RngStream& rng);

/// buffer_count samples from the buffer plus new_count distinct samples from
/// the new-domain pool, shuffled together. No augmentation.
ComposedBatch compose_mixed_batch(const ReplayBuffer& buf, int buffer_count,
                                  const ReplayBuffer& new_pool, int new_count,
                                  RngStream& rng);

/// Diagonal empirical Fisher information with the parameter snapshot it was
/// taken at.
struct FisherDiag {
    ParameterSet fisher;
    ParameterSet anchor;
};

/// Mean over the buffer of the squared per-sample loss gradient, evaluated
/// one sample at a time. The default mode keeps running statistics frozen,
/// which also makes single-sample forward passes valid.
FisherDiag ewc_fisher(Model& model, const ReplayBuffer& buf,
                      StatsMode mode = StatsMode::FIXED_STATS);

/// Extends the model's loss with (lambda / 2) * sum_i F_i (theta_i - anchor_i)^2.
/// The model's loss node is replaced by the penalized total.
void attach_ewc_penalty(Model& model, const FisherDiag& fd, double lambda);

struct FlatProjection {
    std::vector<double> grad;
    bool projected = false;
    bool degenerate = false;
    double dot = 0.0;
    double post_dot = 0.0;
};

/// Single-constraint gradient projection: when the proposed gradient g has
/// negative inner product with the reference gradient, replace it with
/// g - (<g,ref>/<ref,ref>) ref; otherwise pass g through. A zero reference
/// gradient is flagged degenerate and g passes through unchanged. post_dot
/// is the inner product of the returned gradient with the reference.
FlatProjection gem_project(const std::vector<double>& grad,
                           const std::vector<double>& reference);

struct GemProjection {
    ParameterSet grads;
    bool projected = false;
    bool degenerate = false;
    double dot = 0.0;
    double post_dot = 0.0;
};

GemProjection gem_project(const ParameterSet& grads, const ParameterSet& reference);

/// Loss gradient on a fresh buffer batch, used as the projection reference.
/// Runs in the model's current stats mode, with whatever side effects that
/// mode has.
ParameterSet gem_reference_gradient(Model& model, const ReplayBuffer& buf, int batch_size,
                                    RngStream& rng);

}  // namespace oneshot
