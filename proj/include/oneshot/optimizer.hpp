#pragma once

#include "oneshot/tensor.hpp"

namespace oneshot {

/// Plain gradient descent: theta <- theta - lr * grad. Gradients must cover
/// exactly the same names and shapes as the parameters. Non-finite inputs or
/// results raise an error naming the offending parameter.
void sgd_step(ParameterSet& params, const ParameterSet& grads, double lr);

/// Cosine schedule from lr_max at step 0 down to lr_min at step
/// total_steps; steps past the end stay at lr_min.
double cosine_lr(int step, int total_steps, double lr_max, double lr_min);

struct AdamState {
    ParameterSet m;
    ParameterSet v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const ParameterSet& params);

/// Bias-corrected Adam update: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr);

}  // namespace oneshot
