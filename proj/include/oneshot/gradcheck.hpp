#pragma once

#include <string>
#include <vector>

#include "oneshot/autodiff.hpp"

namespace oneshot {

struct GradCheckResult {
    bool ok = false;
    double max_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

/// Compares analytic gradients against central finite differences for every
/// parameter coordinate. The error measure is |a - n| / max(|a|, |n|, 1e-8),
/// absolute for vanishing gradients and relative otherwise. Coordinates
/// that fail are retried with a smaller step, which filters out spurious
/// failures from differentiating across a ReLU or pooling kink. Batch-norm
/// states are copied per evaluation, so the caller's states never move.
GradCheckResult finite_diff_check(Graph& graph, ParameterSet& params,
                                  const std::vector<BatchNormState>& bn_states,
                                  StatsMode mode, const Tensor& batch,
                                  const std::vector<int>& labels, double eps = 1e-5,
                                  double tol = 1e-4);

}  // namespace oneshot
