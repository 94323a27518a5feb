#include "oneshot/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace oneshot {

GradCheckResult finite_diff_check(Graph& graph, ParameterSet& params,
                                  const std::vector<BatchNormState>& bn_states,
                                  StatsMode mode, const Tensor& batch,
                                  const std::vector<int>& labels, double eps, double tol) {
    auto loss_at = [&]() {
        std::vector<BatchNormState> states = bn_states;
        ForwardContext ctx{&params, &states, mode};
        return graph.forward(ctx, batch, labels);
    };

    {
        std::vector<BatchNormState> states = bn_states;
        ForwardContext ctx{&params, &states, mode};
        graph.forward(ctx, batch, labels);
    }
    ParameterSet analytic = graph.backward();

    auto err_of = [](double a, double n) {
        return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    };

    GradCheckResult res;
    res.ok = true;
    for (auto& [name, t] : params) {
        const Tensor& g = analytic.at(name);
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double save = t[i];
            double err = 0.0;
            for (double step : {eps, eps / 8.0}) {
                t[i] = save + step;
                const double lp = loss_at();
                t[i] = save - step;
                const double lm = loss_at();
                t[i] = save;
                err = err_of(g[i], (lp - lm) / (2.0 * step));
                if (err <= tol) break;
            }
            if (err > res.max_err) {
                res.max_err = err;
                res.worst_param = name;
                res.worst_index = i;
            }
            if (err > tol) res.ok = false;
        }
    }
    return res;
}

}  // namespace oneshot
