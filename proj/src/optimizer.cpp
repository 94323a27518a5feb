#include "oneshot/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace oneshot {

namespace {

const Tensor& matched_grad(const ParameterSet& grads, const std::string& name,
                           const Tensor& param) {
    const Tensor& g = grads.at(name);
    if (!g.same_shape(param))
        throw std::invalid_argument("gradient for " + name + " has shape " +
                                    shape_string(g.shape()) + ", parameter is " +
                                    shape_string(param.shape()));
    return g;
}

void check_update_finite(const std::string& name, const Tensor& param, const Tensor& grad) {
    for (std::size_t i = 0; i < param.numel(); ++i) {
        if (!std::isfinite(grad[i]))
            throw std::runtime_error("non-finite gradient for " + name + " at index " +
                                     std::to_string(i));
        if (!std::isfinite(param[i]))
            throw std::runtime_error("non-finite value in " + name + " at index " +
                                     std::to_string(i) + " after update");
    }
}

}  // namespace

void sgd_step(ParameterSet& params, const ParameterSet& grads, double lr) {
    if (grads.size() != params.size())
        throw std::invalid_argument("gradient set has " + std::to_string(grads.size()) +
                                    " entries, parameters have " +
                                    std::to_string(params.size()));
    if (!std::isfinite(lr)) throw std::invalid_argument("learning rate is not finite");
    for (auto& [name, p] : params) {
        const Tensor& g = matched_grad(grads, name, p);
        for (std::size_t i = 0; i < p.numel(); ++i) p[i] -= lr * g[i];
        check_update_finite(name, p, g);
    }
}

double cosine_lr(int step, int total_steps, double lr_max, double lr_min) {
    if (total_steps < 1)
        throw std::invalid_argument("schedule length must be positive, got " +
                                    std::to_string(total_steps));
    if (step < 0)
        throw std::invalid_argument("schedule step must be non-negative, got " +
                                    std::to_string(step));
    if (step >= total_steps) return lr_min;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * frac));
}

AdamState make_adam_state(const ParameterSet& params) {
    AdamState st;
    st.m = params.zeros_like();
    st.v = params.zeros_like();
    return st;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double lr) {
    if (grads.size() != params.size())
        throw std::invalid_argument("gradient set has " + std::to_string(grads.size()) +
                                    " entries, parameters have " +
                                    std::to_string(params.size()));
    if (!std::isfinite(lr)) throw std::invalid_argument("learning rate is not finite");
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw std::invalid_argument("optimizer state does not match parameter set");

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        const Tensor& g = matched_grad(grads, name, p);
        Tensor& m = state.m.at(name);
        Tensor& v = state.v.at(name);
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
        check_update_finite(name, p, g);
    }
}

}  // namespace oneshot
