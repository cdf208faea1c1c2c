#include "gcnn/optim.hpp"

#include <cmath>
#include <numbers>

namespace gcnn {

OptimState OptimState::for_params(std::span<Tensor* const> params) {
    OptimState st;
    st.velocity.reserve(params.size());
    for (const Tensor* p : params) st.velocity.emplace_back(p->shape);
    return st;
}

double lr_at(int epoch, const OptimConfig& cfg) {
    if (epoch < 0 || epoch >= cfg.total_epochs) {
        throw EpochOutOfRange("lr_at: epoch " + std::to_string(epoch) + " outside [0," +
                              std::to_string(cfg.total_epochs) + ")");
    }
    if (epoch < cfg.warmup_epochs) {
        return cfg.base_lr * static_cast<double>(epoch + 1) / cfg.warmup_epochs;
    }
    const double t = static_cast<double>(epoch - cfg.warmup_epochs) /
                     static_cast<double>(cfg.total_epochs - cfg.warmup_epochs);
    return 0.5 * cfg.base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_nesterov_step(std::span<Tensor* const> params, std::span<Tensor* const> grads,
                       OptimState& state, double lr, const OptimConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.velocity.size()) {
        throw ShapeMismatch("sgd_nesterov_step: parameter/gradient/velocity count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& v = state.velocity[i];
        require_same_shape(p, g, "sgd_nesterov_step");
        require_same_shape(p, v, "sgd_nesterov_step");
        for (std::size_t j = 0; j < p.numel(); ++j) {
            if (!std::isfinite(g[j])) {
                throw NonFiniteGradient("sgd_nesterov_step: gradient contains NaN or Inf");
            }
            const double eff = g[j] + cfg.weight_decay * p[j];
            v[j] = cfg.momentum * v[j] + eff;
            p[j] -= lr * (eff + cfg.momentum * v[j]);
        }
    }
}

}  // namespace gcnn
