#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "gcnn/tensor.hpp"

namespace gcnn {

struct EpochOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteGradient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptimConfig {
    double base_lr = 1e-2;
    double weight_decay = 1e-2;
    double momentum = 0.9;
    int warmup_epochs = 5;
    int total_epochs = 50;
};

// One velocity buffer per parameter tensor, zero initialized.
struct OptimState {
    std::vector<Tensor> velocity;

    static OptimState for_params(std::span<Tensor* const> params);
};

// Linear warmup to base_lr over warmup_epochs, then cosine decay to ~0 at
// total_epochs without restart. Continuous at the boundary: epochs
// warmup_epochs-1 and warmup_epochs both evaluate to base_lr.
double lr_at(int epoch, const OptimConfig& cfg);

// Nesterov momentum in the effective-gradient form:
//   g <- grad + weight_decay * param
//   v <- momentum * v + g
//   param <- param - lr * (g + momentum * v)
// Weight decay applies to every parameter, BN scale/shift included.
void sgd_nesterov_step(std::span<Tensor* const> params, std::span<Tensor* const> grads,
                       OptimState& state, double lr, const OptimConfig& cfg);

}  // namespace gcnn
