#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcnn/rng.hpp"
#include "gcnn/tensor.hpp"

namespace gcnn {

struct NoCachedForward : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LabelOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedChannels : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Mode { Train, Eval };

// A layer owns its parameters, gradients and the activations cached by the
// last train-mode forward. backward() consumes that cache and accumulates
// parameter gradients.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::string name() const = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual std::vector<Tensor*> running_state() { return {}; }

    void zero_grads() {
        for (Tensor* g : grads()) g->fill(0.0);
    }
};

class Conv2d : public Layer {
public:
    // Cross-correlation with zero padding. Weight layout {out, in, k, k}.
    Conv2d(std::size_t in_ch, std::size_t out_ch, int kernel, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "conv2d"; }
    std::vector<Tensor*> params() override { return {&weight, &bias}; }
    std::vector<Tensor*> grads() override { return {&grad_weight, &grad_bias}; }

    Tensor weight, bias, grad_weight, grad_bias;
    int kernel, stride, pad;

private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

class BatchNorm : public Layer {
public:
    explicit BatchNorm(std::size_t channels);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "batchnorm"; }
    std::vector<Tensor*> params() override { return {&gamma, &beta}; }
    std::vector<Tensor*> grads() override { return {&grad_gamma, &grad_beta}; }
    std::vector<Tensor*> running_state() override { return {&running_mean, &running_var}; }

    Tensor gamma, beta, grad_gamma, grad_beta;
    Tensor running_mean, running_var;

    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

private:
    Tensor cached_input_, cached_xhat_;
    std::vector<double> cached_mean_, cached_inv_std_;
    bool has_cache_ = false;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "relu"; }

private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2 : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "maxpool2"; }

private:
    std::vector<std::size_t> cached_argmax_;
    std::vector<std::size_t> cached_in_shape_;
    bool has_cache_ = false;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "gap"; }

private:
    std::vector<std::size_t> cached_in_shape_;
    bool has_cache_ = false;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "flatten"; }

private:
    std::vector<std::size_t> cached_in_shape_;
    bool has_cache_ = false;
};

class Linear : public Layer {
public:
    Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "linear"; }
    std::vector<Tensor*> params() override { return {&weight, &bias}; }
    std::vector<Tensor*> grads() override { return {&grad_weight, &grad_bias}; }

    Tensor weight, bias, grad_weight, grad_bias;  // weight {out, in}

private:
    Tensor cached_input_;
    bool has_cache_ = false;
};

// conv3x3-BN-ReLU-conv3x3-BN plus skip (1x1 conv + BN when the shape
// changes), followed by ReLU.
class ResidualBlock : public Layer {
public:
    ResidualBlock(std::size_t in_ch, std::size_t out_ch, int stride, Rng& rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string name() const override { return "residual"; }
    std::vector<Tensor*> params() override;
    std::vector<Tensor*> grads() override;
    std::vector<Tensor*> running_state() override;

    Conv2d conv1, conv2;
    BatchNorm bn1, bn2;
    ReLU relu_mid;
    std::unique_ptr<Conv2d> conv_skip;  // present iff in_ch != out_ch or stride != 1
    std::unique_ptr<BatchNorm> bn_skip;

private:
    Tensor cached_sum_;
    bool has_cache_ = false;
};

enum class Arch { MiniCNN, MiniResNet8 };

std::string arch_name(Arch a);
Arch parse_arch(const std::string& name);

struct ModelGraph {
    Arch arch = Arch::MiniCNN;
    int in_channels = 1;
    int n_classes = 0;
    int input_size = 0;
    std::vector<std::unique_ptr<Layer>> layers;
    std::vector<std::size_t> block_taps;  // layer indices whose output is a probe tap

    std::vector<Tensor*> parameters() const;
    std::vector<Tensor*> gradients() const;
    std::vector<Tensor*> running_stats() const;
    void zero_grads();
};

// MiniCNN: three conv/pool stages and a small classifier head, the
// few-layer regime. MiniResNet8: conv stem plus 8 residual blocks with
// channels {16,16,32,32,64,64,128,128} and stride 2 at blocks 3, 5, 7,
// global average pooling and a linear head; block_taps marks the 8 block
// outputs. Kaiming fan-in normal init, zero biases, seeded.
ModelGraph build_model(Arch arch, int in_channels, int n_classes, std::uint64_t seed,
                       int input_size);

// Forward through all layers; when `taps` is non-null the activations at
// block_taps are appended to it (in order).
Tensor model_forward(ModelGraph& g, const Tensor& x, Mode mode, std::vector<Tensor>* taps = nullptr);

// Backpropagates grad_logits through the graph, accumulating parameter
// gradients; returns the gradient at the input.
Tensor model_backward(ModelGraph& g, const Tensor& grad_logits);

struct LossGrad {
    double loss = 0.0;
    Tensor grad_logits;
};

// Mean cross-entropy of softmax(logits) with max-subtraction;
// grad = (softmax - onehot) / N.
LossGrad loss_softmax_ce(const Tensor& logits, std::span<const int> labels);

}  // namespace gcnn
