#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "gcnn/nn.hpp"
#include "gcnn/optim.hpp"
#include "gcnn/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using gradcheck::project;
using gradcheck::random_tensor;

using namespace gcnn;

namespace {

// zero-padding strided cross-correlation, brute force (independent of the
// layer's loop structure)
Tensor conv_zero_pad_oracle(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                            int pad) {
    const int n = static_cast<int>(x.dim(0)), ic = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), wd = static_cast<int>(x.dim(3));
    const int oc = static_cast<int>(w.dim(0)), k = static_cast<int>(w.dim(2));
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (wd + 2 * pad - k) / stride + 1;
    Tensor out({static_cast<std::size_t>(n), static_cast<std::size_t>(oc),
                static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
    for (int ni = 0; ni < n; ++ni)
        for (int o = 0; o < oc; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b.data[o];
                    for (int i = 0; i < ic; ++i)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += x.at4(ni, i, iy, ix) * w.at4(o, i, ky, kx);
                            }
                    out.at4(ni, o, oy, ox) = acc;
                }
    return out;
}

}  // namespace

TEST_CASE("relu forward/backward basics") {
    ReLU relu;
    Tensor x({1, 3});
    x.data = {-1.0, 0.0, 2.0};
    const Tensor y = relu.forward(x, Mode::Train);
    CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0});

    Tensor g({1, 3});
    g.data = {1.0, 1.0, 1.0};
    const Tensor dx = relu.backward(g);
    CHECK(dx.data == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("maxpool picks the window maximum") {
    MaxPool2 pool;
    Tensor x({1, 1, 2, 2});
    x.data = {1.0, 3.0, 2.0, 0.0};
    const Tensor y = pool.forward(x, Mode::Train);
    REQUIRE(y.numel() == 1);
    CHECK(y.data[0] == 3.0);

    Tensor g({1, 1, 1, 1});
    g.data = {5.0};
    const Tensor dx = pool.backward(g);
    CHECK(dx.data == std::vector<double>{0.0, 5.0, 0.0, 0.0});
}

TEST_CASE("conv2d forward matches the zero-pad oracle") {
    Rng rng(101);
    for (int stride : {1, 2}) {
        Conv2d conv(2, 3, 3, stride, 1, rng);
        Tensor x = random_tensor({2, 2, 5, 5}, rng);
        const Tensor got = conv.forward(x, Mode::Eval);
        const Tensor want = conv_zero_pad_oracle(x, conv.weight, conv.bias, stride, 1);
        REQUIRE(got.shape == want.shape);
        CHECK(oracle::max_abs_diff(got, want) < 1e-12);
    }

    // 4x4 ramp through a known 1-in/1-out kernel
    Rng rng2(5);
    Conv2d conv(1, 1, 3, 1, 1, rng2);
    Tensor ramp({1, 1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) ramp.data[i] = static_cast<double>(i);
    CHECK(oracle::max_abs_diff(conv.forward(ramp, Mode::Eval),
                               conv_zero_pad_oracle(ramp, conv.weight, conv.bias, 1, 1)) < 1e-12);
}

TEST_CASE("linear backward on the 1x1 scalar case") {
    Rng rng(7);
    Linear lin(1, 1, rng);
    const double w = lin.weight.data[0];
    Tensor x({1, 1});
    x.data = {1.7};
    (void)lin.forward(x, Mode::Train);
    Tensor g({1, 1});
    g.data = {2.0};
    lin.zero_grads();
    const Tensor dx = lin.backward(g);
    CHECK(lin.grad_weight.data[0] == doctest::Approx(1.7 * 2.0).epsilon(1e-12));
    CHECK(dx.data[0] == doctest::Approx(w * 2.0).epsilon(1e-12));
}

TEST_CASE("gradients match central differences for every layer kind") {
    CHECK(gradcheck::check_all_layer_kinds(20) < 1e-4);
}

TEST_CASE("softmax cross-entropy against analytic values") {
    Tensor uniform({1, 10});
    uniform.fill(0.3);
    const auto lg = loss_softmax_ce(uniform, std::vector<int>{4});
    CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

    Tensor confident({1, 3});
    confident.data = {1e9, 0.0, 0.0};
    const auto lg2 = loss_softmax_ce(confident, std::vector<int>{0});
    CHECK(lg2.loss < 1e-9);

    Tensor bad({1, 3});
    CHECK_THROWS_AS(loss_softmax_ce(bad, std::vector<int>{3}), LabelOutOfRange);
    CHECK_THROWS_AS(loss_softmax_ce(bad, std::vector<int>{-1}), LabelOutOfRange);
}

TEST_CASE("softmax cross-entropy gradient matches central differences") {
    Rng rng(303);
    Tensor logits = random_tensor({3, 4}, rng);
    const std::vector<int> labels = {2, 0, 3};

    const auto lg = loss_softmax_ce(logits, labels);
    auto loss = [&]() { return loss_softmax_ce(logits, labels).loss; };
    const Tensor fd = oracle::fd_gradient(logits, loss);
    CHECK(oracle::max_rel_err(lg.grad_logits, fd, 1e-6) < 1e-6);
}

TEST_CASE("batchnorm train output has zero mean and unit variance") {
    Rng rng(11);
    BatchNorm bn(4);
    Tensor x = random_tensor({3, 4, 5, 5}, rng);
    const Tensor y = bn.forward(x, Mode::Train);
    const std::size_t n = 3, c = 4, plane = 25;
    for (std::size_t ci = 0; ci < c; ++ci) {
        double mean = 0.0, var = 0.0;
        for (std::size_t ni = 0; ni < n; ++ni) {
            for (std::size_t j = 0; j < plane; ++j) mean += y.data[(ni * c + ci) * plane + j];
        }
        mean /= static_cast<double>(n * plane);
        for (std::size_t ni = 0; ni < n; ++ni) {
            for (std::size_t j = 0; j < plane; ++j) {
                const double d = y.data[(ni * c + ci) * plane + j] - mean;
                var += d * d;
            }
        }
        var /= static_cast<double>(n * plane);
        CHECK(std::abs(mean) < 1e-5);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("batchnorm eval is per-sample, independent of batch composition") {
    Rng rng(13);
    BatchNorm bn(2);
    // drive the running stats away from init
    for (int i = 0; i < 5; ++i) (void)bn.forward(random_tensor({4, 2, 3, 3}, rng), Mode::Train);

    Tensor one = random_tensor({1, 2, 3, 3}, rng);
    Tensor pair({2, 2, 3, 3});
    std::copy(one.data.begin(), one.data.end(), pair.data.begin());
    const Tensor rest = random_tensor({1, 2, 3, 3}, rng);
    std::copy(rest.data.begin(), rest.data.end(), pair.data.begin() + one.numel());

    const Tensor y1 = bn.forward(one, Mode::Eval);
    const Tensor y2 = bn.forward(pair, Mode::Eval);
    for (std::size_t i = 0; i < y1.numel(); ++i) CHECK(y1.data[i] == y2.data[i]);
}

TEST_CASE("residual block with zeroed second BN scale reduces to its skip path") {
    Rng rng(17);
    ResidualBlock block(3, 3, 1, rng);
    block.bn2.gamma.fill(0.0);

    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    for (double& v : x.data) v = std::abs(v);  // nonnegative input passes final ReLU unchanged
    const Tensor y = block.forward(x, Mode::Train);
    REQUIRE(y.shape == x.shape);
    CHECK(oracle::max_abs_diff(y, x) == 0.0);
}

TEST_CASE("build_model wiring") {
    auto resnet = build_model(Arch::MiniResNet8, 16, 10, 7, 32);
    CHECK(resnet.block_taps.size() == 8);

    auto cnn = build_model(Arch::MiniCNN, 1, 4, 7, 32);
    CHECK(cnn.block_taps.empty());

    CHECK_THROWS_AS(build_model(Arch::MiniCNN, 3, 4, 7, 32), UnsupportedChannels);

    // same seed -> bitwise identical init; different seed differs
    auto m1 = build_model(Arch::MiniResNet8, 8, 5, 42, 32);
    auto m2 = build_model(Arch::MiniResNet8, 8, 5, 42, 32);
    auto m3 = build_model(Arch::MiniResNet8, 8, 5, 43, 32);
    const auto p1 = m1.parameters(), p2 = m2.parameters(), p3 = m3.parameters();
    REQUIRE(p1.size() == p2.size());
    bool all_equal = true, any_diff_seed = false;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i]->data != p2[i]->data) all_equal = false;
        if (p1[i]->data != p3[i]->data) any_diff_seed = true;
    }
    CHECK(all_equal);
    CHECK(any_diff_seed);
}

TEST_CASE("model forward shapes and taps") {
    auto g = build_model(Arch::MiniResNet8, 1, 6, 3, 32);
    Rng rng(19);
    Tensor x = random_tensor({2, 1, 32, 32}, rng);
    std::vector<Tensor> taps;
    const Tensor logits = model_forward(g, x, Mode::Eval, &taps);
    CHECK(logits.shape == std::vector<std::size_t>{2, 6});
    REQUIRE(taps.size() == 8);
    const std::size_t want_ch[8] = {16, 16, 32, 32, 64, 64, 128, 128};
    const std::size_t want_hw[8] = {32, 32, 16, 16, 8, 8, 4, 4};
    for (int i = 0; i < 8; ++i) {
        CHECK(taps[i].dim(1) == want_ch[i]);
        CHECK(taps[i].dim(2) == want_hw[i]);
    }

    auto cnn = build_model(Arch::MiniCNN, 1, 6, 3, 32);
    const Tensor logits2 = model_forward(cnn, x, Mode::Eval);
    CHECK(logits2.shape == std::vector<std::size_t>{2, 6});
}

TEST_CASE("a flatten-only graph reproduces its input") {
    ModelGraph g;
    g.layers.push_back(std::make_unique<Flatten>());
    Rng rng(23);
    Tensor x = random_tensor({2, 3, 2, 2}, rng);
    const Tensor y = model_forward(g, x, Mode::Eval);
    CHECK(y.data == x.data);
}

TEST_CASE("end-to-end finite differences on a 2-layer toy model") {
    Rng rng(29);
    ModelGraph g;
    g.layers.push_back(std::make_unique<Conv2d>(1, 2, 3, 1, 1, rng));
    g.layers.push_back(std::make_unique<Flatten>());
    g.layers.push_back(std::make_unique<Linear>(2 * 4 * 4, 3, rng));

    Tensor x = random_tensor({2, 1, 4, 4}, rng);
    const std::vector<int> labels = {1, 2};

    auto loss = [&]() {
        const Tensor logits = model_forward(g, x, Mode::Train);
        return loss_softmax_ce(logits, labels).loss;
    };

    g.zero_grads();
    const Tensor logits = model_forward(g, x, Mode::Train);
    const auto lg = loss_softmax_ce(logits, labels);
    const Tensor dx = model_backward(g, lg.grad_logits);

    CHECK(oracle::max_rel_err(dx, oracle::fd_gradient(x, loss), 1e-4) < 1e-4);
    const auto params = g.parameters();
    const auto grads = g.gradients();
    std::vector<Tensor> saved;
    for (Tensor* gr : grads) saved.push_back(*gr);
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(oracle::max_rel_err(saved[i], oracle::fd_gradient(*params[i], loss), 1e-4) < 1e-4);
    }
}

TEST_CASE("one small SGD step decreases the loss") {
    Rng rng(31);
    ModelGraph g;
    g.layers.push_back(std::make_unique<Conv2d>(1, 4, 3, 1, 1, rng));
    g.layers.push_back(std::make_unique<ReLU>());
    g.layers.push_back(std::make_unique<Flatten>());
    g.layers.push_back(std::make_unique<Linear>(4 * 6 * 6, 3, rng));

    Tensor x = random_tensor({4, 1, 6, 6}, rng);
    const std::vector<int> labels = {0, 1, 2, 1};

    OptimConfig cfg;
    cfg.weight_decay = 0.0;
    cfg.momentum = 0.0;
    const auto params = g.parameters();
    const auto grads = g.gradients();
    OptimState state = OptimState::for_params(params);

    g.zero_grads();
    const auto before = loss_softmax_ce(model_forward(g, x, Mode::Train), labels);
    model_backward(g, before.grad_logits);
    sgd_nesterov_step(params, grads, state, 1e-4, cfg);
    const auto after = loss_softmax_ce(model_forward(g, x, Mode::Train), labels);
    CHECK(after.loss < before.loss);
}

TEST_CASE("backward without forward reports the missing cache") {
    Rng rng(37);
    Conv2d conv(1, 1, 3, 1, 1, rng);
    Tensor g({1, 1, 4, 4});
    CHECK_THROWS_AS(conv.backward(g), NoCachedForward);
}

TEST_CASE("shape mismatches are rejected") {
    Rng rng(43);
    Conv2d conv(2, 4, 3, 1, 1, rng);
    Tensor wrong_channels({1, 3, 8, 8});
    CHECK_THROWS_AS(conv.forward(wrong_channels, Mode::Eval), ShapeMismatch);

    Linear lin(6, 2, rng);
    Tensor wrong_features({2, 5});
    CHECK_THROWS_AS(lin.forward(wrong_features, Mode::Eval), ShapeMismatch);

    BatchNorm bn(4);
    Tensor wrong_bn({1, 2, 4, 4});
    CHECK_THROWS_AS(bn.forward(wrong_bn, Mode::Train), ShapeMismatch);
}

TEST_CASE("non-finite activations are trapped") {
    Rng rng(41);
    auto g = build_model(Arch::MiniCNN, 1, 3, 1, 32);
    Tensor x({1, 1, 32, 32});
    x.fill(std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(model_forward(g, x, Mode::Eval), NonFiniteValue);
}
