#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gcnn/optim.hpp"

using namespace gcnn;

TEST_CASE("lr schedule endpoints and boundary continuity") {
    OptimConfig cfg;  // base_lr 1e-2, warmup 5, total 50

    CHECK(lr_at(0, cfg) == doctest::Approx(1e-2 / 5.0).epsilon(1e-12));
    CHECK(lr_at(4, cfg) == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK(lr_at(5, cfg) == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK(lr_at(49, cfg) ==
          doctest::Approx(0.5e-2 * (1.0 + std::cos(std::numbers::pi * 44.0 / 45.0)))
              .epsilon(1e-12));
    CHECK(lr_at(49, cfg) == doctest::Approx(1.22e-5).epsilon(2e-3));
}

TEST_CASE("lr schedule matches the closed form at every epoch") {
    OptimConfig cfg;
    for (int e = 0; e < cfg.total_epochs; ++e) {
        const double want =
            e < cfg.warmup_epochs
                ? cfg.base_lr * (e + 1) / cfg.warmup_epochs
                : 0.5 * cfg.base_lr *
                      (1.0 + std::cos(std::numbers::pi * (e - cfg.warmup_epochs) /
                                      (cfg.total_epochs - cfg.warmup_epochs)));
        CHECK(std::abs(lr_at(e, cfg) - want) < 1e-12);
    }
}

TEST_CASE("lr is monotone non-increasing after warmup (no restart)") {
    OptimConfig cfg;
    double prev = lr_at(cfg.warmup_epochs, cfg);
    for (int e = cfg.warmup_epochs + 1; e < cfg.total_epochs; ++e) {
        const double cur = lr_at(e, cfg);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("lr rejects out-of-range epochs") {
    OptimConfig cfg;
    CHECK_THROWS_AS(lr_at(-1, cfg), EpochOutOfRange);
    CHECK_THROWS_AS(lr_at(50, cfg), EpochOutOfRange);
}

namespace {

struct OneParam {
    Tensor param{std::vector<std::size_t>{1}};
    Tensor grad{std::vector<std::size_t>{1}};
    OptimState state;
    std::vector<Tensor*> params{&param};
    std::vector<Tensor*> grads{&grad};

    OneParam() { state = OptimState::for_params(params); }

    void step(double lr, const OptimConfig& cfg) {
        sgd_nesterov_step(params, grads, state, lr, cfg);
    }
};

}  // namespace

TEST_CASE("plain SGD when momentum and weight decay are zero") {
    OptimConfig cfg;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.0;
    OneParam p;
    p.param.data[0] = 1.0;
    p.grad.data[0] = 0.25;
    p.step(0.1, cfg);
    CHECK(p.param.data[0] == doctest::Approx(1.0 - 0.1 * 0.25).epsilon(1e-15));
}

TEST_CASE("two-step Nesterov trace reproduces the hand computation") {
    OptimConfig cfg;
    cfg.momentum = 0.9;
    cfg.weight_decay = 0.0;
    OneParam p;
    p.grad.data[0] = 1.0;

    p.step(0.1, cfg);
    CHECK(std::abs(p.param.data[0] - (-0.19)) < 1e-12);
    CHECK(std::abs(p.state.velocity[0].data[0] - 1.0) < 1e-12);

    p.step(0.1, cfg);
    CHECK(std::abs(p.param.data[0] - (-0.461)) < 1e-12);
    CHECK(std::abs(p.state.velocity[0].data[0] - 1.9) < 1e-12);
}

TEST_CASE("pure weight decay shrinks the parameter geometrically") {
    OptimConfig cfg;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.01;
    OneParam p;
    p.param.data[0] = 2.0;
    p.grad.data[0] = 0.0;
    const double lr = 0.5;
    p.step(lr, cfg);
    CHECK(p.param.data[0] == doctest::Approx(2.0 * (1.0 - lr * 0.01)).epsilon(1e-14));
    p.step(lr, cfg);
    CHECK(p.param.data[0] ==
          doctest::Approx(2.0 * (1.0 - lr * 0.01) * (1.0 - lr * 0.01)).epsilon(1e-14));
}

TEST_CASE("zero gradients with zero weight decay leave velocity at zero") {
    OptimConfig cfg;
    cfg.weight_decay = 0.0;
    OneParam p;
    p.param.data[0] = 3.0;
    for (int i = 0; i < 10; ++i) p.step(0.1, cfg);
    CHECK(p.state.velocity[0].data[0] == 0.0);
    CHECK(p.param.data[0] == 3.0);
}

TEST_CASE("non-finite gradients are rejected") {
    OptimConfig cfg;
    OneParam p;
    p.grad.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(p.step(0.1, cfg), NonFiniteGradient);
}

TEST_CASE("shape mismatches are rejected") {
    OptimConfig cfg;
    Tensor param({2});
    Tensor grad({3});
    std::vector<Tensor*> params{&param};
    std::vector<Tensor*> grads{&grad};
    OptimState st = OptimState::for_params(params);
    CHECK_THROWS_AS(sgd_nesterov_step(params, grads, st, 0.1, cfg), ShapeMismatch);
}
