#include <benchmark/benchmark.h>

#include "gcnn/dataset.hpp"
#include "gcnn/nn.hpp"
#include "gcnn/pipeline.hpp"
#include "gcnn/rng.hpp"

using namespace gcnn;

static void BM_Conv2dSame15x15(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor img({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
    for (double& v : img.data) v = rng.next_double();
    GaborParams p;
    p.sigma = kSigmaFine;
    p.wavelength = kLambdaFine;
    const Kernel2D k = gabor_kernel(p);
    for (auto _ : state) {
        Tensor out = conv2d_same(img, k);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Conv2dSame15x15)->Arg(32)->Arg(64)->Arg(128);

static void BM_ApplyPipeline(benchmark::State& state) {
    const auto variant = static_cast<PipelineVariant>(state.range(0));
    const PipelineSpec spec = build_pipeline(variant);
    Rng rng(2);
    GrayImage img(64, 64);
    for (double& v : img.data) v = rng.next_double();
    for (auto _ : state) {
        Tensor out = apply_pipeline(spec, img);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_ApplyPipeline)
    ->Arg(static_cast<int>(PipelineVariant::A))
    ->Arg(static_cast<int>(PipelineVariant::B))
    ->Arg(static_cast<int>(PipelineVariant::D));

static void BM_ConvLayerForward(benchmark::State& state) {
    Rng rng(3);
    Conv2d conv(16, 32, 3, 1, 1, rng);
    Tensor x({8, 16, 32, 32});
    for (double& v : x.data) v = rng.next_normal();
    for (auto _ : state) {
        Tensor out = conv.forward(x, Mode::Eval);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_ConvLayerForward);

static void BM_ConvLayerTrainStep(benchmark::State& state) {
    Rng rng(4);
    Conv2d conv(16, 16, 3, 1, 1, rng);
    Tensor x({4, 16, 32, 32});
    for (double& v : x.data) v = rng.next_normal();
    Tensor g({4, 16, 32, 32});
    for (double& v : g.data) v = rng.next_normal();
    for (auto _ : state) {
        Tensor out = conv.forward(x, Mode::Train);
        conv.zero_grads();
        Tensor dx = conv.backward(g);
        benchmark::DoNotOptimize(dx.data.data());
    }
}
BENCHMARK(BM_ConvLayerTrainStep);

static void BM_RenderView(benchmark::State& state) {
    ViewCondition cond;
    cond.object_id = 3;
    cond.distance = 47.0;
    cond.height = 22.0;
    cond.angle = 123.4;
    for (auto _ : state) {
        GrayImage img = render_view(cond, static_cast<int>(state.range(0)), 7);
        benchmark::DoNotOptimize(img.data.data());
    }
}
BENCHMARK(BM_RenderView)->Arg(32)->Arg(96);

static void BM_MiniResNet8Forward(benchmark::State& state) {
    auto model = build_model(Arch::MiniResNet8, 1, 10, 5, 32);
    Rng rng(6);
    Tensor x({4, 1, 32, 32});
    for (double& v : x.data) v = rng.next_double();
    for (auto _ : state) {
        Tensor out = model_forward(model, x, Mode::Eval);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_MiniResNet8Forward);

BENCHMARK_MAIN();
