#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gcnn/pipeline.hpp"
#include "gcnn/rng.hpp"
#include "support/oracles.hpp"

using namespace gcnn;

TEST_CASE("variant channel counts") {
    CHECK(variant_channels(PipelineVariant::A) == 1);
    CHECK(variant_channels(PipelineVariant::B) == 8);
    CHECK(variant_channels(PipelineVariant::C) == 16);
    CHECK(variant_channels(PipelineVariant::D) == 16);
}

TEST_CASE("build_pipeline attaches the right bank") {
    const auto a = build_pipeline(PipelineVariant::A);
    CHECK(!a.bank.has_value());

    const auto b = build_pipeline(PipelineVariant::B);
    REQUIRE(b.bank.has_value());
    CHECK(b.bank->filters.size() == 4);

    const auto d = build_pipeline(PipelineVariant::D);
    REQUIRE(d.bank.has_value());
    CHECK(d.bank->filters.size() == 8);
    CHECK(d.bank->filters[0].params.sigma == doctest::Approx(3.128));
    CHECK(d.bank->filters[4].params.sigma == doctest::Approx(2.201));
}

TEST_CASE("apply_pipeline output shapes match the variant table") {
    Rng rng(5);
    GrayImage img(20, 14);
    for (double& v : img.data) v = rng.next_double();

    for (auto v : {PipelineVariant::A, PipelineVariant::B, PipelineVariant::C, PipelineVariant::D}) {
        const auto spec = build_pipeline(v);
        const Tensor out = apply_pipeline(spec, img);
        REQUIRE(out.rank() == 3);
        CHECK(out.dim(0) == static_cast<std::size_t>(variant_channels(v)));
        CHECK(out.dim(1) == 14);
        CHECK(out.dim(2) == 20);
    }
}

TEST_CASE("constant images map to all-zero tensors") {
    GrayImage img(24, 24);
    for (double& v : img.data) v = 0.42;

    for (auto v : {PipelineVariant::A, PipelineVariant::B, PipelineVariant::D}) {
        const auto spec = build_pipeline(v);
        const Tensor out = apply_pipeline(spec, img);
        for (double x : out.data) CHECK(std::abs(x) < 1e-6);
    }
}

TEST_CASE("empty image is rejected") {
    GrayImage img;
    CHECK_THROWS_AS(apply_pipeline(build_pipeline(PipelineVariant::A), img), EmptyImage);
}

TEST_CASE("pre-standardization tap is nonnegative for bank variants") {
    Rng rng(9);
    GrayImage img(16, 16);
    for (double& v : img.data) v = rng.next_double();

    for (auto v : {PipelineVariant::B, PipelineVariant::C, PipelineVariant::D}) {
        const Tensor raw = apply_pipeline_raw(build_pipeline(v), img);
        for (double x : raw.data) CHECK(x >= 0.0);
    }
}

TEST_CASE("vertical edge concentrates energy in the theta=0 channel pair") {
    GrayImage img(64, 64);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            img.at(x, y) = x < 32 ? 0.1 : 0.9;
        }
    }
    const auto spec = build_pipeline(PipelineVariant::B);
    const Tensor raw = apply_pipeline_raw(spec, img);

    // rank per-orientation energy (pos^2 + neg^2 summed per filter pair);
    // recompute with the brute-force oracle to keep this independent
    Tensor plane({64, 64});
    plane.data = img.data;
    double energies[4];
    for (int f = 0; f < 4; ++f) {
        const Tensor resp = oracle::conv2d_reflect(plane, spec.bank->filters[f].kernel);
        energies[f] = oracle::mean_sq(resp);
    }
    for (int f = 1; f < 4; ++f) CHECK(energies[0] > energies[f]);

    const std::size_t ch_plane = 64 * 64;
    double pair_energy[4];
    for (int f = 0; f < 4; ++f) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ch_plane; ++j) {
            const double pos = raw.data[(2 * f) * ch_plane + j];
            const double neg = raw.data[(2 * f + 1) * ch_plane + j];
            acc += pos * pos + neg * neg;
        }
        pair_energy[f] = acc;
    }
    for (int f = 1; f < 4; ++f) CHECK(pair_energy[0] > pair_energy[f]);
}

TEST_CASE("apply_pipeline is deterministic") {
    Rng rng(13);
    GrayImage img(18, 18);
    for (double& v : img.data) v = rng.next_double();
    const auto spec = build_pipeline(PipelineVariant::C);
    const Tensor first = apply_pipeline(spec, img);
    const Tensor second = apply_pipeline(spec, img);
    CHECK(first.data == second.data);
}
