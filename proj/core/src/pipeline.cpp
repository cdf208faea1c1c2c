#include "gcnn/pipeline.hpp"

#include <algorithm>

namespace gcnn {

int variant_channels(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::A: return 1;
        case PipelineVariant::B: return 8;
        case PipelineVariant::C: return 16;
        case PipelineVariant::D: return 16;
    }
    throw UnknownVariant("variant_channels: invalid variant");
}

PipelineSpec build_pipeline(PipelineVariant variant) {
    PipelineSpec spec;
    spec.variant = variant;
    if (variant != PipelineVariant::A) {
        spec.bank = build_bank(variant);
    }
    return spec;
}

namespace {

Tensor image_as_tensor(const GrayImage& img) {
    if (img.width < 1 || img.height < 1) throw EmptyImage("apply_pipeline: empty image");
    Tensor t({1, static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)});
    t.data = img.data;
    return t;
}

}  // namespace

Tensor apply_pipeline_raw(const PipelineSpec& spec, const GrayImage& img) {
    if (spec.variant == PipelineVariant::A) {
        return image_as_tensor(img);
    }
    const std::size_t h = static_cast<std::size_t>(img.height);
    const std::size_t w = static_cast<std::size_t>(img.width);
    Tensor plane({h, w});
    plane.data = img.data;

    const auto& filters = spec.bank->filters;
    const std::size_t n = filters.size();
    Tensor responses({n, h, w});
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        Tensor r = conv2d_same(plane, filters[static_cast<std::size_t>(i)].kernel);
        std::copy(r.data.begin(), r.data.end(),
                  responses.data.begin() + static_cast<std::size_t>(i) * h * w);
    }
    return rectify_split(responses);
}

Tensor apply_pipeline(const PipelineSpec& spec, const GrayImage& img) {
    return standardize(apply_pipeline_raw(spec, img));
}

}  // namespace gcnn
