#pragma once

#include <optional>

#include "gcnn/gabor.hpp"
#include "gcnn/image.hpp"

namespace gcnn {

// Channels a CNN sees for each variant: a -> 1, b -> 8, c/d -> 16.
int variant_channels(PipelineVariant v);

// Immutable after construction; shareable across threads.
struct PipelineSpec {
    PipelineVariant variant = PipelineVariant::A;
    std::optional<GaborBank> bank;  // present iff variant != A
};

PipelineSpec build_pipeline(PipelineVariant variant);

// Full preprocessing: filtering (b-d), rectification (b-d), standardization.
// Channel order is bank order with positive before negative parts.
Tensor apply_pipeline(const PipelineSpec& spec, const GrayImage& img);

// The stack just before standardization; for variants b-d every channel is
// nonnegative here. Exposed as the internal tap for tests and debug dumps.
Tensor apply_pipeline_raw(const PipelineSpec& spec, const GrayImage& img);

}  // namespace gcnn
