#pragma once

#include <stdexcept>
#include <string_view>
#include <vector>

#include "gcnn/tensor.hpp"

namespace gcnn {

struct NonPositiveSigma : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveLambda : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyImage : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownVariant : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The four processing flows: A is standardize-only, B-D prepend a Gabor
// filter bank (B: single scale/phase, C: two phases, D: two scales with
// orthogonal phases).
enum class PipelineVariant { A, B, C, D };

PipelineVariant parse_variant(std::string_view tag);  // "a".."d"
char variant_tag(PipelineVariant v);

struct GaborParams {
    double amplitude = 1.0;    // A; downstream standardization removes uniform gain
    double sigma = 0.0;        // Gaussian envelope width, px
    double wavelength = 0.0;   // carrier wavelength, px
    double phase = 0.0;        // rad
    double orientation = 0.0;  // rad, in [0, pi)
};

// Square odd-sized kernel centered at (0,0).
struct Kernel2D {
    int size = 0;
    std::vector<double> weights;

    int radius() const { return size / 2; }
    double at(int x, int y) const {
        return weights[static_cast<std::size_t>(y + radius()) * size + (x + radius())];
    }
    double& at(int x, int y) {
        return weights[static_cast<std::size_t>(y + radius()) * size + (x + radius())];
    }
};

struct BankFilter {
    GaborParams params;
    Kernel2D kernel;
};

// Filters ordered by parameter-set row, then orientation ascending
// (0, pi/4, pi/2, 3pi/4). The ordering is part of the public contract:
// trained models depend on it.
struct GaborBank {
    std::vector<BankFilter> filters;
};

// Gabor kernel sampled on the integer grid with radius ceil(3*sigma):
//   G(x,y) = A * exp(-(x^2+y^2)/(2 sigma^2)) * cos(2 pi/lambda * (x cos theta + y sin theta) - phi)
// gabor_kernel subtracts the kernel mean afterwards so constant inputs get
// zero response; gabor_kernel_raw skips that correction.
Kernel2D gabor_kernel_raw(const GaborParams& p);
Kernel2D gabor_kernel(const GaborParams& p);

// The two parameter-set rows used by the banks.
inline constexpr double kSigmaFine = 2.201;
inline constexpr double kLambdaFine = 5.66;
inline constexpr double kSigmaCoarse = 3.128;
inline constexpr double kLambdaCoarse = 8.0;

// Orientations shared by every bank row.
std::vector<double> bank_orientations();

GaborBank build_bank(PipelineVariant method);  // B, C or D; A has no bank

// Cross-correlation (no kernel flip) with reflect border padding
// (mirror without repeating the edge sample). Output size equals input.
Tensor conv2d_same(const Tensor& img_hw, const Kernel2D& k);

// c-channel input -> 2c channels: 2i = positive part, 2i+1 = negative part.
Tensor rectify_split(const Tensor& chw);

// Per-channel (x - mean) / sqrt(var + 1e-6) with population variance,
// computed per image; no dataset-level statistics are carried.
Tensor standardize(const Tensor& chw);

inline constexpr double kStandardizeEps = 1e-6;

}  // namespace gcnn
