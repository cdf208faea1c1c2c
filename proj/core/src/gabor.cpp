#include "gcnn/gabor.hpp"

#include <cmath>
#include <numbers>

namespace gcnn {

PipelineVariant parse_variant(std::string_view tag) {
    if (tag == "a") return PipelineVariant::A;
    if (tag == "b") return PipelineVariant::B;
    if (tag == "c") return PipelineVariant::C;
    if (tag == "d") return PipelineVariant::D;
    throw UnknownVariant("parse_variant: '" + std::string(tag) + "' is not one of a,b,c,d");
}

char variant_tag(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::A: return 'a';
        case PipelineVariant::B: return 'b';
        case PipelineVariant::C: return 'c';
        case PipelineVariant::D: return 'd';
    }
    throw UnknownVariant("variant_tag: invalid variant");
}

std::vector<double> bank_orientations() {
    constexpr double pi = std::numbers::pi;
    return {0.0, pi / 4.0, pi / 2.0, 3.0 * pi / 4.0};
}

Kernel2D gabor_kernel_raw(const GaborParams& p) {
    if (!(p.sigma > 0.0)) throw NonPositiveSigma("gabor_kernel: sigma must be > 0");
    if (!(p.wavelength > 0.0)) throw NonPositiveLambda("gabor_kernel: lambda must be > 0");

    const int r = static_cast<int>(std::ceil(3.0 * p.sigma));
    Kernel2D k;
    k.size = 2 * r + 1;
    k.weights.assign(static_cast<std::size_t>(k.size) * k.size, 0.0);

    const double inv_two_sigma_sq = 1.0 / (2.0 * p.sigma * p.sigma);
    const double freq = 2.0 * std::numbers::pi / p.wavelength;
    const double ct = std::cos(p.orientation);
    const double st = std::sin(p.orientation);
    for (int y = -r; y <= r; ++y) {
        for (int x = -r; x <= r; ++x) {
            const double envelope =
                std::exp(-(static_cast<double>(x) * x + static_cast<double>(y) * y) *
                         inv_two_sigma_sq);
            const double carrier = std::cos(freq * (x * ct + y * st) - p.phase);
            k.at(x, y) = p.amplitude * envelope * carrier;
        }
    }
    return k;
}

Kernel2D gabor_kernel(const GaborParams& p) {
    Kernel2D k = gabor_kernel_raw(p);
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    const double mean = sum / static_cast<double>(k.weights.size());
    for (double& w : k.weights) w -= mean;
    return k;
}

namespace {

GaborParams row_params(double sigma, double lambda, double phase, double theta) {
    GaborParams p;
    p.amplitude = 1.0;
    p.sigma = sigma;
    p.wavelength = lambda;
    p.phase = phase;
    p.orientation = theta;
    return p;
}

void append_row(GaborBank& bank, double sigma, double lambda, double phase) {
    for (double theta : bank_orientations()) {
        GaborParams p = row_params(sigma, lambda, phase, theta);
        bank.filters.push_back({p, gabor_kernel(p)});
    }
}

}  // namespace

GaborBank build_bank(PipelineVariant method) {
    GaborBank bank;
    switch (method) {
        case PipelineVariant::B:
            append_row(bank, kSigmaFine, kLambdaFine, 0.0);
            return bank;
        case PipelineVariant::C:
            append_row(bank, kSigmaFine, kLambdaFine, 0.0);
            append_row(bank, kSigmaFine, kLambdaFine, std::numbers::pi / 2.0);
            return bank;
        case PipelineVariant::D:
            append_row(bank, kSigmaCoarse, kLambdaCoarse, 0.0);
            append_row(bank, kSigmaFine, kLambdaFine, std::numbers::pi / 2.0);
            return bank;
        case PipelineVariant::A:
            break;
    }
    throw UnknownVariant("build_bank: variant has no filter bank");
}

namespace {

// Mirror-without-repeat index: -1 -> 1, n -> n-2. Iterative so it stays
// correct when the kernel radius exceeds the image size.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

Tensor conv2d_same(const Tensor& img_hw, const Kernel2D& k) {
    if (img_hw.rank() != 2) throw ShapeMismatch("conv2d_same: expected H x W tensor");
    const int h = static_cast<int>(img_hw.dim(0));
    const int w = static_cast<int>(img_hw.dim(1));
    if (h < 1 || w < 1) throw EmptyImage("conv2d_same: empty image");

    const int r = k.radius();
    const int ph = h + 2 * r;
    const int pw = w + 2 * r;

    // materialize the reflect-padded image once, then plain dot products
    std::vector<double> padded(static_cast<std::size_t>(ph) * pw);
    for (int y = 0; y < ph; ++y) {
        const int sy = reflect_index(y - r, h);
        for (int x = 0; x < pw; ++x) {
            const int sx = reflect_index(x - r, w);
            padded[static_cast<std::size_t>(y) * pw + x] = img_hw.at2(sy, sx);
        }
    }

    Tensor out({static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = 0; ky < k.size; ++ky) {
                const double* prow = &padded[static_cast<std::size_t>(y + ky) * pw + x];
                const double* krow = &k.weights[static_cast<std::size_t>(ky) * k.size];
                for (int kx = 0; kx < k.size; ++kx) {
                    acc += prow[kx] * krow[kx];
                }
            }
            out.at2(y, x) = acc;
        }
    }
    return out;
}

Tensor rectify_split(const Tensor& chw) {
    if (chw.rank() != 3) throw ShapeMismatch("rectify_split: expected C x H x W tensor");
    const std::size_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    Tensor out({2 * c, h, w});
    const std::size_t plane = h * w;
    for (std::size_t i = 0; i < c; ++i) {
        const double* src = chw.data.data() + i * plane;
        double* pos = out.data.data() + (2 * i) * plane;
        double* neg = out.data.data() + (2 * i + 1) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
            pos[j] = src[j] > 0.0 ? src[j] : 0.0;
            neg[j] = src[j] < 0.0 ? -src[j] : 0.0;
        }
    }
    return out;
}

Tensor standardize(const Tensor& chw) {
    if (chw.rank() != 3) throw ShapeMismatch("standardize: expected C x H x W tensor");
    const std::size_t c = chw.dim(0), plane = chw.dim(1) * chw.dim(2);
    Tensor out = chw;
    for (std::size_t i = 0; i < c; ++i) {
        double* p = out.data.data() + i * plane;
        double mean = 0.0;
        for (std::size_t j = 0; j < plane; ++j) mean += p[j];
        mean /= static_cast<double>(plane);
        double var = 0.0;
        for (std::size_t j = 0; j < plane; ++j) {
            const double d = p[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(plane);
        const double inv = 1.0 / std::sqrt(var + kStandardizeEps);
        for (std::size_t j = 0; j < plane; ++j) p[j] = (p[j] - mean) * inv;
    }
    return out;
}

}  // namespace gcnn
