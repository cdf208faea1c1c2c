#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcnn {

struct MalformedHeader : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TruncatedData : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedMaxval : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroDimension : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfBounds : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 8-bit grayscale image held as reals in [0,1]; all downstream math is
// real-valued, the 8-bit form exists only on disk.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major, width*height

    GrayImage() = default;
    GrayImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Binary PGM ("P5", maxval 255) is the canonical on-disk image format.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// Bilinear resampling with half-pixel-center alignment: the source
// coordinate of output pixel d is (d + 0.5) * in/out - 0.5. The convention
// is fixed because it affects augmentation determinism.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h);
GrayImage hflip(const GrayImage& img);

}  // namespace gcnn
