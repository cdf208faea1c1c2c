#include "gcnn/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace gcnn {

namespace {

bool is_pgm_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Reads one decimal header field, skipping whitespace and '#' comments.
int read_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (is_pgm_space(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
        throw MalformedHeader("decode_pgm: expected integer header field");
    }
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1'000'000'000L) throw MalformedHeader("decode_pgm: header value too large");
        ++pos;
    }
    return static_cast<int>(v);
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw MalformedHeader("decode_pgm: not a binary P5 PGM");
    }
    std::size_t pos = 2;
    const int width = read_header_int(bytes, pos);
    const int height = read_header_int(bytes, pos);
    const int maxval = read_header_int(bytes, pos);
    if (width <= 0 || height <= 0) throw MalformedHeader("decode_pgm: non-positive dimensions");
    if (maxval != 255) {
        throw UnsupportedMaxval("decode_pgm: maxval " + std::to_string(maxval) +
                                " unsupported, only 255");
    }
    if (pos >= bytes.size() || !is_pgm_space(bytes[pos])) {
        throw MalformedHeader("decode_pgm: missing whitespace after maxval");
    }
    ++pos;

    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() - pos < n) {
        throw TruncatedData("decode_pgm: expected " + std::to_string(n) + " pixel bytes, got " +
                            std::to_string(bytes.size() - pos));
    }
    GrayImage img(width, height);
    for (std::size_t i = 0; i < n; ++i) {
        img.data[i] = static_cast<double>(bytes[pos + i]) / 255.0;
    }
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    char header[48];
    const int len = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", img.width, img.height);
    std::vector<std::uint8_t> out(header, header + len);
    out.reserve(out.size() + img.data.size());
    for (double v : img.data) {
        // round half-up to the nearest 8-bit level for a deterministic round trip
        const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
        out.push_back(static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0)));
    }
    return out;
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TruncatedData("read_pgm: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

void write_pgm(const GrayImage& img, const std::string& path) {
    const auto bytes = encode_pgm(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw TruncatedData("write_pgm: cannot open " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw ZeroDimension("resize_bilinear: output size must be >= 1");
    GrayImage out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int dy = 0; dy < out_h; ++dy) {
        const double fy = (dy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double ty = fy - y0;
        const int y0c = std::clamp(y0, 0, img.height - 1);
        const int y1c = std::clamp(y0 + 1, 0, img.height - 1);
        for (int dx = 0; dx < out_w; ++dx) {
            const double fx = (dx + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double tx = fx - x0;
            const int x0c = std::clamp(x0, 0, img.width - 1);
            const int x1c = std::clamp(x0 + 1, 0, img.width - 1);
            const double top = (1.0 - tx) * img.at(x0c, y0c) + tx * img.at(x1c, y0c);
            const double bot = (1.0 - tx) * img.at(x0c, y1c) + tx * img.at(x1c, y1c);
            out.at(dx, dy) = (1.0 - ty) * top + ty * bot;
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, int x0, int y0, int w, int h) {
    if (w < 1 || h < 1 || x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height) {
        throw OutOfBounds("crop: rectangle not inside image");
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.at(x, y) = img.at(x0 + x, y0 + y);
        }
    }
    return out;
}

GrayImage hflip(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            out.at(x, y) = img.at(img.width - 1 - x, y);
        }
    }
    return out;
}

}  // namespace gcnn
