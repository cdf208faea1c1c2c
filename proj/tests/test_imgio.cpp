#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gcnn/image.hpp"
#include "gcnn/rng.hpp"

using namespace gcnn;

namespace {

std::vector<std::uint8_t> pgm_bytes(const std::string& header, std::initializer_list<int> pixels) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (int p : pixels) out.push_back(static_cast<std::uint8_t>(p));
    return out;
}

}  // namespace

TEST_CASE("decode_pgm normalizes 8-bit values") {
    const auto img = decode_pgm(pgm_bytes("P5\n1 1\n255\n", {255}));
    CHECK(img.width == 1);
    CHECK(img.height == 1);
    CHECK(img.data[0] == doctest::Approx(1.0));

    const auto img2 = decode_pgm(pgm_bytes("P5\n2 1\n255\n", {0, 128}));
    CHECK(img2.data[0] == doctest::Approx(0.0));
    CHECK(img2.data[1] == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("decode_pgm rejects bad input") {
    CHECK_THROWS_AS(decode_pgm(pgm_bytes("P2\n1 1\n255\n", {0})), MalformedHeader);
    CHECK_THROWS_AS(decode_pgm(pgm_bytes("P5\n2 2\n255\n", {0, 1, 2})), TruncatedData);
    CHECK_THROWS_AS(decode_pgm(pgm_bytes("P5\n1 1\n65535\n", {0, 0})), UnsupportedMaxval);
    CHECK_THROWS_AS(decode_pgm(pgm_bytes("P5\n", {})), MalformedHeader);
}

TEST_CASE("decode_pgm accepts header comments") {
    const auto img = decode_pgm(pgm_bytes("P5\n# comment line\n2 1\n255\n", {10, 20}));
    CHECK(img.width == 2);
    CHECK(img.data[1] == doctest::Approx(20.0 / 255.0));
}

TEST_CASE("encode_pgm quantizes round-half-up") {
    GrayImage img(1, 1);

    img.data[0] = 0.0;
    CHECK(encode_pgm(img).back() == 0);

    img.data[0] = 1.0;
    CHECK(encode_pgm(img).back() == 255);

    img.data[0] = 0.5;  // 127.5 rounds up
    CHECK(encode_pgm(img).back() == 128);
}

TEST_CASE("decode(encode) preserves intensities to one quantization level") {
    Rng rng(7);
    GrayImage img(13, 9);
    for (double& v : img.data) v = rng.next_double();
    const auto round_trip = decode_pgm(encode_pgm(img));
    REQUIRE(round_trip.data.size() == img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        CHECK(std::abs(round_trip.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);
    }
}

TEST_CASE("resize_bilinear identity and constant cases") {
    Rng rng(3);
    GrayImage img(6, 4);
    for (double& v : img.data) v = rng.next_double();

    const auto same = resize_bilinear(img, 6, 4);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(same.data[i] == img.data[i]);

    GrayImage dot(1, 1);
    dot.data[0] = 0.37;
    const auto big = resize_bilinear(dot, 5, 3);
    for (double v : big.data) CHECK(v == doctest::Approx(0.37));
}

TEST_CASE("resize_bilinear matches the half-pixel-center formula on 2x1 -> 4x1") {
    GrayImage img(2, 1);
    img.data = {0.0, 1.0};
    const auto out = resize_bilinear(img, 4, 1);
    // hand-evaluated: sx = (d + 0.5)/2 - 0.5 at d = 0..3 with edge clamping
    const double expected[4] = {0.0, 0.25, 0.75, 1.0};
    for (int i = 0; i < 4; ++i) CHECK(out.data[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("resize_bilinear rejects zero output") {
    GrayImage img(2, 2);
    CHECK_THROWS_AS(resize_bilinear(img, 0, 2), ZeroDimension);
}

TEST_CASE("crop copies the exact sub-rectangle") {
    GrayImage img(3, 2);
    img.data = {0, 1, 2, 3, 4, 5};

    const auto full = crop(img, 0, 0, 3, 2);
    CHECK(full.data == img.data);

    const auto right = crop(img, 1, 0, 2, 2);
    CHECK(right.data == std::vector<double>{1, 2, 4, 5});

    CHECK_THROWS_AS(crop(img, 2, 0, 2, 2), OutOfBounds);
    CHECK_THROWS_AS(crop(img, 0, 0, 0, 1), OutOfBounds);
}

TEST_CASE("crop of a crop composes by offset addition") {
    Rng rng(11);
    GrayImage img(10, 8);
    for (double& v : img.data) v = rng.next_double();
    const auto once = crop(crop(img, 2, 1, 6, 5), 1, 2, 3, 3);
    const auto direct = crop(img, 3, 3, 3, 3);
    CHECK(once.data == direct.data);
}

TEST_CASE("hflip is an involution") {
    Rng rng(5);
    GrayImage img(7, 3);
    for (double& v : img.data) v = rng.next_double();
    const auto twice = hflip(hflip(img));
    CHECK(twice.data == img.data);

    const auto once = hflip(img);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            CHECK(once.at(x, y) == img.at(img.width - 1 - x, y));
        }
    }
}
