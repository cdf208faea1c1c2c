#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcnn {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major tensor of doubles; image batches use NCHW order.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // index helpers for the common layouts
    std::size_t idx2(std::size_t i, std::size_t j) const { return i * shape[1] + j; }
    std::size_t idx3(std::size_t c, std::size_t h, std::size_t w) const {
        return (c * shape[1] + h) * shape[2] + w;
    }
    std::size_t idx4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return ((n * shape[1] + c) * shape[2] + h) * shape[3] + w;
    }

    double& at2(std::size_t i, std::size_t j) { return data[idx2(i, j)]; }
    double at2(std::size_t i, std::size_t j) const { return data[idx2(i, j)]; }
    double& at3(std::size_t c, std::size_t h, std::size_t w) { return data[idx3(c, h, w)]; }
    double at3(std::size_t c, std::size_t h, std::size_t w) const { return data[idx3(c, h, w)]; }
    double& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data[idx4(n, c, h, w)];
    }
    double at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data[idx4(n, c, h, w)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    void fill(double v);
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// Throws NonFiniteValue naming `where` if any element is NaN or infinite.
void ensure_finite(const Tensor& t, const char* where);

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace gcnn
