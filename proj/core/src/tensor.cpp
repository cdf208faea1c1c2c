#include "gcnn/tensor.hpp"

#include <cmath>

namespace gcnn {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

void ensure_finite(const Tensor& t, const char* where) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NonFiniteValue(std::string(where) + ": tensor contains NaN or Inf");
        }
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch(std::string(where) + ": shapes " + shape_str(a.shape) + " vs " +
                            shape_str(b.shape));
    }
}

}  // namespace gcnn
