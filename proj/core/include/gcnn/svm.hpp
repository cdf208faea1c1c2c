#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "gcnn/tensor.hpp"

namespace gcnn {

struct SingleClassInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteFeature : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SvmConfig {
    double C = 1.0;
    double tol = 1e-4;
    int max_iter = 1000;
    double intercept_scaling = 1.0;
};

// One-vs-rest linear SVM: a weight vector and bias per class.
struct SvmModel {
    std::size_t n_features = 0;
    double intercept_scaling = 1.0;
    std::vector<int> classes;  // distinct labels, ascending
    Tensor weights;            // K x D
    std::vector<double> bias;  // K
};

// Per-class objective traces; each accepted step appends one value.
struct SvmFitStats {
    std::vector<std::vector<double>> objectives;
    std::vector<bool> converged_by_tol;
    std::vector<double> grad_norm_at_end;
};

// Fits one binary squared-hinge subproblem per class:
//   F(w,b) = 1/2 ||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b*s))^2
// by full-batch gradient descent with Armijo backtracking, stopping when
// the relative objective decrease falls below tol or max_iter is reached.
// The bias is regularization free. Deterministic: no randomized ordering.
SvmModel svm_fit(const Tensor& X, std::span<const int> y, const SvmConfig& cfg,
                 SvmFitStats* stats = nullptr);

// score[n][k] = w_k . x_n + b_k * s
Tensor svm_decision(const SvmModel& m, const Tensor& X);

// argmax over class scores; ties resolve to the lowest class index.
std::vector<int> svm_predict(const SvmModel& m, const Tensor& X);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace gcnn
