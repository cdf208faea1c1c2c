#include "gcnn/svm.hpp"

#include <algorithm>
#include <cmath>

namespace gcnn {

namespace {

struct BinaryProblem {
    const Tensor* X;
    std::vector<double> y;  // +1 / -1
    double C;
    double s;  // intercept scaling
};

double objective(const BinaryProblem& pb, std::span<const double> w, double b) {
    const std::size_t n = pb.X->dim(0), d = pb.X->dim(1);
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = &pb.X->data[i * d];
        double f = b * pb.s;
        for (std::size_t j = 0; j < d; ++j) f += w[j] * x[j];
        const double m = 1.0 - pb.y[i] * f;
        if (m > 0.0) hinge += m * m;
    }
    return 0.5 * reg + pb.C * hinge;
}

void gradient(const BinaryProblem& pb, std::span<const double> w, double b,
              std::span<double> gw, double& gb) {
    const std::size_t n = pb.X->dim(0), d = pb.X->dim(1);
    for (std::size_t j = 0; j < d; ++j) gw[j] = w[j];
    gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = &pb.X->data[i * d];
        double f = b * pb.s;
        for (std::size_t j = 0; j < d; ++j) f += w[j] * x[j];
        const double m = 1.0 - pb.y[i] * f;
        if (m > 0.0) {
            const double coef = -2.0 * pb.C * m * pb.y[i];
            for (std::size_t j = 0; j < d; ++j) gw[j] += coef * x[j];
            gb += coef * pb.s;
        }
    }
}

// Full-batch GD with Armijo backtracking; warm-started step size.
void fit_binary(const BinaryProblem& pb, const SvmConfig& cfg, std::span<double> w, double& b,
                std::vector<double>* trace, bool* by_tol, double* grad_norm_end) {
    const std::size_t d = pb.X->dim(1);
    std::fill(w.begin(), w.end(), 0.0);
    b = 0.0;

    std::vector<double> gw(d), wtry(d);
    double obj = objective(pb, w, b);
    if (trace) trace->push_back(obj);
    double step = 1.0;
    bool tol_hit = false;
    double gnorm2 = 0.0;

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        double gb = 0.0;
        gradient(pb, w, b, gw, gb);
        gnorm2 = gb * gb;
        for (double v : gw) gnorm2 += v * v;
        if (gnorm2 <= 1e-24) {
            tol_hit = true;
            break;
        }

        step = std::min(step * 2.0, 1e6);
        double new_obj = obj;
        double btry = b;
        bool accepted = false;
        while (step > 1e-20) {
            for (std::size_t j = 0; j < d; ++j) wtry[j] = w[j] - step * gw[j];
            btry = b - step * gb;
            new_obj = objective(pb, wtry, btry);
            if (new_obj <= obj - 1e-4 * step * gnorm2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no usable descent step left

        const double rel_dec = (obj - new_obj) / std::max(obj, 1e-12);
        std::copy(wtry.begin(), wtry.end(), w.begin());
        b = btry;
        obj = new_obj;
        if (trace) trace->push_back(obj);
        if (rel_dec < cfg.tol) {
            tol_hit = true;
            break;
        }
    }
    if (by_tol) *by_tol = tol_hit;
    if (grad_norm_end) {
        double gb = 0.0;
        gradient(pb, w, b, gw, gb);
        double g2 = gb * gb;
        for (double v : gw) g2 += v * v;
        *grad_norm_end = std::sqrt(g2);
    }
}

}  // namespace

SvmModel svm_fit(const Tensor& X, std::span<const int> y, const SvmConfig& cfg,
                 SvmFitStats* stats) {
    if (X.rank() != 2) throw DimMismatch("svm_fit: expected N x D features");
    const std::size_t n = X.dim(0), d = X.dim(1);
    if (y.size() != n) throw DimMismatch("svm_fit: label count mismatch");
    if (n < 2) throw SingleClassInput("svm_fit: need at least two samples");
    for (double v : X.data) {
        if (!std::isfinite(v)) throw NonFiniteFeature("svm_fit: feature matrix contains NaN/Inf");
    }

    std::vector<int> classes(y.begin(), y.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw SingleClassInput("svm_fit: need at least two distinct labels");

    SvmModel model;
    model.n_features = d;
    model.intercept_scaling = cfg.intercept_scaling;
    model.classes = classes;
    model.weights = Tensor({classes.size(), d});
    model.bias.assign(classes.size(), 0.0);

    if (stats) {
        stats->objectives.assign(classes.size(), {});
        stats->converged_by_tol.assign(classes.size(), false);
        stats->grad_norm_at_end.assign(classes.size(), 0.0);
    }

#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < static_cast<long>(classes.size()); ++k) {
        BinaryProblem pb;
        pb.X = &X;
        pb.C = cfg.C;
        pb.s = cfg.intercept_scaling;
        pb.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            pb.y[i] = (y[i] == classes[static_cast<std::size_t>(k)]) ? 1.0 : -1.0;
        }
        std::span<double> wk(&model.weights.data[static_cast<std::size_t>(k) * d], d);
        bool by_tol = false;
        double gend = 0.0;
        fit_binary(pb, cfg, wk, model.bias[static_cast<std::size_t>(k)],
                   stats ? &stats->objectives[static_cast<std::size_t>(k)] : nullptr, &by_tol,
                   &gend);
        if (stats) {
            stats->converged_by_tol[static_cast<std::size_t>(k)] = by_tol;
            stats->grad_norm_at_end[static_cast<std::size_t>(k)] = gend;
        }
    }
    return model;
}

Tensor svm_decision(const SvmModel& m, const Tensor& X) {
    if (X.rank() != 2 || X.dim(1) != m.n_features) {
        throw DimMismatch("svm_decision: feature dim " + shape_str(X.shape) + " vs model " +
                          std::to_string(m.n_features));
    }
    const std::size_t n = X.dim(0), d = m.n_features, k = m.classes.size();
    Tensor scores({n, k});
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = &X.data[i * d];
        for (std::size_t c = 0; c < k; ++c) {
            const double* w = &m.weights.data[c * d];
            double f = m.bias[c] * m.intercept_scaling;
            for (std::size_t j = 0; j < d; ++j) f += w[j] * x[j];
            scores.at2(i, c) = f;
        }
    }
    return scores;
}

std::vector<int> svm_predict(const SvmModel& m, const Tensor& X) {
    const Tensor scores = svm_decision(m, X);
    const std::size_t n = scores.dim(0), k = scores.dim(1);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (scores.at2(i, c) > scores.at2(i, best)) best = c;  // strict: ties keep lowest
        }
        out[i] = m.classes[best];
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw DimMismatch("accuracy: size mismatch or empty");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace gcnn
