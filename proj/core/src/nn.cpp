#include "gcnn/nn.hpp"

#include <algorithm>
#include <cmath>

namespace gcnn {

namespace {

int ceil_div(int a, int b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

void kaiming_normal(Tensor& w, std::size_t fan_in, Rng& rng) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w.data) v = std_dev * rng.next_normal();
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, int kernel_, int stride_, int pad_, Rng& rng)
    : weight({out_ch, in_ch, static_cast<std::size_t>(kernel_), static_cast<std::size_t>(kernel_)}),
      bias({out_ch}),
      grad_weight(weight.shape),
      grad_bias(bias.shape),
      kernel(kernel_),
      stride(stride_),
      pad(pad_) {
    kaiming_normal(weight, in_ch * kernel_ * kernel_, rng);
}

Tensor Conv2d::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 4 || x.dim(1) != weight.dim(1)) {
        throw ShapeMismatch("conv2d: input " + shape_str(x.shape) + " incompatible with weight " +
                            shape_str(weight.shape));
    }
    const int n = static_cast<int>(x.dim(0)), ic = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
    const int oc = static_cast<int>(weight.dim(0));
    const int oh = (h + 2 * pad - kernel) / stride + 1;
    const int ow = (w + 2 * pad - kernel) / stride + 1;
    if (oh < 1 || ow < 1) throw ShapeMismatch("conv2d: output would be empty");

    Tensor out({static_cast<std::size_t>(n), static_cast<std::size_t>(oc),
                static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});

#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oci = 0; oci < oc; ++oci) {
            double* oplane = &out.data[out.idx4(ni, oci, 0, 0)];
            const double b = bias[oci];
            for (int i = 0; i < oh * ow; ++i) oplane[i] = b;
            for (int ici = 0; ici < ic; ++ici) {
                const double* iplane = &x.data[x.idx4(ni, ici, 0, 0)];
                for (int ky = 0; ky < kernel; ++ky) {
                    for (int kx = 0; kx < kernel; ++kx) {
                        const double wv = weight.at4(oci, ici, ky, kx);
                        if (wv == 0.0) continue;
                        const int ox_lo = std::max(0, ceil_div(pad - kx, stride));
                        const int ox_hi = std::min(ow, (w - 1 - kx + pad) / stride + 1);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            double* orow = oplane + static_cast<std::size_t>(oy) * ow;
                            const double* irow = iplane + static_cast<std::size_t>(iy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                orow[ox] += wv * irow[ox * stride - pad + kx];
                            }
                        }
                    }
                }
            }
        }
    }

    if (mode == Mode::Train) {
        cached_input_ = x;
        has_cache_ = true;
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("conv2d: backward without train-mode forward");
    const Tensor& x = cached_input_;
    const int n = static_cast<int>(x.dim(0)), ic = static_cast<int>(x.dim(1));
    const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
    const int oc = static_cast<int>(weight.dim(0));
    const int oh = static_cast<int>(grad_out.dim(2)), ow = static_cast<int>(grad_out.dim(3));

    for (int oci = 0; oci < oc; ++oci) {
        double acc = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const double* gplane = &grad_out.data[grad_out.idx4(ni, oci, 0, 0)];
            for (int i = 0; i < oh * ow; ++i) acc += gplane[i];
        }
        grad_bias[oci] += acc;
    }

#pragma omp parallel for schedule(static)
    for (int oci = 0; oci < oc; ++oci) {
        for (int ici = 0; ici < ic; ++ici) {
            for (int ky = 0; ky < kernel; ++ky) {
                for (int kx = 0; kx < kernel; ++kx) {
                    const int ox_lo = std::max(0, ceil_div(pad - kx, stride));
                    const int ox_hi = std::min(ow, (w - 1 - kx + pad) / stride + 1);
                    double acc = 0.0;
                    for (int ni = 0; ni < n; ++ni) {
                        const double* gplane = &grad_out.data[grad_out.idx4(ni, oci, 0, 0)];
                        const double* iplane = &x.data[x.idx4(ni, ici, 0, 0)];
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            const double* grow = gplane + static_cast<std::size_t>(oy) * ow;
                            const double* irow = iplane + static_cast<std::size_t>(iy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                acc += grow[ox] * irow[ox * stride - pad + kx];
                            }
                        }
                    }
                    grad_weight.at4(oci, ici, ky, kx) += acc;
                }
            }
        }
    }

    Tensor grad_in(x.shape);
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oci = 0; oci < oc; ++oci) {
            const double* gplane = &grad_out.data[grad_out.idx4(ni, oci, 0, 0)];
            for (int ici = 0; ici < ic; ++ici) {
                double* dplane = &grad_in.data[grad_in.idx4(ni, ici, 0, 0)];
                for (int ky = 0; ky < kernel; ++ky) {
                    for (int kx = 0; kx < kernel; ++kx) {
                        const double wv = weight.at4(oci, ici, ky, kx);
                        if (wv == 0.0) continue;
                        const int ox_lo = std::max(0, ceil_div(pad - kx, stride));
                        const int ox_hi = std::min(ow, (w - 1 - kx + pad) / stride + 1);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            const double* grow = gplane + static_cast<std::size_t>(oy) * ow;
                            double* drow = dplane + static_cast<std::size_t>(iy) * w;
                            for (int ox = ox_lo; ox < ox_hi; ++ox) {
                                drow[ox * stride - pad + kx] += wv * grow[ox];
                            }
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t channels)
    : gamma({channels}),
      beta({channels}),
      grad_gamma({channels}),
      grad_beta({channels}),
      running_mean({channels}),
      running_var({channels}) {
    gamma.fill(1.0);
    running_var.fill(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 4 || x.dim(1) != gamma.dim(0)) {
        throw ShapeMismatch("batchnorm: input " + shape_str(x.shape) + " vs channels " +
                            std::to_string(gamma.dim(0)));
    }
    const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    const std::size_t count = n * plane;

    Tensor out(x.shape);
    if (mode == Mode::Eval) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double inv = 1.0 / std::sqrt(running_var[ci] + kEps);
            const double g = gamma[ci], b = beta[ci], m = running_mean[ci];
            for (std::size_t ni = 0; ni < n; ++ni) {
                const double* src = &x.data[(ni * c + ci) * plane];
                double* dst = &out.data[(ni * c + ci) * plane];
                for (std::size_t i = 0; i < plane; ++i) dst[i] = g * (src[i] - m) * inv + b;
            }
        }
        return out;
    }

    cached_mean_.assign(c, 0.0);
    cached_inv_std_.assign(c, 0.0);
    cached_xhat_ = Tensor(x.shape);
    for (std::size_t ci = 0; ci < c; ++ci) {
        double mean = 0.0;
        for (std::size_t ni = 0; ni < n; ++ni) {
            const double* src = &x.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) mean += src[i];
        }
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t ni = 0; ni < n; ++ni) {
            const double* src = &x.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = src[i] - mean;
                var += d * d;
            }
        }
        var /= static_cast<double>(count);  // population variance in train mode

        const double inv = 1.0 / std::sqrt(var + kEps);
        cached_mean_[ci] = mean;
        cached_inv_std_[ci] = inv;
        const double g = gamma[ci], b = beta[ci];
        for (std::size_t ni = 0; ni < n; ++ni) {
            const double* src = &x.data[(ni * c + ci) * plane];
            double* xh = &cached_xhat_.data[(ni * c + ci) * plane];
            double* dst = &out.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (src[i] - mean) * inv;
                dst[i] = g * xh[i] + b;
            }
        }

        // running averages track the unbiased variance
        const double unbiased =
            count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
        running_mean[ci] = (1.0 - kMomentum) * running_mean[ci] + kMomentum * mean;
        running_var[ci] = (1.0 - kMomentum) * running_var[ci] + kMomentum * unbiased;
    }

    cached_input_ = x;
    has_cache_ = true;
    return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("batchnorm: backward without train-mode forward");
    const std::size_t n = grad_out.dim(0), c = grad_out.dim(1),
                      plane = grad_out.dim(2) * grad_out.dim(3);
    const double count = static_cast<double>(n * plane);

    Tensor grad_in(grad_out.shape);
    for (std::size_t ci = 0; ci < c; ++ci) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t ni = 0; ni < n; ++ni) {
            const double* g = &grad_out.data[(ni * c + ci) * plane];
            const double* xh = &cached_xhat_.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
        }
        grad_gamma[ci] += sum_gx;
        grad_beta[ci] += sum_g;

        const double scale = gamma[ci] * cached_inv_std_[ci] / count;
        for (std::size_t ni = 0; ni < n; ++ni) {
            const double* g = &grad_out.data[(ni * c + ci) * plane];
            const double* xh = &cached_xhat_.data[(ni * c + ci) * plane];
            double* d = &grad_in.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                d[i] = scale * (count * g[i] - sum_g - xh[i] * sum_gx);
            }
        }
    }
    return grad_in;
}

// ------------------------------------------------------------------ ReLU

Tensor ReLU::forward(const Tensor& x, Mode mode) {
    Tensor out(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    if (mode == Mode::Train) {
        cached_input_ = x;
        has_cache_ = true;
    }
    return out;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("relu: backward without train-mode forward");
    require_same_shape(grad_out, cached_input_, "relu backward");
    Tensor grad_in(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.numel(); ++i) {
        grad_in[i] = cached_input_[i] > 0.0 ? grad_out[i] : 0.0;
    }
    return grad_in;
}

// -------------------------------------------------------------- MaxPool2

Tensor MaxPool2::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 4) throw ShapeMismatch("maxpool2: expected NCHW input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < 2 || w < 2) throw ShapeMismatch("maxpool2: spatial dims must be >= 2");
    const std::size_t oh = h / 2, ow = w / 2;

    Tensor out({n, c, oh, ow});
    std::vector<std::size_t> argmax(out.numel());
    for (std::size_t ni = 0; ni < n; ++ni) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    std::size_t best = x.idx4(ni, ci, 2 * oy, 2 * ox);
                    double bv = x.data[best];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = x.idx4(ni, ci, 2 * oy + dy, 2 * ox + dx);
                            if (x.data[idx] > bv) {
                                bv = x.data[idx];
                                best = idx;
                            }
                        }
                    }
                    const std::size_t o = out.idx4(ni, ci, oy, ox);
                    out.data[o] = bv;
                    argmax[o] = best;
                }
            }
        }
    }
    if (mode == Mode::Train) {
        cached_argmax_ = std::move(argmax);
        cached_in_shape_ = x.shape;
        has_cache_ = true;
    }
    return out;
}

Tensor MaxPool2::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("maxpool2: backward without train-mode forward");
    Tensor grad_in(cached_in_shape_);
    for (std::size_t i = 0; i < grad_out.numel(); ++i) {
        grad_in.data[cached_argmax_[i]] += grad_out.data[i];
    }
    return grad_in;
}

// --------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 4) throw ShapeMismatch("gap: expected NCHW input");
    const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor out({n, c});
    for (std::size_t ni = 0; ni < n; ++ni) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double* src = &x.data[(ni * c + ci) * plane];
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += src[i];
            out.at2(ni, ci) = acc / static_cast<double>(plane);
        }
    }
    if (mode == Mode::Train) {
        cached_in_shape_ = x.shape;
        has_cache_ = true;
    }
    return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("gap: backward without train-mode forward");
    const std::size_t n = cached_in_shape_[0], c = cached_in_shape_[1],
                      plane = cached_in_shape_[2] * cached_in_shape_[3];
    Tensor grad_in(cached_in_shape_);
    for (std::size_t ni = 0; ni < n; ++ni) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double g = grad_out.at2(ni, ci) / static_cast<double>(plane);
            double* dst = &grad_in.data[(ni * c + ci) * plane];
            for (std::size_t i = 0; i < plane; ++i) dst[i] = g;
        }
    }
    return grad_in;
}

// --------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x, Mode mode) {
    if (x.rank() < 2) throw ShapeMismatch("flatten: expected rank >= 2");
    Tensor out({x.dim(0), x.numel() / x.dim(0)});
    out.data = x.data;
    if (mode == Mode::Train) {
        cached_in_shape_ = x.shape;
        has_cache_ = true;
    }
    return out;
}

Tensor Flatten::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("flatten: backward without train-mode forward");
    Tensor grad_in(cached_in_shape_);
    grad_in.data = grad_out.data;
    return grad_in;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
    : weight({out_features, in_features}),
      bias({out_features}),
      grad_weight(weight.shape),
      grad_bias(bias.shape) {
    kaiming_normal(weight, in_features, rng);
}

Tensor Linear::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 2 || x.dim(1) != weight.dim(1)) {
        throw ShapeMismatch("linear: input " + shape_str(x.shape) + " vs weight " +
                            shape_str(weight.shape));
    }
    const std::size_t n = x.dim(0), in = weight.dim(1), out_f = weight.dim(0);
    Tensor out({n, out_f});
    for (std::size_t ni = 0; ni < n; ++ni) {
        const double* xr = &x.data[ni * in];
        for (std::size_t o = 0; o < out_f; ++o) {
            const double* wr = &weight.data[o * in];
            double acc = bias[o];
            for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
            out.at2(ni, o) = acc;
        }
    }
    if (mode == Mode::Train) {
        cached_input_ = x;
        has_cache_ = true;
    }
    return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("linear: backward without train-mode forward");
    const std::size_t n = cached_input_.dim(0), in = weight.dim(1), out_f = weight.dim(0);
    for (std::size_t ni = 0; ni < n; ++ni) {
        const double* xr = &cached_input_.data[ni * in];
        const double* gr = &grad_out.data[ni * out_f];
        for (std::size_t o = 0; o < out_f; ++o) {
            double* gw = &grad_weight.data[o * in];
            const double g = gr[o];
            for (std::size_t i = 0; i < in; ++i) gw[i] += g * xr[i];
            grad_bias[o] += g;
        }
    }
    Tensor grad_in({n, in});
    for (std::size_t ni = 0; ni < n; ++ni) {
        const double* gr = &grad_out.data[ni * out_f];
        double* dr = &grad_in.data[ni * in];
        for (std::size_t o = 0; o < out_f; ++o) {
            const double* wr = &weight.data[o * in];
            const double g = gr[o];
            for (std::size_t i = 0; i < in; ++i) dr[i] += g * wr[i];
        }
    }
    return grad_in;
}

// --------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(std::size_t in_ch, std::size_t out_ch, int stride, Rng& rng)
    : conv1(in_ch, out_ch, 3, stride, 1, rng),
      conv2(out_ch, out_ch, 3, 1, 1, rng),
      bn1(out_ch),
      bn2(out_ch) {
    if (in_ch != out_ch || stride != 1) {
        conv_skip = std::make_unique<Conv2d>(in_ch, out_ch, 1, stride, 0, rng);
        bn_skip = std::make_unique<BatchNorm>(out_ch);
    }
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode) {
    Tensor main = conv1.forward(x, mode);
    main = bn1.forward(main, mode);
    main = relu_mid.forward(main, mode);
    main = conv2.forward(main, mode);
    main = bn2.forward(main, mode);

    Tensor sum = conv_skip ? bn_skip->forward(conv_skip->forward(x, mode), mode) : x;
    require_same_shape(main, sum, "residual add");
    for (std::size_t i = 0; i < sum.numel(); ++i) sum[i] += main[i];

    Tensor out(sum.shape);
    for (std::size_t i = 0; i < sum.numel(); ++i) out[i] = sum[i] > 0.0 ? sum[i] : 0.0;
    if (mode == Mode::Train) {
        cached_sum_ = std::move(sum);
        has_cache_ = true;
    }
    return out;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    if (!has_cache_) throw NoCachedForward("residual: backward without train-mode forward");
    Tensor gsum(grad_out.shape);
    for (std::size_t i = 0; i < grad_out.numel(); ++i) {
        gsum[i] = cached_sum_[i] > 0.0 ? grad_out[i] : 0.0;
    }

    Tensor gmain = bn2.backward(gsum);
    gmain = conv2.backward(gmain);
    gmain = relu_mid.backward(gmain);
    gmain = bn1.backward(gmain);
    gmain = conv1.backward(gmain);

    Tensor gskip = conv_skip ? conv_skip->backward(bn_skip->backward(gsum)) : std::move(gsum);
    require_same_shape(gmain, gskip, "residual backward");
    for (std::size_t i = 0; i < gskip.numel(); ++i) gskip[i] += gmain[i];
    return gskip;
}

std::vector<Tensor*> ResidualBlock::params() {
    std::vector<Tensor*> out;
    for (Layer* l : std::vector<Layer*>{&conv1, &bn1, &conv2, &bn2, conv_skip.get(), bn_skip.get()}) {
        if (!l) continue;
        for (Tensor* t : l->params()) out.push_back(t);
    }
    return out;
}

std::vector<Tensor*> ResidualBlock::grads() {
    std::vector<Tensor*> out;
    for (Layer* l : std::vector<Layer*>{&conv1, &bn1, &conv2, &bn2, conv_skip.get(), bn_skip.get()}) {
        if (!l) continue;
        for (Tensor* t : l->grads()) out.push_back(t);
    }
    return out;
}

std::vector<Tensor*> ResidualBlock::running_state() {
    std::vector<Tensor*> out;
    for (Layer* l : std::vector<Layer*>{&conv1, &bn1, &conv2, &bn2, conv_skip.get(), bn_skip.get()}) {
        if (!l) continue;
        for (Tensor* t : l->running_state()) out.push_back(t);
    }
    return out;
}

// ------------------------------------------------------------ ModelGraph

std::string arch_name(Arch a) {
    return a == Arch::MiniCNN ? "MiniCNN" : "MiniResNet8";
}

Arch parse_arch(const std::string& name) {
    if (name == "MiniCNN") return Arch::MiniCNN;
    if (name == "MiniResNet8") return Arch::MiniResNet8;
    throw ShapeMismatch("parse_arch: unknown architecture '" + name + "'");
}

std::vector<Tensor*> ModelGraph::parameters() const {
    std::vector<Tensor*> out;
    for (const auto& l : layers) {
        for (Tensor* t : l->params()) out.push_back(t);
    }
    return out;
}

std::vector<Tensor*> ModelGraph::gradients() const {
    std::vector<Tensor*> out;
    for (const auto& l : layers) {
        for (Tensor* t : l->grads()) out.push_back(t);
    }
    return out;
}

std::vector<Tensor*> ModelGraph::running_stats() const {
    std::vector<Tensor*> out;
    for (const auto& l : layers) {
        for (Tensor* t : l->running_state()) out.push_back(t);
    }
    return out;
}

void ModelGraph::zero_grads() {
    for (const auto& l : layers) l->zero_grads();
}

ModelGraph build_model(Arch arch, int in_channels, int n_classes, std::uint64_t seed,
                       int input_size) {
    if (in_channels != 1 && in_channels != 8 && in_channels != 16) {
        throw UnsupportedChannels("build_model: in_channels must be 1, 8 or 16, got " +
                                  std::to_string(in_channels));
    }
    if (n_classes < 1) throw ShapeMismatch("build_model: n_classes must be >= 1");

    ModelGraph g;
    g.arch = arch;
    g.in_channels = in_channels;
    g.n_classes = n_classes;
    g.input_size = input_size;
    Rng rng(seed);

    const std::size_t ic = static_cast<std::size_t>(in_channels);
    if (arch == Arch::MiniCNN) {
        const int s3 = input_size / 2 / 2 / 2;
        if (s3 < 1) throw ShapeMismatch("build_model: input_size too small for MiniCNN");
        g.layers.push_back(std::make_unique<Conv2d>(ic, 16, 3, 1, 1, rng));
        g.layers.push_back(std::make_unique<ReLU>());
        g.layers.push_back(std::make_unique<MaxPool2>());
        g.layers.push_back(std::make_unique<Conv2d>(16, 32, 3, 1, 1, rng));
        g.layers.push_back(std::make_unique<ReLU>());
        g.layers.push_back(std::make_unique<MaxPool2>());
        g.layers.push_back(std::make_unique<Conv2d>(32, 64, 3, 1, 1, rng));
        g.layers.push_back(std::make_unique<ReLU>());
        g.layers.push_back(std::make_unique<MaxPool2>());
        g.layers.push_back(std::make_unique<Flatten>());
        g.layers.push_back(std::make_unique<Linear>(64 * static_cast<std::size_t>(s3) * s3, 128, rng));
        g.layers.push_back(std::make_unique<ReLU>());
        g.layers.push_back(std::make_unique<Linear>(128, static_cast<std::size_t>(n_classes), rng));
        return g;
    }

    // MiniResNet8
    g.layers.push_back(std::make_unique<Conv2d>(ic, 16, 3, 1, 1, rng));
    g.layers.push_back(std::make_unique<BatchNorm>(16));
    g.layers.push_back(std::make_unique<ReLU>());
    const std::size_t channels[8] = {16, 16, 32, 32, 64, 64, 128, 128};
    std::size_t prev = 16;
    for (int b = 0; b < 8; ++b) {
        const int stride = (b == 2 || b == 4 || b == 6) ? 2 : 1;
        g.layers.push_back(std::make_unique<ResidualBlock>(prev, channels[b], stride, rng));
        g.block_taps.push_back(g.layers.size() - 1);
        prev = channels[b];
    }
    g.layers.push_back(std::make_unique<GlobalAvgPool>());
    g.layers.push_back(std::make_unique<Linear>(prev, static_cast<std::size_t>(n_classes), rng));
    return g;
}

Tensor model_forward(ModelGraph& g, const Tensor& x, Mode mode, std::vector<Tensor>* taps) {
    Tensor cur = x;
    std::size_t tap_pos = 0;
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        cur = g.layers[i]->forward(cur, mode);
        ensure_finite(cur, g.layers[i]->name().c_str());
        if (taps && tap_pos < g.block_taps.size() && g.block_taps[tap_pos] == i) {
            taps->push_back(cur);
            ++tap_pos;
        }
    }
    return cur;
}

Tensor model_backward(ModelGraph& g, const Tensor& grad_logits) {
    Tensor cur = grad_logits;
    for (std::size_t i = g.layers.size(); i-- > 0;) {
        cur = g.layers[i]->backward(cur);
    }
    return cur;
}

LossGrad loss_softmax_ce(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeMismatch("loss_softmax_ce: expected N x K logits");
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n) throw ShapeMismatch("loss_softmax_ce: labels size mismatch");

    LossGrad out;
    out.grad_logits = Tensor(logits.shape);
    double loss = 0.0;
    for (std::size_t ni = 0; ni < n; ++ni) {
        const int label = labels[ni];
        if (label < 0 || static_cast<std::size_t>(label) >= k) {
            throw LabelOutOfRange("loss_softmax_ce: label " + std::to_string(label) +
                                  " outside [0," + std::to_string(k) + ")");
        }
        const double* row = &logits.data[ni * k];
        double m = row[0];
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(row[j] - m);
        loss += -(row[label] - m - std::log(denom));

        double* grow = &out.grad_logits.data[ni * k];
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - m) / denom;
            grow[j] = (p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) /
                      static_cast<double>(n);
        }
    }
    out.loss = loss / static_cast<double>(n);
    return out;
}

}  // namespace gcnn
