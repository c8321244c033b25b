#ifndef VSAL_NN_HPP
#define VSAL_NN_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "vsal/kernels.hpp"
#include "vsal/rng.hpp"
#include "vsal/tensor.hpp"

namespace vsal {

enum class Padding { valid, same };

namespace detail {

inline void check_rank4(const char* op, const char* role, const Shape& s) {
    if (s.size() != 4)
        throw DimensionError(std::string(op) + ": " + role + " must be rank-4 (n,h,w,c), got " +
                             shape_str(s));
}

// TF-style "same": out = ceil(in/stride), leftover padding goes after.
inline std::pair<int, int> same_pad(int in, int k, int stride) {
    int out = (in + stride - 1) / stride;
    int total = std::max((out - 1) * stride + k - in, 0);
    return {out, total / 2};
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 Padding padding) {
    detail::check_rank4("conv2d", "input", x.shape());
    detail::check_rank4("conv2d", "weight", w.shape());
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (xs[3] != ws[2])
        throw DimensionError("conv2d: input channel axis " + std::to_string(xs[3]) +
                             " != weight in-channel axis " + std::to_string(ws[2]) + " (input " +
                             shape_str(xs) + ", weight " + shape_str(ws) + ")");
    if (b.defined() && b.size() != ws[3])
        throw DimensionError("conv2d: bias length " + std::to_string(b.size()) +
                             " != out channels " + std::to_string(ws[3]));
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");

    Conv2dShape s;
    s.n = xs[0];
    s.in_h = xs[1];
    s.in_w = xs[2];
    s.in_c = xs[3];
    s.kh = ws[0];
    s.kw = ws[1];
    s.out_c = ws[3];
    s.stride = stride;
    if (padding == Padding::same) {
        auto [oh, pt] = detail::same_pad(s.in_h, s.kh, stride);
        auto [ow, pl] = detail::same_pad(s.in_w, s.kw, stride);
        s.out_h = oh;
        s.out_w = ow;
        s.pad_top = pt;
        s.pad_left = pl;
    } else {
        s.pad_top = s.pad_left = 0;
        if (s.in_h < s.kh || s.in_w < s.kw)
            throw DimensionError("conv2d: kernel " + shape_str(ws) + " larger than input " + shape_str(xs));
        s.out_h = (s.in_h - s.kh) / stride + 1;
        s.out_w = (s.in_w - s.kw) / stride + 1;
    }

    std::vector<T> out(static_cast<std::size_t>((std::int64_t)s.n * s.out_h * s.out_w * s.out_c));
    kern::conv2d_forward(x.data().data(), w.data().data(), b.defined() ? b.data().data() : nullptr,
                         out.data(), s);

    auto xn = x.node();
    auto wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    std::vector<Tensor<T>> inputs = {x, w};
    if (b.defined()) inputs.push_back(b);
    return detail::make_op<T>({s.n, s.out_h, s.out_w, s.out_c}, std::move(out), std::move(inputs),
                              [xn, wn, bn, s](TensorNode<T>& self) {
                                  if (xn->requires_grad) {
                                      xn->ensure_grad();
                                      kern::conv2d_backward_input(self.grad.data(), wn->data.data(),
                                                                  xn->grad.data(), s);
                                  }
                                  if (wn->requires_grad) {
                                      wn->ensure_grad();
                                      kern::conv2d_backward_weight(xn->data.data(), self.grad.data(),
                                                                   wn->grad.data(), s);
                                  }
                                  if (bn && bn->requires_grad) {
                                      bn->ensure_grad();
                                      kern::conv2d_backward_bias(self.grad.data(), bn->grad.data(),
                                                                 s.n * s.out_h * s.out_w, s.out_c);
                                  }
                              });
}

// Transposed convolution; output extent in*stride when (k - stride) is even,
// which the architecture tables guarantee.
template <typename T>
Tensor<T> deconv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride) {
    detail::check_rank4("deconv2d", "input", x.shape());
    detail::check_rank4("deconv2d", "weight", w.shape());
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (xs[3] != ws[2])
        throw DimensionError("deconv2d: input channel axis " + std::to_string(xs[3]) +
                             " != weight in-channel axis " + std::to_string(ws[2]) + " (input " +
                             shape_str(xs) + ", weight " + shape_str(ws) + ")");
    if (b.defined() && b.size() != ws[3])
        throw DimensionError("deconv2d: bias length " + std::to_string(b.size()) +
                             " != out channels " + std::to_string(ws[3]));
    if (stride < 1) throw ConfigError("deconv2d: stride must be >= 1");
    if (ws[0] != ws[1]) throw DimensionError("deconv2d: square kernels required, got " + shape_str(ws));
    if ((ws[0] - stride) % 2 != 0 || ws[0] < stride)
        throw ConfigError("deconv2d: kernel " + std::to_string(ws[0]) + " incompatible with stride " +
                          std::to_string(stride) + " for size-preserving upsampling");

    Deconv2dShape s;
    s.n = xs[0];
    s.in_h = xs[1];
    s.in_w = xs[2];
    s.in_c = xs[3];
    s.kh = ws[0];
    s.kw = ws[1];
    s.out_c = ws[3];
    s.stride = stride;
    s.pad = (ws[0] - stride) / 2;
    s.out_h = (s.in_h - 1) * stride - 2 * s.pad + s.kh;
    s.out_w = (s.in_w - 1) * stride - 2 * s.pad + s.kw;

    std::vector<T> out(static_cast<std::size_t>((std::int64_t)s.n * s.out_h * s.out_w * s.out_c));
    kern::deconv2d_forward(x.data().data(), w.data().data(), b.defined() ? b.data().data() : nullptr,
                           out.data(), s);

    auto xn = x.node();
    auto wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    std::vector<Tensor<T>> inputs = {x, w};
    if (b.defined()) inputs.push_back(b);
    return detail::make_op<T>({s.n, s.out_h, s.out_w, s.out_c}, std::move(out), std::move(inputs),
                              [xn, wn, bn, s](TensorNode<T>& self) {
                                  if (xn->requires_grad) {
                                      xn->ensure_grad();
                                      kern::deconv2d_backward_input(self.grad.data(), wn->data.data(),
                                                                    xn->grad.data(), s);
                                  }
                                  if (wn->requires_grad) {
                                      wn->ensure_grad();
                                      kern::deconv2d_backward_weight(xn->data.data(), self.grad.data(),
                                                                     wn->grad.data(), s);
                                  }
                                  if (bn && bn->requires_grad) {
                                      bn->ensure_grad();
                                      kern::conv2d_backward_bias(self.grad.data(), bn->grad.data(),
                                                                 s.n * s.out_h * s.out_w, s.out_c);
                                  }
                              });
}

// Valid max pooling; gradient routes to the first max in row-major scan.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, int window, int stride) {
    detail::check_rank4("maxpool2d", "input", x.shape());
    if (window < 1 || stride < 1) throw ConfigError("maxpool2d: window and stride must be >= 1");
    const Shape& xs = x.shape();
    if (window > xs[1] || window > xs[2])
        throw DimensionError("maxpool2d: window " + std::to_string(window) + " larger than input " +
                             shape_str(xs));
    Pool2dShape s;
    s.n = xs[0];
    s.in_h = xs[1];
    s.in_w = xs[2];
    s.c = xs[3];
    s.window = window;
    s.stride = stride;
    s.out_h = (s.in_h - window) / stride + 1;
    s.out_w = (s.in_w - window) / stride + 1;

    std::int64_t count = (std::int64_t)s.n * s.out_h * s.out_w * s.c;
    std::vector<T> out(static_cast<std::size_t>(count));
    auto arg = std::make_shared<std::vector<std::int32_t>>(static_cast<std::size_t>(count));
    kern::maxpool_forward(x.data().data(), out.data(), arg->data(), s);

    auto xn = x.node();
    return detail::make_op<T>({s.n, s.out_h, s.out_w, s.c}, std::move(out), {x},
                              [xn, arg, count](TensorNode<T>& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  kern::maxpool_backward(self.grad.data(), arg->data(), xn->grad.data(),
                                                         count);
                              });
}

// Bilinear interpolation without corner alignment; identity when sizes match.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int out_h, int out_w) {
    detail::check_rank4("bilinear_resize", "input", x.shape());
    if (out_h < 1 || out_w < 1) throw ConfigError("bilinear_resize: output extent must be >= 1");
    const Shape& xs = x.shape();
    if (out_h == xs[1] && out_w == xs[2]) {
        // Same-size resample is exactly the identity; skip the arithmetic.
        auto xn = x.node();
        return detail::make_op<T>(xs, x.data(), {x}, [xn](TensorNode<T>& self) {
            if (!xn->requires_grad) return;
            detail::accumulate(*xn, self.grad);
        });
    }
    ResizeShape s;
    s.n = xs[0];
    s.in_h = xs[1];
    s.in_w = xs[2];
    s.c = xs[3];
    s.out_h = out_h;
    s.out_w = out_w;
    std::vector<T> out(static_cast<std::size_t>((std::int64_t)s.n * out_h * out_w * s.c));
    kern::bilinear_forward(x.data().data(), out.data(), s);
    auto xn = x.node();
    return detail::make_op<T>({s.n, out_h, out_w, s.c}, std::move(out), {x},
                              [xn, s](TensorNode<T>& self) {
                                  if (!xn->requires_grad) return;
                                  xn->ensure_grad();
                                  kern::bilinear_backward(self.grad.data(), xn->grad.data(), s);
                              });
}

enum class NormMode { train, eval };

// Per-channel running statistics owned by the layer that uses batch norm.
template <typename T>
struct RunningStats {
    std::vector<T> mean, var;
    explicit RunningStats(int channels = 0)
        : mean(static_cast<std::size_t>(channels), T(0)), var(static_cast<std::size_t>(channels), T(1)) {}
};

// Fused batch normalization over (n,h,w) per channel with learned affine.
// Population statistics; eps guards zero variance.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     RunningStats<T>* running, NormMode mode, T momentum = T(0.1), T eps = T(1e-5)) {
    detail::check_rank4("batch_norm", "input", x.shape());
    const Shape& xs = x.shape();
    int c = xs[3];
    if (gamma.size() != c || beta.size() != c)
        throw DimensionError("batch_norm: gamma/beta length " + std::to_string(gamma.size()) + "/" +
                             std::to_string(beta.size()) + " != channel count " + std::to_string(c));
    std::int64_t m = x.size() / c;  // samples per channel

    auto mean_c = std::make_shared<std::vector<T>>(c, T(0));
    auto inv_std = std::make_shared<std::vector<T>>(c, T(0));
    const auto& xv = x.data();
    bool train = mode == NormMode::train;
    if (train) {
        for (int ch = 0; ch < c; ++ch) {
            T acc = T(0);
            for (std::int64_t i = 0; i < m; ++i) acc += xv[i * c + ch];
            (*mean_c)[ch] = acc / static_cast<T>(m);
        }
        for (int ch = 0; ch < c; ++ch) {
            T acc = T(0);
            for (std::int64_t i = 0; i < m; ++i) {
                T d = xv[i * c + ch] - (*mean_c)[ch];
                acc += d * d;
            }
            T var = acc / static_cast<T>(m);
            (*inv_std)[ch] = T(1) / std::sqrt(var + eps);
            if (running) {
                running->mean[ch] = (T(1) - momentum) * running->mean[ch] + momentum * (*mean_c)[ch];
                running->var[ch] = (T(1) - momentum) * running->var[ch] + momentum * var;
            }
        }
    } else {
        if (!running) throw UsageError("batch_norm: eval mode requires running statistics");
        for (int ch = 0; ch < c; ++ch) {
            (*mean_c)[ch] = running->mean[ch];
            (*inv_std)[ch] = T(1) / std::sqrt(running->var[ch] + eps);
        }
    }

    std::vector<T> out(xv.size());
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    for (std::int64_t i = 0; i < m; ++i)
        for (int ch = 0; ch < c; ++ch) {
            T xhat = (xv[i * c + ch] - (*mean_c)[ch]) * (*inv_std)[ch];
            out[i * c + ch] = gv[ch] * xhat + bv[ch];
        }

    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return detail::make_op<T>(
        xs, std::move(out), {x, gamma, beta},
        [xn, gn, bn, mean_c, inv_std, m, c, train](TensorNode<T>& self) {
            std::vector<T> sum_g(c, T(0)), sum_gx(c, T(0));
            for (std::int64_t i = 0; i < m; ++i)
                for (int ch = 0; ch < c; ++ch) {
                    T xhat = (xn->data[i * c + ch] - (*mean_c)[ch]) * (*inv_std)[ch];
                    sum_g[ch] += self.grad[i * c + ch];
                    sum_gx[ch] += self.grad[i * c + ch] * xhat;
                }
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (int ch = 0; ch < c; ++ch) gn->grad[ch] += sum_gx[ch];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int ch = 0; ch < c; ++ch) bn->grad[ch] += sum_g[ch];
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i)
                    for (int ch = 0; ch < c; ++ch) {
                        T g = self.grad[i * c + ch];
                        T scale = gn->data[ch] * (*inv_std)[ch];
                        if (train) {
                            T xhat = (xn->data[i * c + ch] - (*mean_c)[ch]) * (*inv_std)[ch];
                            xn->grad[i * c + ch] +=
                                scale * (g - (sum_g[ch] + xhat * sum_gx[ch]) / static_cast<T>(m));
                        } else {
                            xn->grad[i * c + ch] += scale * g;
                        }
                    }
            }
        });
}

// Glorot-uniform over +/- sqrt(6 / (fan_in + fan_out)). Conv weights are
// (kh,kw,in,out); dense weights (in,out).
template <typename T>
Tensor<T> xavier_init(const Shape& shape, Rng& rng) {
    std::int64_t fan_in, fan_out;
    if (shape.size() == 4) {
        std::int64_t rf = (std::int64_t)shape[0] * shape[1];
        fan_in = rf * shape[2];
        fan_out = rf * shape[3];
    } else if (shape.size() == 2) {
        fan_in = shape[0];
        fan_out = shape[1];
    } else {
        throw UsageError("xavier_init: no fan-in/fan-out for shape " + shape_str(shape));
    }
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<T> data(static_cast<std::size_t>(numel(shape)));
    for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
    return Tensor<T>::from_data(shape, std::move(data));
}

}  // namespace vsal

#endif
