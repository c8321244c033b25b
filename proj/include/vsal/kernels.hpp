#ifndef VSAL_KERNELS_HPP
#define VSAL_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "vsal/common.hpp"

// Low-level dense kernels in two flavours: vsal::ref holds the plain serial
// reference implementations, vsal::par the OpenMP ones. Both accumulate each
// output element in the same order, so results are bit-identical regardless
// of flavour or thread count; tests assert that and the benchmark compares
// their speed. Full-tensor reductions (sums) stay serial in both flavours.

namespace vsal {

enum class ExecMode { serial, parallel };

inline ExecMode& exec_mode_storage() {
    static ExecMode mode = ExecMode::parallel;
    return mode;
}
inline ExecMode exec_mode() { return exec_mode_storage(); }
inline void set_exec_mode(ExecMode m) { exec_mode_storage() = m; }

struct Conv2dShape {
    int n, in_h, in_w, in_c;
    int kh, kw, out_c;
    int stride;
    int pad_top, pad_left;
    int out_h, out_w;
};

struct Deconv2dShape {
    int n, in_h, in_w, in_c;
    int kh, kw, out_c;
    int stride;
    int pad;  // symmetric; out = (in-1)*stride - 2*pad + k
    int out_h, out_w;
};

struct Pool2dShape {
    int n, in_h, in_w, c;
    int window, stride;
    int out_h, out_w;
};

struct ResizeShape {
    int n, in_h, in_w, c;
    int out_h, out_w;
};

namespace detail {

// One output pixel of a convolution: accumulation order (kh, kw, ic), then
// contiguous inner loop over out channels. Shared by ref and par so the
// floating-point order is identical.
template <typename T>
inline void conv2d_pixel(const T* x, const T* w, const T* b, T* y,
                         const Conv2dShape& s, int n, int oh, int ow) {
    T* yp = y + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
    for (int oc = 0; oc < s.out_c; ++oc) yp[oc] = b ? b[oc] : T(0);
    for (int kh = 0; kh < s.kh; ++kh) {
        int ih = oh * s.stride - s.pad_top + kh;
        if (ih < 0 || ih >= s.in_h) continue;
        for (int kw = 0; kw < s.kw; ++kw) {
            int iw = ow * s.stride - s.pad_left + kw;
            if (iw < 0 || iw >= s.in_w) continue;
            const T* xp = x + (((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c;
            const T* wp = w + (((std::int64_t)kh * s.kw + kw) * s.in_c) * s.out_c;
            for (int ic = 0; ic < s.in_c; ++ic) {
                T xv = xp[ic];
                const T* wrow = wp + (std::int64_t)ic * s.out_c;
                for (int oc = 0; oc < s.out_c; ++oc) yp[oc] += xv * wrow[oc];
            }
        }
    }
}

template <typename T>
inline void conv2d_dx_pixel(const T* gy, const T* w, T* gx,
                            const Conv2dShape& s, int n, int ih, int iw) {
    T* gxp = gx + (((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c;
    for (int kh = 0; kh < s.kh; ++kh) {
        int t = ih + s.pad_top - kh;
        if (t < 0 || t % s.stride) continue;
        int oh = t / s.stride;
        if (oh >= s.out_h) continue;
        for (int kw = 0; kw < s.kw; ++kw) {
            int u = iw + s.pad_left - kw;
            if (u < 0 || u % s.stride) continue;
            int ow = u / s.stride;
            if (ow >= s.out_w) continue;
            const T* gyp = gy + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
            const T* wp = w + (((std::int64_t)kh * s.kw + kw) * s.in_c) * s.out_c;
            for (int ic = 0; ic < s.in_c; ++ic) {
                const T* wrow = wp + (std::int64_t)ic * s.out_c;
                T acc = T(0);
                for (int oc = 0; oc < s.out_c; ++oc) acc += gyp[oc] * wrow[oc];
                gxp[ic] += acc;
            }
        }
    }
}

// Gradient of one (kh, kw, ic) slab of the weight tensor, all out channels.
template <typename T>
inline void conv2d_dw_slab(const T* x, const T* gy, T* gw,
                           const Conv2dShape& s, int kh, int kw, int ic) {
    T* gwp = gw + (((std::int64_t)kh * s.kw + kw) * s.in_c + ic) * s.out_c;
    for (int n = 0; n < s.n; ++n) {
        for (int oh = 0; oh < s.out_h; ++oh) {
            int ih = oh * s.stride - s.pad_top + kh;
            if (ih < 0 || ih >= s.in_h) continue;
            for (int ow = 0; ow < s.out_w; ++ow) {
                int iw = ow * s.stride - s.pad_left + kw;
                if (iw < 0 || iw >= s.in_w) continue;
                T xv = x[(((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c + ic];
                const T* gyp = gy + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
                for (int oc = 0; oc < s.out_c; ++oc) gwp[oc] += xv * gyp[oc];
            }
        }
    }
}

template <typename T>
inline void deconv2d_pixel(const T* x, const T* w, const T* b, T* y,
                           const Deconv2dShape& s, int n, int oh, int ow) {
    T* yp = y + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
    for (int oc = 0; oc < s.out_c; ++oc) yp[oc] = b ? b[oc] : T(0);
    for (int kh = 0; kh < s.kh; ++kh) {
        int t = oh + s.pad - kh;
        if (t < 0 || t % s.stride) continue;
        int ih = t / s.stride;
        if (ih >= s.in_h) continue;
        for (int kw = 0; kw < s.kw; ++kw) {
            int u = ow + s.pad - kw;
            if (u < 0 || u % s.stride) continue;
            int iw = u / s.stride;
            if (iw >= s.in_w) continue;
            const T* xp = x + (((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c;
            const T* wp = w + (((std::int64_t)kh * s.kw + kw) * s.in_c) * s.out_c;
            for (int ic = 0; ic < s.in_c; ++ic) {
                T xv = xp[ic];
                const T* wrow = wp + (std::int64_t)ic * s.out_c;
                for (int oc = 0; oc < s.out_c; ++oc) yp[oc] += xv * wrow[oc];
            }
        }
    }
}

template <typename T>
inline void deconv2d_dx_pixel(const T* gy, const T* w, T* gx,
                              const Deconv2dShape& s, int n, int ih, int iw) {
    T* gxp = gx + (((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c;
    for (int kh = 0; kh < s.kh; ++kh) {
        int oh = ih * s.stride - s.pad + kh;
        if (oh < 0 || oh >= s.out_h) continue;
        for (int kw = 0; kw < s.kw; ++kw) {
            int ow = iw * s.stride - s.pad + kw;
            if (ow < 0 || ow >= s.out_w) continue;
            const T* gyp = gy + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
            const T* wp = w + (((std::int64_t)kh * s.kw + kw) * s.in_c) * s.out_c;
            for (int ic = 0; ic < s.in_c; ++ic) {
                const T* wrow = wp + (std::int64_t)ic * s.out_c;
                T acc = T(0);
                for (int oc = 0; oc < s.out_c; ++oc) acc += gyp[oc] * wrow[oc];
                gxp[ic] += acc;
            }
        }
    }
}

template <typename T>
inline void deconv2d_dw_slab(const T* x, const T* gy, T* gw,
                             const Deconv2dShape& s, int kh, int kw, int ic) {
    T* gwp = gw + (((std::int64_t)kh * s.kw + kw) * s.in_c + ic) * s.out_c;
    for (int n = 0; n < s.n; ++n) {
        for (int ih = 0; ih < s.in_h; ++ih) {
            int oh = ih * s.stride - s.pad + kh;
            if (oh < 0 || oh >= s.out_h) continue;
            for (int iw = 0; iw < s.in_w; ++iw) {
                int ow = iw * s.stride - s.pad + kw;
                if (ow < 0 || ow >= s.out_w) continue;
                T xv = x[(((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.in_c + ic];
                const T* gyp = gy + (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.out_c;
                for (int oc = 0; oc < s.out_c; ++oc) gwp[oc] += xv * gyp[oc];
            }
        }
    }
}

template <typename T>
inline void maxpool_pixel(const T* x, T* y, std::int32_t* arg,
                          const Pool2dShape& s, int n, int oh, int ow) {
    std::int64_t base_out = (((std::int64_t)n * s.out_h + oh) * s.out_w + ow) * s.c;
    for (int c = 0; c < s.c; ++c) {
        T best = -std::numeric_limits<T>::infinity();
        std::int64_t best_idx = -1;
        for (int kh = 0; kh < s.window; ++kh) {
            int ih = oh * s.stride + kh;
            if (ih >= s.in_h) break;
            for (int kw = 0; kw < s.window; ++kw) {
                int iw = ow * s.stride + kw;
                if (iw >= s.in_w) break;
                std::int64_t idx = (((std::int64_t)n * s.in_h + ih) * s.in_w + iw) * s.c + c;
                // Strict > keeps the first occurrence in row-major scan.
                if (x[idx] > best) {
                    best = x[idx];
                    best_idx = idx;
                }
            }
        }
        y[base_out + c] = best;
        arg[base_out + c] = static_cast<std::int32_t>(best_idx);
    }
}

template <typename T>
inline void bilinear_pixel(const T* x, T* y, const ResizeShape& s, int n, int oy, int ox) {
    double sy = (oy + 0.5) * (double)s.in_h / s.out_h - 0.5;
    double sx = (ox + 0.5) * (double)s.in_w / s.out_w - 0.5;
    int y0 = (int)std::floor(sy), x0 = (int)std::floor(sx);
    double fy = sy - y0, fx = sx - x0;
    int y0c = std::clamp(y0, 0, s.in_h - 1), y1c = std::clamp(y0 + 1, 0, s.in_h - 1);
    int x0c = std::clamp(x0, 0, s.in_w - 1), x1c = std::clamp(x0 + 1, 0, s.in_w - 1);
    T w00 = (T)((1 - fy) * (1 - fx)), w01 = (T)((1 - fy) * fx);
    T w10 = (T)(fy * (1 - fx)), w11 = (T)(fy * fx);
    std::int64_t row = ((std::int64_t)n * s.in_h) * s.in_w;
    const T* p00 = x + ((row + (std::int64_t)y0c * s.in_w + x0c)) * s.c;
    const T* p01 = x + ((row + (std::int64_t)y0c * s.in_w + x1c)) * s.c;
    const T* p10 = x + ((row + (std::int64_t)y1c * s.in_w + x0c)) * s.c;
    const T* p11 = x + ((row + (std::int64_t)y1c * s.in_w + x1c)) * s.c;
    T* yp = y + (((std::int64_t)n * s.out_h + oy) * s.out_w + ox) * s.c;
    for (int c = 0; c < s.c; ++c)
        yp[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
}

}  // namespace detail

// ---------------------------------------------------------------- reference

namespace ref {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const Conv2dShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::conv2d_pixel(x, w, b, y, s, n, oh, ow);
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int ih = 0; ih < s.in_h; ++ih)
            for (int iw = 0; iw < s.in_w; ++iw) detail::conv2d_dx_pixel(gy, w, gx, s, n, ih, iw);
}

template <typename T>
void conv2d_backward_weight(const T* x, const T* gy, T* gw, const Conv2dShape& s) {
    for (int kh = 0; kh < s.kh; ++kh)
        for (int kw = 0; kw < s.kw; ++kw)
            for (int ic = 0; ic < s.in_c; ++ic) detail::conv2d_dw_slab(x, gy, gw, s, kh, kw, ic);
}

template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, int count, int out_c) {
    for (int oc = 0; oc < out_c; ++oc) {
        T acc = T(0);
        for (int i = 0; i < count; ++i) acc += gy[(std::int64_t)i * out_c + oc];
        gb[oc] += acc;
    }
}

template <typename T>
void deconv2d_forward(const T* x, const T* w, const T* b, T* y, const Deconv2dShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::deconv2d_pixel(x, w, b, y, s, n, oh, ow);
}

template <typename T>
void deconv2d_backward_input(const T* gy, const T* w, T* gx, const Deconv2dShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int ih = 0; ih < s.in_h; ++ih)
            for (int iw = 0; iw < s.in_w; ++iw) detail::deconv2d_dx_pixel(gy, w, gx, s, n, ih, iw);
}

template <typename T>
void deconv2d_backward_weight(const T* x, const T* gy, T* gw, const Deconv2dShape& s) {
    for (int kh = 0; kh < s.kh; ++kh)
        for (int kw = 0; kw < s.kw; ++kw)
            for (int ic = 0; ic < s.in_c; ++ic) detail::deconv2d_dw_slab(x, gy, gw, s, kh, kw, ic);
}

template <typename T>
void maxpool_forward(const T* x, T* y, std::int32_t* arg, const Pool2dShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::maxpool_pixel(x, y, arg, s, n, oh, ow);
}

template <typename T>
void bilinear_forward(const T* x, T* y, const ResizeShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int oy = 0; oy < s.out_h; ++oy)
            for (int ox = 0; ox < s.out_w; ++ox) detail::bilinear_pixel(x, y, s, n, oy, ox);
}

}  // namespace ref

// ------------------------------------------------------------------ OpenMP

namespace par {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::conv2d_pixel(x, w, b, y, s, n, oh, ow);
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int ih = 0; ih < s.in_h; ++ih)
            for (int iw = 0; iw < s.in_w; ++iw) detail::conv2d_dx_pixel(gy, w, gx, s, n, ih, iw);
}

template <typename T>
void conv2d_backward_weight(const T* x, const T* gy, T* gw, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int kh = 0; kh < s.kh; ++kh)
        for (int kw = 0; kw < s.kw; ++kw)
            for (int ic = 0; ic < s.in_c; ++ic) detail::conv2d_dw_slab(x, gy, gw, s, kh, kw, ic);
}

template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, int count, int out_c) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < out_c; ++oc) {
        T acc = T(0);
        for (int i = 0; i < count; ++i) acc += gy[(std::int64_t)i * out_c + oc];
        gb[oc] += acc;
    }
}

template <typename T>
void deconv2d_forward(const T* x, const T* w, const T* b, T* y, const Deconv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::deconv2d_pixel(x, w, b, y, s, n, oh, ow);
}

template <typename T>
void deconv2d_backward_input(const T* gy, const T* w, T* gx, const Deconv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int ih = 0; ih < s.in_h; ++ih)
            for (int iw = 0; iw < s.in_w; ++iw) detail::deconv2d_dx_pixel(gy, w, gx, s, n, ih, iw);
}

template <typename T>
void deconv2d_backward_weight(const T* x, const T* gy, T* gw, const Deconv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int kh = 0; kh < s.kh; ++kh)
        for (int kw = 0; kw < s.kw; ++kw)
            for (int ic = 0; ic < s.in_c; ++ic) detail::deconv2d_dw_slab(x, gy, gw, s, kh, kw, ic);
}

template <typename T>
void maxpool_forward(const T* x, T* y, std::int32_t* arg, const Pool2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int oh = 0; oh < s.out_h; ++oh)
            for (int ow = 0; ow < s.out_w; ++ow) detail::maxpool_pixel(x, y, arg, s, n, oh, ow);
}

template <typename T>
void bilinear_forward(const T* x, T* y, const ResizeShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n)
        for (int oy = 0; oy < s.out_h; ++oy)
            for (int ox = 0; ox < s.out_w; ++ox) detail::bilinear_pixel(x, y, s, n, oy, ox);
}

}  // namespace par

// ------------------------------------------------------- dispatch + serial-only

namespace kern {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, const Conv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::conv2d_forward(x, w, b, y, s)
                                      : ref::conv2d_forward(x, w, b, y, s);
}
template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::conv2d_backward_input(gy, w, gx, s)
                                      : ref::conv2d_backward_input(gy, w, gx, s);
}
template <typename T>
void conv2d_backward_weight(const T* x, const T* gy, T* gw, const Conv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::conv2d_backward_weight(x, gy, gw, s)
                                      : ref::conv2d_backward_weight(x, gy, gw, s);
}
template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, int count, int out_c) {
    exec_mode() == ExecMode::parallel ? par::conv2d_backward_bias(gy, gb, count, out_c)
                                      : ref::conv2d_backward_bias(gy, gb, count, out_c);
}
template <typename T>
void deconv2d_forward(const T* x, const T* w, const T* b, T* y, const Deconv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::deconv2d_forward(x, w, b, y, s)
                                      : ref::deconv2d_forward(x, w, b, y, s);
}
template <typename T>
void deconv2d_backward_input(const T* gy, const T* w, T* gx, const Deconv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::deconv2d_backward_input(gy, w, gx, s)
                                      : ref::deconv2d_backward_input(gy, w, gx, s);
}
template <typename T>
void deconv2d_backward_weight(const T* x, const T* gy, T* gw, const Deconv2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::deconv2d_backward_weight(x, gy, gw, s)
                                      : ref::deconv2d_backward_weight(x, gy, gw, s);
}
template <typename T>
void maxpool_forward(const T* x, T* y, std::int32_t* arg, const Pool2dShape& s) {
    exec_mode() == ExecMode::parallel ? par::maxpool_forward(x, y, arg, s)
                                      : ref::maxpool_forward(x, y, arg, s);
}
template <typename T>
void bilinear_forward(const T* x, T* y, const ResizeShape& s) {
    exec_mode() == ExecMode::parallel ? par::bilinear_forward(x, y, s)
                                      : ref::bilinear_forward(x, y, s);
}

// Scatter backwards stay serial in both modes: they are cheap next to the
// convolutions and a serial scatter needs no atomics to stay deterministic.

template <typename T>
void maxpool_backward(const T* gy, const std::int32_t* arg, T* gx, std::int64_t out_count) {
    for (std::int64_t i = 0; i < out_count; ++i) gx[arg[i]] += gy[i];
}

template <typename T>
void bilinear_backward(const T* gy, T* gx, const ResizeShape& s) {
    for (int n = 0; n < s.n; ++n)
        for (int oy = 0; oy < s.out_h; ++oy)
            for (int ox = 0; ox < s.out_w; ++ox) {
                double sy = (oy + 0.5) * (double)s.in_h / s.out_h - 0.5;
                double sx = (ox + 0.5) * (double)s.in_w / s.out_w - 0.5;
                int y0 = (int)std::floor(sy), x0 = (int)std::floor(sx);
                double fy = sy - y0, fx = sx - x0;
                int y0c = std::clamp(y0, 0, s.in_h - 1), y1c = std::clamp(y0 + 1, 0, s.in_h - 1);
                int x0c = std::clamp(x0, 0, s.in_w - 1), x1c = std::clamp(x0 + 1, 0, s.in_w - 1);
                T w00 = (T)((1 - fy) * (1 - fx)), w01 = (T)((1 - fy) * fx);
                T w10 = (T)(fy * (1 - fx)), w11 = (T)(fy * fx);
                std::int64_t row = ((std::int64_t)n * s.in_h) * s.in_w;
                const T* gyp = gy + (((std::int64_t)n * s.out_h + oy) * s.out_w + ox) * s.c;
                T* g00 = gx + (row + (std::int64_t)y0c * s.in_w + x0c) * s.c;
                T* g01 = gx + (row + (std::int64_t)y0c * s.in_w + x1c) * s.c;
                T* g10 = gx + (row + (std::int64_t)y1c * s.in_w + x0c) * s.c;
                T* g11 = gx + (row + (std::int64_t)y1c * s.in_w + x1c) * s.c;
                for (int c = 0; c < s.c; ++c) {
                    g00[c] += w00 * gyp[c];
                    g01[c] += w01 * gyp[c];
                    g10[c] += w10 * gyp[c];
                    g11[c] += w11 * gyp[c];
                }
            }
}

}  // namespace kern

}  // namespace vsal

#endif
