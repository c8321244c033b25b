// Serial reference vs OpenMP kernels on shapes the networks actually run.
// Build with -DCMAKE_BUILD_TYPE=Release; run ./bench_kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "vsal/kernels.hpp"
#include "vsal/rng.hpp"

using namespace vsal;

namespace {

std::vector<float> random_buf(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
    return v;
}

Conv2dShape conv_shape(int n, int hw, int in_c, int k, int out_c, int stride) {
    Conv2dShape s;
    s.n = n;
    s.in_h = s.in_w = hw;
    s.in_c = in_c;
    s.kh = s.kw = k;
    s.out_c = out_c;
    s.stride = stride;
    int pad_total = std::max((hw / stride - 1) * stride + k - hw, 0);
    s.pad_top = s.pad_left = pad_total / 2;
    s.out_h = s.out_w = hw / stride;
    return s;
}

struct ConvData {
    Conv2dShape s;
    std::vector<float> x, w, b, y, gy, gx, gw;
    explicit ConvData(const Conv2dShape& shape) : s(shape) {
        x = random_buf((std::size_t)s.n * s.in_h * s.in_w * s.in_c, 1);
        w = random_buf((std::size_t)s.kh * s.kw * s.in_c * s.out_c, 2);
        b = random_buf((std::size_t)s.out_c, 3);
        y.assign((std::size_t)s.n * s.out_h * s.out_w * s.out_c, 0.f);
        gy = random_buf(y.size(), 4);
        gx.assign(x.size(), 0.f);
        gw.assign(w.size(), 0.f);
    }
};

// motion-subnet entry stage at the small preset: 224x224x6 -> 112x112x8
ConvData& entry_conv() {
    static ConvData d(conv_shape(1, 224, 6, 7, 8, 2));
    return d;
}

// mid-network stage: 28x28x32 -> 28x28x64
ConvData& mid_conv() {
    static ConvData d(conv_shape(1, 28, 32, 3, 64, 1));
    return d;
}

}  // namespace

static void bm_conv_entry_serial(benchmark::State& state) {
    auto& d = entry_conv();
    for (auto _ : state) {
        ref::conv2d_forward(d.x.data(), d.w.data(), d.b.data(), d.y.data(), d.s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv_entry_serial);

static void bm_conv_entry_parallel(benchmark::State& state) {
    auto& d = entry_conv();
    for (auto _ : state) {
        par::conv2d_forward(d.x.data(), d.w.data(), d.b.data(), d.y.data(), d.s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv_entry_parallel);

static void bm_conv_mid_serial(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        ref::conv2d_forward(d.x.data(), d.w.data(), d.b.data(), d.y.data(), d.s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv_mid_serial);

static void bm_conv_mid_parallel(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        par::conv2d_forward(d.x.data(), d.w.data(), d.b.data(), d.y.data(), d.s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_conv_mid_parallel);

static void bm_conv_backward_input_serial(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        std::fill(d.gx.begin(), d.gx.end(), 0.f);
        ref::conv2d_backward_input(d.gy.data(), d.w.data(), d.gx.data(), d.s);
    }
}
BENCHMARK(bm_conv_backward_input_serial);

static void bm_conv_backward_input_parallel(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        std::fill(d.gx.begin(), d.gx.end(), 0.f);
        par::conv2d_backward_input(d.gy.data(), d.w.data(), d.gx.data(), d.s);
    }
}
BENCHMARK(bm_conv_backward_input_parallel);

static void bm_conv_backward_weight_serial(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        std::fill(d.gw.begin(), d.gw.end(), 0.f);
        ref::conv2d_backward_weight(d.x.data(), d.gy.data(), d.gw.data(), d.s);
    }
}
BENCHMARK(bm_conv_backward_weight_serial);

static void bm_conv_backward_weight_parallel(benchmark::State& state) {
    auto& d = mid_conv();
    for (auto _ : state) {
        std::fill(d.gw.begin(), d.gw.end(), 0.f);
        par::conv2d_backward_weight(d.x.data(), d.gy.data(), d.gw.data(), d.s);
    }
}
BENCHMARK(bm_conv_backward_weight_parallel);

static void bm_deconv_serial(benchmark::State& state) {
    Deconv2dShape s;
    s.n = 1;
    s.in_h = s.in_w = 28;
    s.in_c = 16;
    s.kh = s.kw = 4;
    s.out_c = 8;
    s.stride = 2;
    s.pad = 1;
    s.out_h = s.out_w = 56;
    auto x = random_buf((std::size_t)s.in_h * s.in_w * s.in_c, 5);
    auto w = random_buf((std::size_t)s.kh * s.kw * s.in_c * s.out_c, 6);
    auto b = random_buf(s.out_c, 7);
    std::vector<float> y((std::size_t)s.out_h * s.out_w * s.out_c);
    for (auto _ : state) {
        ref::deconv2d_forward(x.data(), w.data(), b.data(), y.data(), s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_deconv_serial);

static void bm_deconv_parallel(benchmark::State& state) {
    Deconv2dShape s;
    s.n = 1;
    s.in_h = s.in_w = 28;
    s.in_c = 16;
    s.kh = s.kw = 4;
    s.out_c = 8;
    s.stride = 2;
    s.pad = 1;
    s.out_h = s.out_w = 56;
    auto x = random_buf((std::size_t)s.in_h * s.in_w * s.in_c, 5);
    auto w = random_buf((std::size_t)s.kh * s.kw * s.in_c * s.out_c, 6);
    auto b = random_buf(s.out_c, 7);
    std::vector<float> y((std::size_t)s.out_h * s.out_w * s.out_c);
    for (auto _ : state) {
        par::deconv2d_forward(x.data(), w.data(), b.data(), y.data(), s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_deconv_parallel);

static void bm_bilinear_serial(benchmark::State& state) {
    ResizeShape s{1, 112, 112, 1, 28, 28};
    auto x = random_buf((std::size_t)112 * 112, 8);
    std::vector<float> y((std::size_t)28 * 28);
    for (auto _ : state) {
        ref::bilinear_forward(x.data(), y.data(), s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_bilinear_serial);

static void bm_bilinear_parallel(benchmark::State& state) {
    ResizeShape s{1, 112, 112, 1, 28, 28};
    auto x = random_buf((std::size_t)112 * 112, 8);
    std::vector<float> y((std::size_t)28 * 28);
    for (auto _ : state) {
        par::bilinear_forward(x.data(), y.data(), s);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(bm_bilinear_parallel);

BENCHMARK_MAIN();
