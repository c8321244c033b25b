#include "vsal/map.hpp"

#include <algorithm>
#include <cmath>

#include "vsal/kernels.hpp"

namespace vsal {

double map_sum(const GrayMap& m) {
    double acc = 0.0;
    for (double x : m.v) acc += x;
    return acc;
}

double map_max(const GrayMap& m) {
    double best = -std::numeric_limits<double>::infinity();
    for (double x : m.v) best = std::max(best, x);
    return best;
}

GrayMap normalize_distribution(const GrayMap& m) {
    GrayMap out = m;
    double s = map_sum(m);
    if (s <= 0.0) {
        double u = 1.0 / static_cast<double>(m.size());
        std::fill(out.v.begin(), out.v.end(), u);
        return out;
    }
    for (auto& x : out.v) x /= s;
    return out;
}

GrayMap resize_map(const GrayMap& m, int out_h, int out_w) {
    if (out_h == m.h && out_w == m.w) return m;
    GrayMap out(out_h, out_w);
    ResizeShape s{1, m.h, m.w, 1, out_h, out_w};
    ref::bilinear_forward(m.v.data(), out.v.data(), s);
    return out;
}

GrayMap gaussian_blur(const GrayMap& m, double sigma) {
    if (sigma <= 0.0) throw UsageError("gaussian_blur: sigma must be > 0");
    int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = w;
        ksum += w;
    }
    for (auto& w : k) w /= ksum;

    GrayMap tmp(m.h, m.w), out(m.h, m.w);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int xi = x + i;
                if (xi < 0 || xi >= m.w) continue;  // truncate at the border
                acc += k[i + radius] * m.at(y, xi);
            }
            tmp.at(y, x) = acc;
        }
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                int yi = y + i;
                if (yi < 0 || yi >= m.h) continue;
                acc += k[i + radius] * tmp.at(yi, x);
            }
            out.at(y, x) = acc;
        }
    return out;
}

}  // namespace vsal
