#ifndef VSAL_MAP_HPP
#define VSAL_MAP_HPP

#include <cstdint>
#include <vector>

#include "vsal/common.hpp"

namespace vsal {

// Single-channel map at frame resolution; the working type of the metric,
// fixation and analysis code. Row-major, v[y*w + x].
struct GrayMap {
    int h = 0, w = 0;
    std::vector<double> v;

    GrayMap() = default;
    GrayMap(int h_, int w_, double fill = 0.0)
        : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, fill) {}

    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    std::int64_t size() const { return static_cast<std::int64_t>(v.size()); }
};

// A single gaze sample.
struct Fixation {
    int frame = 0;
    int x = 0, y = 0;
    int subject = 0;
};

double map_sum(const GrayMap& m);
double map_max(const GrayMap& m);

// Scales to total mass 1; an all-zero map becomes uniform.
GrayMap normalize_distribution(const GrayMap& m);

GrayMap resize_map(const GrayMap& m, int out_h, int out_w);

// Separable Gaussian blur with the kernel truncated at 4 sigma.
GrayMap gaussian_blur(const GrayMap& m, double sigma);

}  // namespace vsal

#endif
