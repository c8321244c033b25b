#ifndef VSAL_METRICS_HPP
#define VSAL_METRICS_HPP

#include <string>
#include <vector>

#include "vsal/map.hpp"

namespace vsal {

// AUC (Judd variant): fixated pixels are positives, every other pixel a
// negative; thresholds sweep the saliency values at fixations; trapezoidal
// area. A constant map scores 0.5.
double auc_judd(const GrayMap& saliency, const std::vector<Fixation>& fixations);

// Normalized scanpath saliency: mean of the zero-mean unit-variance map at
// fixation locations. A zero-variance map scores 0 and sets *warned.
double nss(const GrayMap& saliency, const std::vector<Fixation>& fixations, bool* warned = nullptr);

// Pearson linear correlation of the two maps. A constant input scores 0 and
// sets *warned.
double cc_metric(const GrayMap& a, const GrayMap& b, bool* warned = nullptr);

// KL divergence between two distributions (maps are renormalized first),
// log terms floored at eps.
double kl_metric(const GrayMap& ground, const GrayMap& predicted, double eps = 1e-8);

struct FrameMetrics {
    int frame = 0;
    double auc = 0, nss = 0, cc = 0, kl = 0;
};

struct MetricSummary {
    double mean = 0, stddev = 0;
};

// Per-frame series plus mean/std summary of the four saliency metrics.
struct MetricReport {
    std::vector<FrameMetrics> frames;

    MetricSummary auc_summary() const;
    MetricSummary nss_summary() const;
    MetricSummary cc_summary() const;
    MetricSummary kl_summary() const;

    // "frame,auc,nss,cc,kl" rows plus mean and std summary rows.
    std::string to_csv() const;
};

}  // namespace vsal

#endif
