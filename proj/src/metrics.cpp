#include "vsal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace vsal {

namespace {

std::vector<std::size_t> inside_indices(const GrayMap& s, const std::vector<Fixation>& fixations) {
    std::vector<std::size_t> idx;
    for (const auto& f : fixations)
        if (f.x >= 0 && f.x < s.w && f.y >= 0 && f.y < s.h)
            idx.push_back(static_cast<std::size_t>(f.y) * s.w + f.x);
    return idx;
}

struct Moments {
    double mean = 0, stddev = 0;
};

Moments map_moments(const GrayMap& m) {
    Moments mo;
    for (double x : m.v) mo.mean += x;
    mo.mean /= static_cast<double>(m.size());
    double acc = 0;
    for (double x : m.v) acc += (x - mo.mean) * (x - mo.mean);
    mo.stddev = std::sqrt(acc / static_cast<double>(m.size()));
    return mo;
}

}  // namespace

double auc_judd(const GrayMap& saliency, const std::vector<Fixation>& fixations) {
    auto fix_idx = inside_indices(saliency, fixations);
    if (fix_idx.empty()) throw UsageError("auc_judd: no fixations inside the map");

    // Distinct fixated pixels are the positives.
    std::set<std::size_t> pos(fix_idx.begin(), fix_idx.end());
    std::int64_t np = static_cast<std::int64_t>(pos.size());
    std::int64_t nn = saliency.size() - np;
    if (nn == 0) return 0.5;  // every pixel fixated: ranking is undefined

    std::set<double, std::greater<double>> thresholds;
    for (std::size_t i : pos) thresholds.insert(saliency.v[i]);

    // ROC polyline. For each threshold two points: strictly-above counts,
    // then at-or-above counts, which reproduces the exhaustive-threshold
    // staircase including simultaneous (tied) jumps.
    double area = 0.0;
    double prev_fp = 0.0, prev_tp = 0.0;
    auto add_point = [&](double fp, double tp) {
        area += 0.5 * (tp + prev_tp) * (fp - prev_fp);
        prev_fp = fp;
        prev_tp = tp;
    };
    for (double th : thresholds) {
        std::int64_t tp_strict = 0, fp_strict = 0, tp_loose = 0, fp_loose = 0;
        for (std::size_t i = 0; i < saliency.v.size(); ++i) {
            double v = saliency.v[i];
            if (v < th) continue;
            bool is_pos = pos.count(i) != 0;
            if (v > th) (is_pos ? tp_strict : fp_strict)++;
            (is_pos ? tp_loose : fp_loose)++;
        }
        add_point(static_cast<double>(fp_strict) / nn, static_cast<double>(tp_strict) / np);
        add_point(static_cast<double>(fp_loose) / nn, static_cast<double>(tp_loose) / np);
    }
    add_point(1.0, 1.0);
    return area;
}

double nss(const GrayMap& saliency, const std::vector<Fixation>& fixations, bool* warned) {
    auto fix_idx = inside_indices(saliency, fixations);
    if (fix_idx.empty()) throw UsageError("nss: no fixations inside the map");
    Moments mo = map_moments(saliency);
    if (mo.stddev == 0.0) {
        if (warned) *warned = true;
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i : fix_idx) acc += (saliency.v[i] - mo.mean) / mo.stddev;
    return acc / static_cast<double>(fix_idx.size());
}

double cc_metric(const GrayMap& a, const GrayMap& b, bool* warned) {
    if (a.h != b.h || a.w != b.w)
        throw DimensionError("cc_metric: map extents differ, " + std::to_string(a.h) + "x" +
                             std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                             std::to_string(b.w));
    Moments ma = map_moments(a), mb = map_moments(b);
    if (ma.stddev == 0.0 || mb.stddev == 0.0) {
        if (warned) *warned = true;
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) acc += (a.v[i] - ma.mean) * (b.v[i] - mb.mean);
    return acc / (static_cast<double>(a.size()) * ma.stddev * mb.stddev);
}

double kl_metric(const GrayMap& ground, const GrayMap& predicted, double eps) {
    if (ground.h != predicted.h || ground.w != predicted.w)
        throw DimensionError("kl_metric: map extents differ");
    GrayMap g = normalize_distribution(ground);
    GrayMap s = normalize_distribution(predicted);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.v.size(); ++i)
        acc += g.v[i] * (std::log(std::max(g.v[i], eps)) - std::log(std::max(s.v[i], eps)));
    return acc;
}

namespace {

MetricSummary column_summary(const std::vector<FrameMetrics>& frames, double FrameMetrics::*field) {
    MetricSummary s;
    if (frames.empty()) return s;
    for (const auto& f : frames) s.mean += f.*field;
    s.mean /= static_cast<double>(frames.size());
    double acc = 0;
    for (const auto& f : frames) acc += (f.*field - s.mean) * (f.*field - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(frames.size()));
    return s;
}

void append_num(std::string& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    out += buf;
}

}  // namespace

MetricSummary MetricReport::auc_summary() const { return column_summary(frames, &FrameMetrics::auc); }
MetricSummary MetricReport::nss_summary() const { return column_summary(frames, &FrameMetrics::nss); }
MetricSummary MetricReport::cc_summary() const { return column_summary(frames, &FrameMetrics::cc); }
MetricSummary MetricReport::kl_summary() const { return column_summary(frames, &FrameMetrics::kl); }

std::string MetricReport::to_csv() const {
    std::string out = "frame,auc,nss,cc,kl\n";
    for (const auto& f : frames) {
        out += std::to_string(f.frame);
        for (double v : {f.auc, f.nss, f.cc, f.kl}) {
            out += ',';
            append_num(out, v);
        }
        out += '\n';
    }
    MetricSummary a = auc_summary(), n = nss_summary(), c = cc_summary(), k = kl_summary();
    out += "mean";
    for (double v : {a.mean, n.mean, c.mean, k.mean}) {
        out += ',';
        append_num(out, v);
    }
    out += "\nstd";
    for (double v : {a.stddev, n.stddev, c.stddev, k.stddev}) {
        out += ',';
        append_num(out, v);
    }
    out += '\n';
    return out;
}

}  // namespace vsal
