#include "vsal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "vsal/data.hpp"
#include "vsal/metrics.hpp"
#include "vsal/rng.hpp"

namespace vsal {

namespace {

// Frame offsets covered by a window, oldest offset last.
std::vector<int> window_offsets(const WindowSpec& w, double fps) {
    if (w.end_s <= w.start_s) throw ConfigError("temporal window must have end > start");
    int first = static_cast<int>(std::floor(w.start_s * fps)) + 1;
    int last = static_cast<int>(std::floor(w.end_s * fps));
    std::vector<int> offsets;
    for (int o = first; o <= last; ++o) offsets.push_back(o);
    if (offsets.empty())
        throw ConfigError("temporal window " + std::to_string(w.start_s) + "-" + std::to_string(w.end_s) +
                          "s covers no frames at fps " + std::to_string(fps));
    return offsets;
}

}  // namespace

std::vector<double> temporal_cc(const std::vector<GrayMap>& fixation_maps,
                                const std::vector<WindowSpec>& windows, double fps) {
    if (fps <= 0) throw ConfigError("temporal_cc: fps must be > 0");
    std::vector<double> out;
    for (const auto& w : windows) {
        auto offsets = window_offsets(w, fps);
        int max_offset = offsets.back();
        if (static_cast<int>(fixation_maps.size()) <= max_offset)
            throw UsageError("temporal_cc: video shorter than the " + std::to_string(w.end_s) +
                             "s window");
        double frame_acc = 0;
        int frame_count = 0;
        for (int c = max_offset; c < static_cast<int>(fixation_maps.size()); ++c) {
            double acc = 0;
            for (int o : offsets) acc += cc_metric(fixation_maps[c], fixation_maps[c - o]);
            frame_acc += acc / static_cast<double>(offsets.size());
            ++frame_count;
        }
        out.push_back(frame_acc / frame_count);
    }
    return out;
}

double one_vs_all_cc(const std::vector<std::vector<GrayMap>>& maps_by_subject) {
    std::size_t subjects = maps_by_subject.size();
    if (subjects < 2) throw UsageError("one_vs_all_cc: at least 2 subjects required");
    std::size_t frames = maps_by_subject[0].size();
    for (const auto& maps : maps_by_subject)
        if (maps.size() != frames) throw DimensionError("one_vs_all_cc: unequal frame counts per subject");
    double subj_acc = 0;
    for (std::size_t s = 0; s < subjects; ++s) {
        double frame_acc = 0;
        for (std::size_t t = 0; t < frames; ++t) {
            GrayMap pooled(maps_by_subject[0][t].h, maps_by_subject[0][t].w);
            for (std::size_t o = 0; o < subjects; ++o) {
                if (o == s) continue;
                for (std::size_t i = 0; i < pooled.v.size(); ++i) pooled.v[i] += maps_by_subject[o][t].v[i];
            }
            frame_acc += cc_metric(maps_by_subject[s][t], pooled);
        }
        subj_acc += frame_acc / static_cast<double>(frames);
    }
    return subj_acc / static_cast<double>(subjects);
}

namespace {

bool in_union(const std::vector<Box>& boxes, int k, int x, int y) {
    int n = std::min<int>(k, static_cast<int>(boxes.size()));
    for (int i = 0; i < n; ++i)
        if (boxes[i].contains(x, y)) return true;
    return false;
}

}  // namespace

ObjectHitResult object_hit_analysis(const std::vector<Fixation>& fixations,
                                    const std::vector<std::vector<Box>>& boxes_per_frame,
                                    const std::vector<int>& candidate_counts, int width, int height,
                                    double sigma, std::uint64_t seed, int baseline_trials) {
    ObjectHitResult result;
    result.candidate_counts = candidate_counts;
    int frames = static_cast<int>(boxes_per_frame.size());

    std::vector<std::vector<Fixation>> by_frame(static_cast<std::size_t>(frames));
    for (const auto& f : fixations)
        if (f.frame >= 0 && f.frame < frames) by_frame[static_cast<std::size_t>(f.frame)].push_back(f);

    for (int t = 0; t < frames; ++t)
        if (boxes_per_frame[static_cast<std::size_t>(t)].empty()) ++result.skipped_frames;

    // Thresholded fixation-map areas, shared across candidate counts.
    std::vector<std::vector<std::size_t>> area_pixels(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        if (boxes_per_frame[static_cast<std::size_t>(t)].empty()) continue;
        GrayMap m = fixations_to_map(by_frame[static_cast<std::size_t>(t)], height, width, sigma);
        double cut = 0.25 * map_max(m);
        for (std::size_t i = 0; i < m.v.size(); ++i)
            if (m.v[i] > cut) area_pixels[static_cast<std::size_t>(t)].push_back(i);
    }

    Rng rng(seed);
    for (int k : candidate_counts) {
        if (k < 1) throw ConfigError("object_hit_analysis: candidate counts must be >= 1");
        std::int64_t hits = 0, total = 0;
        double area_acc = 0;
        int area_frames = 0;
        for (int t = 0; t < frames; ++t) {
            const auto& boxes = boxes_per_frame[static_cast<std::size_t>(t)];
            if (boxes.empty()) continue;
            for (const auto& f : by_frame[static_cast<std::size_t>(t)]) {
                ++total;
                if (in_union(boxes, k, f.x, f.y)) ++hits;
            }
            std::int64_t union_area = 0, inside = 0;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    if (in_union(boxes, k, x, y)) ++union_area;
            for (std::size_t idx : area_pixels[static_cast<std::size_t>(t)]) {
                int y = static_cast<int>(idx) / width, x = static_cast<int>(idx) % width;
                if (in_union(boxes, k, x, y)) ++inside;
            }
            if (union_area > 0) {
                area_acc += static_cast<double>(inside) / static_cast<double>(union_area);
                ++area_frames;
            }
        }
        result.hit_proportion.push_back(total > 0 ? static_cast<double>(hits) / total : 0.0);
        result.area_proportion.push_back(area_frames > 0 ? area_acc / area_frames : 0.0);

        // Random placement of boxes with the same size distribution.
        double baseline_acc = 0;
        for (int trial = 0; trial < baseline_trials; ++trial) {
            std::int64_t rhits = 0, rtotal = 0;
            for (int t = 0; t < frames; ++t) {
                const auto& boxes = boxes_per_frame[static_cast<std::size_t>(t)];
                if (boxes.empty()) continue;
                std::vector<Box> random_boxes;
                int n = std::min<int>(k, static_cast<int>(boxes.size()));
                for (int i = 0; i < n; ++i) {
                    int bw = boxes[i].x1 - boxes[i].x0, bh = boxes[i].y1 - boxes[i].y0;
                    Box rb;
                    rb.x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, width - bw + 1))));
                    rb.y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, height - bh + 1))));
                    rb.x1 = rb.x0 + bw;
                    rb.y1 = rb.y0 + bh;
                    random_boxes.push_back(rb);
                }
                for (const auto& f : by_frame[static_cast<std::size_t>(t)]) {
                    ++rtotal;
                    if (in_union(random_boxes, n, f.x, f.y)) ++rhits;
                }
            }
            baseline_acc += rtotal > 0 ? static_cast<double>(rhits) / rtotal : 0.0;
        }
        result.random_baseline.push_back(baseline_trials > 0 ? baseline_acc / baseline_trials : 0.0);
    }
    return result;
}

MotionGroupResult motion_group_analysis(const std::vector<Fixation>& fixations,
                                        const std::vector<GrayMap>& motion_maps) {
    MotionGroupResult result;
    if (motion_maps.empty()) throw UsageError("motion_group_analysis: no motion maps");
    int h = motion_maps[0].h, w = motion_maps[0].w;
    std::int64_t per_frame = static_cast<std::int64_t>(h) * w;
    std::int64_t total = per_frame * static_cast<std::int64_t>(motion_maps.size());

    double lo = motion_maps[0].v[0], hi = lo;
    for (const auto& m : motion_maps)
        for (double v : m.v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    std::int64_t counted = 0;
    std::array<std::int64_t, 10> group_hits{};
    if (hi == lo) {
        // No ranking signal: report the uniform split and flag it.
        result.constant_warning = true;
        for (auto& p : result.proportions) p = 0.1;
        return result;
    }

    // Global descending rank; ties resolved by (frame, pixel) order.
    std::vector<std::int64_t> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    auto mag = [&](std::int64_t idx) {
        return motion_maps[static_cast<std::size_t>(idx / per_frame)].v[static_cast<std::size_t>(idx % per_frame)];
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int64_t a, std::int64_t b) { return mag(a) > mag(b); });
    std::vector<std::uint8_t> group_of(static_cast<std::size_t>(total));
    for (std::int64_t r = 0; r < total; ++r) {
        int g = static_cast<int>((r * 10) / total);
        group_of[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = static_cast<std::uint8_t>(g);
    }

    for (const auto& f : fixations) {
        if (f.frame < 0 || f.frame >= static_cast<int>(motion_maps.size())) continue;
        if (f.x < 0 || f.x >= w || f.y < 0 || f.y >= h) continue;
        std::int64_t idx = static_cast<std::int64_t>(f.frame) * per_frame + static_cast<std::int64_t>(f.y) * w + f.x;
        ++group_hits[group_of[static_cast<std::size_t>(idx)]];
        ++counted;
    }
    if (counted == 0) throw UsageError("motion_group_analysis: no fixations inside the maps");
    for (int g = 0; g < 10; ++g)
        result.proportions[static_cast<std::size_t>(g)] =
            static_cast<double>(group_hits[static_cast<std::size_t>(g)]) / static_cast<double>(counted);
    return result;
}

std::vector<GrayMap> frame_difference_motion(const std::vector<RgbImage>& frames) {
    if (frames.size() < 2) throw UsageError("frame_difference_motion: need at least 2 frames");
    std::vector<GrayMap> out;
    out.reserve(frames.size());
    auto luminance = [](const unsigned char* px) {
        return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    };
    for (std::size_t t = 1; t < frames.size(); ++t) {
        const RgbImage& a = frames[t - 1];
        const RgbImage& b = frames[t];
        GrayMap m(b.h, b.w);
        for (int y = 0; y < b.h; ++y)
            for (int x = 0; x < b.w; ++x)
                m.at(y, x) = std::abs(luminance(b.px(y, x)) - luminance(a.px(y, x)));
        out.push_back(std::move(m));
    }
    out.insert(out.begin(), out.front());  // frame 0 reuses frame 1's map
    return out;
}

std::string AnalysisReport::to_text() const {
    std::ostringstream os;
    char buf[128];
    os << "temporal attention correlation\n";
    for (std::size_t i = 0; i < windows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "  %.1f-%.1fs before: cc %.6f\n", windows[i].start_s,
                      windows[i].end_s, temporal_cc_values[i]);
        os << buf;
    }
    if (has_one_vs_all) {
        std::snprintf(buf, sizeof buf, "  one-vs-all baseline: cc %.6f\n", one_vs_all);
        os << buf;
    }
    if (has_object_hits) {
        os << "objectness vs attention\n";
        for (std::size_t i = 0; i < object_hits.candidate_counts.size(); ++i) {
            std::snprintf(buf, sizeof buf,
                          "  top-%d: fixation hit %.6f, area %.6f, random baseline %.6f\n",
                          object_hits.candidate_counts[i], object_hits.hit_proportion[i],
                          object_hits.area_proportion[i], object_hits.random_baseline[i]);
            os << buf;
        }
        if (object_hits.skipped_frames > 0)
            os << "  (skipped " << object_hits.skipped_frames << " frames without boxes)\n";
    }
    if (has_motion_groups) {
        os << "motion vs attention (fixation share per motion decile)\n";
        for (int g = 0; g < 10; ++g) {
            std::snprintf(buf, sizeof buf, "  decile %d: %.6f\n", g + 1,
                          motion_groups.proportions[static_cast<std::size_t>(g)]);
            os << buf;
        }
        if (motion_groups.constant_warning) os << "  (constant motion: uniform split reported)\n";
    }
    return os.str();
}

}  // namespace vsal
