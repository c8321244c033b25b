#ifndef VSAL_ANALYSIS_HPP
#define VSAL_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vsal/io.hpp"
#include "vsal/map.hpp"

namespace vsal {

// Time range expressed in seconds before the current frame, (start, end].
struct WindowSpec {
    double start_s = 0;
    double end_s = 0.5;
};

inline std::vector<WindowSpec> default_windows() {
    return {{0.0, 0.5}, {0.5, 1.0}, {1.0, 1.5}, {1.5, 2.0}};
}

// Mean Pearson correlation between each frame's fixation map and the maps in
// each past window, averaged over all frames that have the full window.
std::vector<double> temporal_cc(const std::vector<GrayMap>& fixation_maps,
                                const std::vector<WindowSpec>& windows, double fps);

// Baseline inter-subject agreement: mean over subjects of the correlation
// between one subject's map and the pooled map of all the others, averaged
// over frames. maps_by_subject[s][t] is subject s's map for frame t.
double one_vs_all_cc(const std::vector<std::vector<GrayMap>>& maps_by_subject);

struct ObjectHitResult {
    std::vector<int> candidate_counts;
    std::vector<double> hit_proportion;     // fixations inside the top-k union
    std::vector<double> area_proportion;    // fixation area inside / union area
    std::vector<double> random_baseline;    // same-size boxes, random placement
    int skipped_frames = 0;                 // frames that had no boxes
};

ObjectHitResult object_hit_analysis(const std::vector<Fixation>& fixations,
                                    const std::vector<std::vector<Box>>& boxes_per_frame,
                                    const std::vector<int>& candidate_counts, int width, int height,
                                    double sigma, std::uint64_t seed, int baseline_trials = 100);

struct MotionGroupResult {
    std::array<double, 10> proportions{};
    bool constant_warning = false;
};

// Pixels of all frames ranked by motion magnitude and split into ten
// equal-size groups; reports the fraction of fixations per group.
MotionGroupResult motion_group_analysis(const std::vector<Fixation>& fixations,
                                        const std::vector<GrayMap>& motion_maps);

// Per-pixel |luminance difference| between consecutive frames; frame 0
// reuses frame 1's map. The fallback when no exact motion maps exist.
std::vector<GrayMap> frame_difference_motion(const std::vector<RgbImage>& frames);

struct AnalysisReport {
    std::vector<WindowSpec> windows;
    std::vector<double> temporal_cc_values;
    double one_vs_all = 0;
    bool has_one_vs_all = false;
    ObjectHitResult object_hits;
    bool has_object_hits = false;
    MotionGroupResult motion_groups;
    bool has_motion_groups = false;

    std::string to_text() const;
};

}  // namespace vsal

#endif
