#ifndef VSAL_DATA_HPP
#define VSAL_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vsal/io.hpp"
#include "vsal/map.hpp"
#include "vsal/tensor.hpp"

namespace vsal {

// Resize to input_size squared, scale to [0,1], remove the per-channel
// dataset mean. Output is (1, input_size, input_size, 3).
TensorF preprocess_frame(const RgbImage& frame, int input_size, const std::array<float, 3>& mean);

// Per-channel mean of a frame set in [0,1] units.
std::array<float, 3> channel_mean(const std::vector<const RgbImage*>& frames);

// Gaussian-blurred density of one frame's fixations, renormalized to sum 1.
// No fixations gives the uniform distribution and sets *warned.
GrayMap fixations_to_map(const std::vector<Fixation>& fixations, int h, int w, double sigma,
                         bool* warned = nullptr);

// Start indices of length-T windows with stride T-overlap; the trailing
// remainder is dropped.
std::vector<int> segment_clips(int video_length, int clip_length, int overlap);

struct SplitIds {
    std::vector<std::string> train, val, test;
};

// Deterministic shuffled split. Counts are floor(ratio * n) per split with
// the remainder assigned to the training split, so nothing is dropped.
SplitIds split_dataset(std::vector<std::string> ids, double ratio_train, double ratio_val,
                       double ratio_test, std::uint64_t seed);

// One source video on disk: manifest plus fixations, with optional boxes
// and motion maps next to them.
struct VideoEntry {
    std::string id;
    VideoManifest manifest;
    std::vector<Fixation> fixations;

    std::vector<Fixation> frame_fixations(int frame) const;
};

// Loads videos from a dataset root where each subdirectory holds
// manifest.txt and fixations.csv.
std::vector<VideoEntry> load_dataset(const std::string& root);
VideoEntry load_video(const std::string& dir, const std::string& id);

// Per-fixation bounds check against the video extent and length.
void validate_fixations(const VideoEntry& video);

}  // namespace vsal

#endif
