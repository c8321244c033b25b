#ifndef VSAL_SYNTHETIC_HPP
#define VSAL_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vsal/io.hpp"
#include "vsal/map.hpp"

namespace vsal {

// One moving shape. Negative position/direction fields mean "draw at
// generation time from the video seed".
struct ObjectSpec {
    std::string kind = "disc";  // disc | square | triangle
    double size = 12;           // half extent in pixels
    double speed = 0;           // pixels per frame
    double x0 = -1, y0 = -1;    // start center
    double direction = -1;      // radians
};

// Scene description for one rendered video. Fixations are sampled around
// object centers with per-object weight 1 + motion_bias * speed, so faster
// objects draw more gaze; scatter scales with object size.
struct SyntheticSceneSpec {
    int width = 128, height = 128;
    int frame_count = 48;
    double fps = 10;
    int subjects = 8;
    double fixation_scatter = 0.25;  // sigma as a fraction of object size
    double motion_bias = 2.0;
    int texture_cells = 8;          // value-noise grid resolution
    double texture_contrast = 0.3;  // background amplitude
    std::vector<ObjectSpec> objects;

    // Randomized-per-video object generation, used when objects is empty.
    int random_objects_min = 0, random_objects_max = 0;
    double random_size_min = 8, random_size_max = 16;
    double random_speed_min = 0, random_speed_max = 3;

    void validate() const;
};

struct SyntheticVideo {
    std::vector<RgbImage> frames;
    std::vector<Fixation> fixations;
    std::vector<std::vector<Box>> boxes;  // ranked: fastest (then largest) first
    std::vector<GrayMap> motion;          // exact per-pixel speed magnitude
    std::vector<ObjectSpec> objects;      // resolved parameters
};

// Deterministic in (spec, seed), byte for byte.
SyntheticVideo generate_synthetic(const SyntheticSceneSpec& spec, std::uint64_t seed);

// Key-value scene file; "object <kind> <size> <speed> [x0 y0 dir]" lines add
// explicit objects. Returns the spec plus the optional "videos" count.
SyntheticSceneSpec parse_scene_spec(const std::string& text, int* videos = nullptr);

// Renders `videos` variants (seed + index) into out_dir/v### subdirectories
// with manifest, frames, fixations, boxes and motion maps.
void write_synthetic_dataset(const SyntheticSceneSpec& spec, int videos, std::uint64_t seed,
                             const std::string& out_dir);

}  // namespace vsal

#endif
