#include "vsal/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "vsal/kernels.hpp"
#include "vsal/rng.hpp"

namespace fs = std::filesystem;

namespace vsal {

TensorF preprocess_frame(const RgbImage& frame, int input_size, const std::array<float, 3>& mean) {
    if (frame.h <= 0 || frame.w <= 0 || frame.v.size() != static_cast<std::size_t>(frame.h) * frame.w * 3)
        throw DataError("preprocess_frame: frame is not interleaved RGB");
    std::vector<float> scaled(static_cast<std::size_t>(frame.h) * frame.w * 3);
    for (std::size_t i = 0; i < frame.v.size(); ++i) scaled[i] = static_cast<float>(frame.v[i]) / 255.0f;

    std::vector<float> resized;
    if (frame.h == input_size && frame.w == input_size) {
        resized = std::move(scaled);
    } else {
        resized.resize(static_cast<std::size_t>(input_size) * input_size * 3);
        ResizeShape s{1, frame.h, frame.w, 3, input_size, input_size};
        ref::bilinear_forward(scaled.data(), resized.data(), s);
    }
    for (std::size_t i = 0; i < resized.size(); ++i) resized[i] -= mean[i % 3];
    return TensorF::from_data({1, input_size, input_size, 3}, std::move(resized));
}

std::array<float, 3> channel_mean(const std::vector<const RgbImage*>& frames) {
    double acc[3] = {0, 0, 0};
    std::int64_t count = 0;
    for (const RgbImage* f : frames) {
        for (std::size_t i = 0; i < f->v.size(); i += 3) {
            acc[0] += f->v[i];
            acc[1] += f->v[i + 1];
            acc[2] += f->v[i + 2];
        }
        count += static_cast<std::int64_t>(f->v.size() / 3);
    }
    std::array<float, 3> mean{0.f, 0.f, 0.f};
    if (count > 0)
        for (int c = 0; c < 3; ++c) mean[c] = static_cast<float>(acc[c] / (255.0 * count));
    return mean;
}

GrayMap fixations_to_map(const std::vector<Fixation>& fixations, int h, int w, double sigma,
                         bool* warned) {
    if (sigma <= 0) throw ConfigError("fixations_to_map: sigma must be > 0");
    GrayMap impulses(h, w);
    int placed = 0;
    for (const auto& f : fixations) {
        if (f.x < 0 || f.x >= w || f.y < 0 || f.y >= h) continue;
        impulses.at(f.y, f.x) += 1.0;
        ++placed;
    }
    if (placed == 0) {
        if (warned) *warned = true;
        return normalize_distribution(impulses);  // all-zero -> uniform
    }
    return normalize_distribution(gaussian_blur(impulses, sigma));
}

std::vector<int> segment_clips(int video_length, int clip_length, int overlap) {
    if (clip_length < 1) throw ConfigError("segment_clips: clip_length must be >= 1");
    if (overlap < 0 || overlap >= clip_length)
        throw ConfigError("segment_clips: overlap must lie in [0, clip_length), got " +
                          std::to_string(overlap));
    if (video_length < clip_length) return {};
    int stride = clip_length - overlap;
    std::vector<int> starts;
    for (int s = 0; s + clip_length <= video_length; s += stride) starts.push_back(s);
    return starts;
}

SplitIds split_dataset(std::vector<std::string> ids, double ratio_train, double ratio_val,
                       double ratio_test, std::uint64_t seed) {
    if (ids.empty()) throw UsageError("split_dataset: empty id set");
    double total = ratio_train + ratio_val + ratio_test;
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split_dataset: ratios must sum to 1, got " + std::to_string(total));
    Rng rng(seed);
    rng.shuffle(ids);
    std::size_t n = ids.size();
    std::size_t n_train = static_cast<std::size_t>(ratio_train * static_cast<double>(n));
    std::size_t n_val = static_cast<std::size_t>(ratio_val * static_cast<double>(n));
    std::size_t n_test = static_cast<std::size_t>(ratio_test * static_cast<double>(n));
    // Floor each count, hand the leftover to the training split.
    n_train += n - (n_train + n_val + n_test);
    SplitIds out;
    out.train.assign(ids.begin(), ids.begin() + n_train);
    out.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    out.test.assign(ids.begin() + n_train + n_val, ids.end());
    return out;
}

std::vector<Fixation> VideoEntry::frame_fixations(int frame) const {
    std::vector<Fixation> out;
    for (const auto& f : fixations)
        if (f.frame == frame) out.push_back(f);
    return out;
}

VideoEntry load_video(const std::string& dir, const std::string& id) {
    VideoEntry v;
    v.id = id;
    v.manifest = read_manifest((fs::path(dir) / "manifest.txt").string());
    fs::path fix = fs::path(dir) / "fixations.csv";
    if (fs::exists(fix)) v.fixations = read_fixations(fix.string());
    return v;
}

std::vector<VideoEntry> load_dataset(const std::string& root) {
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root);
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.txt"))
            ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("dataset root holds no video directories: " + root);
    std::vector<VideoEntry> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(load_video((fs::path(root) / id).string(), id));
    return out;
}

void validate_fixations(const VideoEntry& video) {
    int frames = video.manifest.frame_count();
    for (const auto& f : video.fixations) {
        if (f.frame < 0 || f.frame >= frames)
            throw DataError(video.id + ": fixation frame " + std::to_string(f.frame) +
                            " outside video length " + std::to_string(frames));
        if (video.manifest.width > 0 &&
            (f.x < 0 || f.x >= video.manifest.width || f.y < 0 || f.y >= video.manifest.height))
            throw DataError(video.id + ": fixation (" + std::to_string(f.x) + "," + std::to_string(f.y) +
                            ") outside frame bounds");
    }
}

}  // namespace vsal
