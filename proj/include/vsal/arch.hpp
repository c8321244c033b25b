#ifndef VSAL_ARCH_HPP
#define VSAL_ARCH_HPP

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "vsal/common.hpp"

namespace vsal {

// One convolutional stage. Channel counts are stored at full scale and
// divided by channel_scale when the model is built.
struct ConvStage {
    int kernel = 3;
    int stride = 1;
    int channels = 0;
    bool pool_before = false;  // 2x2 stride-2 max pool on the stage input
    bool batch_norm = false;
    bool masked = false;  // objectness mask applied to the stage output
};

// Versioned layer schedule for the whole model: objectness and motion
// subnets, the two inference heads, and the convolutional LSTM. Serialized
// into checkpoints so they are self-describing; loading rejects mismatches.
struct ArchTable {
    int version = 1;

    int input_size = 448;
    int channel_scale = 1;
    int fn_size = 28;
    int fn_channels = 128;
    double gamma = 0.5;  // objectness mask degree
    int grid_size = 7;
    int boxes_per_cell = 2;
    int class_count = 20;

    std::vector<ConvStage> objectness;
    int fc1_units = 256;
    std::vector<ConvStage> motion;
    std::vector<int> inference_conv_channels;    // stride-1 3x3 stages
    std::vector<int> inference_deconv_channels;  // stride-2 4x4 stages, last is 1
    int feature_stage = 3;                       // inference conv index tapped as F_st

    int lstm_layers = 2;
    int lstm_kernel = 3;
    int lstm_head_channels = 64;  // first head deconv; second is fixed to 1

    double leak = 0.1;

    int head_channels() const { return 5 * boxes_per_cell + class_count; }
    int scaled(int channels) const { return std::max(1, channels / channel_scale); }
    int map_size() const { return 4 * fn_size; }  // two stride-2 deconvs above fn_size

    void validate() const {
        if (input_size <= 0 || input_size % 32 != 0)
            throw ConfigError("arch: input_size must be a positive multiple of 32 (five pooling stages), got " +
                              std::to_string(input_size));
        if (fn_size <= 0 || input_size % fn_size != 0)
            throw ConfigError("arch: fn_size must divide input_size, got " + std::to_string(fn_size) +
                              " for input " + std::to_string(input_size));
        if (gamma < 0.0 || gamma > 1.0)
            throw ConfigError("arch: gamma must lie in [0,1], got " + std::to_string(gamma));
        if (channel_scale < 1) throw ConfigError("arch: channel_scale must be >= 1");
        if (fn_channels < 1) throw ConfigError("arch: fn_channels must be >= 1");
        if (grid_size < 1 || boxes_per_cell < 1 || class_count < 0)
            throw ConfigError("arch: grid head fields must be positive");
        if (objectness.size() != 9) throw ConfigError("arch: objectness subnet needs 9 stages");
        if (motion.size() != 10) throw ConfigError("arch: motion subnet needs 10 stages");
        int pools = 0;
        for (const auto& st : objectness) pools += st.pool_before ? 1 : 0;
        if (pools != 5) throw ConfigError("arch: objectness subnet needs 5 pooling stages");
        if (inference_conv_channels.size() != 4 || inference_deconv_channels.size() != 2 ||
            inference_deconv_channels.back() != 1)
            throw ConfigError("arch: inference head needs 4 convs and 2 deconvs ending in 1 channel");
        if (feature_stage < 0 || feature_stage >= static_cast<int>(inference_conv_channels.size()))
            throw ConfigError("arch: feature_stage out of range");
        if (scaled(inference_conv_channels[feature_stage]) != fn_channels)
            throw ConfigError("arch: feature stage channels must scale to fn_channels, got " +
                              std::to_string(scaled(inference_conv_channels[feature_stage])) + " vs " +
                              std::to_string(fn_channels));
    }

    std::string serialize() const;
    static ArchTable parse(const std::vector<std::string>& lines);
};

inline std::string stage_str(const ConvStage& s) {
    std::ostringstream os;
    os << 'k' << s.kernel << " s" << s.stride << " c" << s.channels << " p" << (s.pool_before ? 1 : 0)
       << " n" << (s.batch_norm ? 1 : 0) << " m" << (s.masked ? 1 : 0);
    return os.str();
}

inline ConvStage stage_parse(const std::string& text) {
    ConvStage s;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        if (tok.size() < 2) throw DataError("arch: bad stage token '" + tok + "'");
        int v = std::stoi(tok.substr(1));
        switch (tok[0]) {
            case 'k': s.kernel = v; break;
            case 's': s.stride = v; break;
            case 'c': s.channels = v; break;
            case 'p': s.pool_before = v != 0; break;
            case 'n': s.batch_norm = v != 0; break;
            case 'm': s.masked = v != 0; break;
            default: throw DataError("arch: bad stage token '" + tok + "'");
        }
    }
    return s;
}

inline std::string ArchTable::serialize() const {
    std::ostringstream os;
    os << "arch.version " << version << '\n';
    os << "arch.input_size " << input_size << '\n';
    os << "arch.channel_scale " << channel_scale << '\n';
    os << "arch.fn_size " << fn_size << '\n';
    os << "arch.fn_channels " << fn_channels << '\n';
    os << "arch.gamma " << gamma << '\n';
    os << "arch.grid " << grid_size << ' ' << boxes_per_cell << ' ' << class_count << '\n';
    os << "arch.fc1_units " << fc1_units << '\n';
    for (const auto& st : objectness) os << "arch.objectness " << stage_str(st) << '\n';
    for (const auto& st : motion) os << "arch.motion " << stage_str(st) << '\n';
    os << "arch.inference_convs";
    for (int c : inference_conv_channels) os << ' ' << c;
    os << '\n';
    os << "arch.inference_deconvs";
    for (int c : inference_deconv_channels) os << ' ' << c;
    os << '\n';
    os << "arch.feature_stage " << feature_stage << '\n';
    os << "arch.lstm " << lstm_layers << ' ' << lstm_kernel << ' ' << lstm_head_channels << '\n';
    os << "arch.leak " << leak << '\n';
    return os.str();
}

inline ArchTable ArchTable::parse(const std::vector<std::string>& lines) {
    ArchTable a;
    a.objectness.clear();
    a.motion.clear();
    a.inference_conv_channels.clear();
    a.inference_deconv_channels.clear();
    for (const auto& line : lines) {
        std::istringstream is(line);
        std::string key;
        is >> key;
        std::string rest;
        std::getline(is, rest);
        if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
        std::istringstream rs(rest);
        if (key == "arch.version") rs >> a.version;
        else if (key == "arch.input_size") rs >> a.input_size;
        else if (key == "arch.channel_scale") rs >> a.channel_scale;
        else if (key == "arch.fn_size") rs >> a.fn_size;
        else if (key == "arch.fn_channels") rs >> a.fn_channels;
        else if (key == "arch.gamma") rs >> a.gamma;
        else if (key == "arch.grid") rs >> a.grid_size >> a.boxes_per_cell >> a.class_count;
        else if (key == "arch.fc1_units") rs >> a.fc1_units;
        else if (key == "arch.objectness") a.objectness.push_back(stage_parse(rest));
        else if (key == "arch.motion") a.motion.push_back(stage_parse(rest));
        else if (key == "arch.inference_convs") {
            int c;
            while (rs >> c) a.inference_conv_channels.push_back(c);
        } else if (key == "arch.inference_deconvs") {
            int c;
            while (rs >> c) a.inference_deconv_channels.push_back(c);
        } else if (key == "arch.feature_stage") rs >> a.feature_stage;
        else if (key == "arch.lstm") rs >> a.lstm_layers >> a.lstm_kernel >> a.lstm_head_channels;
        else if (key == "arch.leak") rs >> a.leak;
        else throw DataError("arch: unknown table line '" + line + "'");
    }
    a.validate();
    return a;
}

// The stock schedule. The objectness chain mirrors a compact 9-conv
// detection backbone (pool ahead of stages 2,3,4,5,7); the motion chain
// mirrors a 10-conv optical-flow encoder contracting at stages 1,2,3,5,7,9
// with its first six outputs objectness-masked.
inline ArchTable default_arch(int input_size, int channel_scale, int fn_size, int fn_channels,
                              double gamma = 0.5) {
    ArchTable a;
    a.input_size = input_size;
    a.channel_scale = channel_scale;
    a.fn_size = fn_size;
    a.fn_channels = fn_channels;
    a.gamma = gamma;

    const int obj_channels[9] = {16, 32, 64, 128, 256, 512, 1024, 1024, 1024};
    const bool obj_pool[9] = {false, true, true, true, true, false, true, false, false};
    for (int i = 0; i < 9; ++i)
        a.objectness.push_back({3, 1, obj_channels[i], obj_pool[i], true, false});

    const int mot_kernel[10] = {7, 5, 5, 3, 3, 3, 3, 3, 3, 3};
    const int mot_stride[10] = {2, 2, 2, 1, 2, 1, 2, 1, 2, 1};
    const int mot_channels[10] = {64, 128, 256, 256, 512, 512, 512, 512, 1024, 1024};
    for (int i = 0; i < 10; ++i)
        a.motion.push_back({mot_kernel[i], mot_stride[i], mot_channels[i], false, false, i < 6});

    a.inference_conv_channels = {256, 256, 128, fn_channels * channel_scale};
    a.inference_deconv_channels = {64, 1};
    a.feature_stage = 3;
    a.fc1_units = 256;
    a.lstm_head_channels = 64;
    a.validate();
    return a;
}

inline ArchTable arch_full() { return default_arch(448, 1, 28, 128); }
inline ArchTable arch_tiny() { return default_arch(224, 8, 14, 16); }

// Tap positions (0-based stage indices) whose outputs feed feature
// normalization.
inline const std::vector<int>& objectness_taps() {
    static const std::vector<int> taps = {3, 4, 5, 8};
    return taps;
}
inline const std::vector<int>& motion_taps() {
    static const std::vector<int> taps = {3, 5, 7, 9};
    return taps;
}

}  // namespace vsal

#endif
