#ifndef VSAL_CONFIG_HPP
#define VSAL_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>

#include "vsal/arch.hpp"

namespace vsal {

// Full run configuration. Defaults are the full-scale training values; the
// "tiny" preset rescales the architecture and shortens/raises the schedule
// for CPU-sized runs (see docs in the README and the preset body).
struct RunConfig {
    std::string arch_scale = "full";  // full | tiny | custom

    int input_size = 448;
    int channel_scale = 1;
    int fn_size = 28;
    int fn_channels = 128;
    int grid_size = 7;
    int boxes_per_cell = 2;
    int class_count = 20;

    double gamma = 0.5;
    double lambda = 0.5;

    double lr_omcnn = 1e-5;
    double lr_clstm = 1e-4;
    double weight_decay = 5e-6;
    int epochs_omcnn = 12;
    int epochs_clstm = 15;
    std::int64_t iters_omcnn = 0;  // 0: derive from epochs
    std::int64_t iters_clstm = 0;
    int batch_size = 12;

    double p_h = 0.25;
    double p_f = 0.25;
    int mc_count = 100;

    int clip_length = 16;
    int clip_overlap = 10;

    std::uint64_t seed = 1;
    double sigma_frac = 1.0 / 39.0;  // fixation blur sigma / frame width
    double bn_momentum = 0.1;
    int val_interval = 50;

    std::string data_dir;
    std::string train_dir;  // explicit split overrides the ratio split
    std::string val_dir;
    double ratio_train = 436.0 / 518.0;
    double ratio_val = 41.0 / 518.0;
    double ratio_test = 41.0 / 518.0;
    std::string resume;  // checkpoint to continue from

    void validate() const;
    ArchTable arch() const;

    // Echo for checkpoint headers, sorted by key.
    std::map<std::string, std::string> echo() const;
};

void apply_preset(RunConfig& cfg, const std::string& name);

// Flat "key = value" text, '#' comments. arch_scale applies its preset
// first; every other key then overrides field by field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace vsal

#endif
