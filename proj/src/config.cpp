#include "vsal/config.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "vsal/io.hpp"

namespace vsal {

void RunConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& what) {
        throw ConfigError("config: " + field + " " + what);
    };
    if (arch_scale != "full" && arch_scale != "tiny" && arch_scale != "custom")
        fail("arch_scale", "must be full, tiny or custom");
    if (input_size <= 0 || input_size % 32 != 0) fail("input_size", "must be a positive multiple of 32");
    if (channel_scale < 1) fail("channel_scale", "must be >= 1");
    if (fn_size < 1 || input_size % fn_size != 0) fail("fn_size", "must be >= 1 and divide input_size");
    if (fn_channels < 1) fail("fn_channels", "must be >= 1");
    if (grid_size < 1) fail("grid_size", "must be >= 1");
    if (boxes_per_cell < 1) fail("boxes_per_cell", "must be >= 1");
    if (class_count < 0) fail("class_count", "must be >= 0");
    if (gamma < 0.0 || gamma > 1.0) fail("gamma", "must lie in [0,1]");
    if (lambda < 0.0) fail("lambda", "must be >= 0");
    if (lr_omcnn <= 0.0) fail("lr_omcnn", "must be > 0");
    if (lr_clstm <= 0.0) fail("lr_clstm", "must be > 0");
    if (weight_decay < 0.0) fail("weight_decay", "must be >= 0");
    if (epochs_omcnn < 1) fail("epochs_omcnn", "must be >= 1");
    if (epochs_clstm < 1) fail("epochs_clstm", "must be >= 1");
    if (iters_omcnn < 0) fail("iters_omcnn", "must be >= 0");
    if (iters_clstm < 0) fail("iters_clstm", "must be >= 0");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (p_h < 0.0 || p_h >= 1.0) fail("p_h", "must lie in [0,1)");
    if (p_f < 0.0 || p_f >= 1.0) fail("p_f", "must lie in [0,1)");
    if (mc_count < 1) fail("mc_count", "must be >= 1");
    if (clip_length < 1) fail("clip_length", "must be >= 1");
    if (clip_overlap < 0 || clip_overlap >= clip_length)
        fail("clip_overlap", "must lie in [0, clip_length)");
    if (sigma_frac <= 0.0) fail("sigma_frac", "must be > 0");
    if (bn_momentum <= 0.0 || bn_momentum > 1.0) fail("bn_momentum", "must lie in (0,1]");
    if (val_interval < 1) fail("val_interval", "must be >= 1");
    if (std::abs(ratio_train + ratio_val + ratio_test - 1.0) > 1e-9)
        fail("ratio_train/ratio_val/ratio_test", "must sum to 1");
}

ArchTable RunConfig::arch() const {
    ArchTable a = default_arch(input_size, channel_scale, fn_size, fn_channels, gamma);
    a.grid_size = grid_size;
    a.boxes_per_cell = boxes_per_cell;
    a.class_count = class_count;
    a.validate();
    return a;
}

void apply_preset(RunConfig& cfg, const std::string& name) {
    if (name == "full") return;  // defaults are the full-scale values
    if (name == "tiny") {
        // CPU-sized preset: an eighth of the channels at 224 input. The
        // optimizer schedule is rescaled to match (higher rate, small batch,
        // short fixed iteration budget).
        cfg.input_size = 224;
        cfg.channel_scale = 8;
        cfg.fn_size = 14;
        cfg.fn_channels = 16;
        cfg.lr_omcnn = 2e-3;
        cfg.lr_clstm = 2e-3;
        cfg.batch_size = 2;
        cfg.iters_omcnn = 600;
        cfg.iters_clstm = 300;
        cfg.val_interval = 50;
        return;
    }
    if (name == "custom") return;  // caller sets every field explicitly
    throw ConfigError("config: unknown arch_scale preset '" + name + "'");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    for (const auto& [key, value] : pairs)
        if (key == "arch_scale") {
            cfg.arch_scale = value;
            apply_preset(cfg, value);
        }

    for (const auto& [key, value] : pairs) {
        std::istringstream vs(value);
        auto num = [&](auto& field) {
            if (!(vs >> field))
                throw ConfigError("config: bad value '" + value + "' for " + key);
        };
        if (key == "arch_scale") continue;
        else if (key == "input_size") num(cfg.input_size);
        else if (key == "channel_scale") num(cfg.channel_scale);
        else if (key == "fn_size") num(cfg.fn_size);
        else if (key == "fn_channels") num(cfg.fn_channels);
        else if (key == "grid_size") num(cfg.grid_size);
        else if (key == "boxes_per_cell") num(cfg.boxes_per_cell);
        else if (key == "class_count") num(cfg.class_count);
        else if (key == "gamma") num(cfg.gamma);
        else if (key == "lambda") num(cfg.lambda);
        else if (key == "lr_omcnn") num(cfg.lr_omcnn);
        else if (key == "lr_clstm") num(cfg.lr_clstm);
        else if (key == "weight_decay") num(cfg.weight_decay);
        else if (key == "epochs_omcnn") num(cfg.epochs_omcnn);
        else if (key == "epochs_clstm") num(cfg.epochs_clstm);
        else if (key == "iters_omcnn") num(cfg.iters_omcnn);
        else if (key == "iters_clstm") num(cfg.iters_clstm);
        else if (key == "batch_size") num(cfg.batch_size);
        else if (key == "p_h") num(cfg.p_h);
        else if (key == "p_f") num(cfg.p_f);
        else if (key == "mc_count") num(cfg.mc_count);
        else if (key == "clip_length") num(cfg.clip_length);
        else if (key == "clip_overlap") num(cfg.clip_overlap);
        else if (key == "seed") num(cfg.seed);
        else if (key == "sigma_frac") num(cfg.sigma_frac);
        else if (key == "bn_momentum") num(cfg.bn_momentum);
        else if (key == "val_interval") num(cfg.val_interval);
        else if (key == "data_dir") cfg.data_dir = value;
        else if (key == "train_dir") cfg.train_dir = value;
        else if (key == "val_dir") cfg.val_dir = value;
        else if (key == "ratio_train") num(cfg.ratio_train);
        else if (key == "ratio_val") num(cfg.ratio_val);
        else if (key == "ratio_test") num(cfg.ratio_test);
        else if (key == "resume") cfg.resume = value;
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::map<std::string, std::string> RunConfig::echo() const {
    auto fmt = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", x);
        return std::string(buf);
    };
    std::map<std::string, std::string> m;
    m["arch_scale"] = arch_scale;
    m["input_size"] = std::to_string(input_size);
    m["channel_scale"] = std::to_string(channel_scale);
    m["fn_size"] = std::to_string(fn_size);
    m["fn_channels"] = std::to_string(fn_channels);
    m["grid_size"] = std::to_string(grid_size);
    m["boxes_per_cell"] = std::to_string(boxes_per_cell);
    m["class_count"] = std::to_string(class_count);
    m["gamma"] = fmt(gamma);
    m["lambda"] = fmt(lambda);
    m["lr_omcnn"] = fmt(lr_omcnn);
    m["lr_clstm"] = fmt(lr_clstm);
    m["weight_decay"] = fmt(weight_decay);
    m["epochs_omcnn"] = std::to_string(epochs_omcnn);
    m["epochs_clstm"] = std::to_string(epochs_clstm);
    m["iters_omcnn"] = std::to_string(iters_omcnn);
    m["iters_clstm"] = std::to_string(iters_clstm);
    m["batch_size"] = std::to_string(batch_size);
    m["p_h"] = fmt(p_h);
    m["p_f"] = fmt(p_f);
    m["mc_count"] = std::to_string(mc_count);
    m["clip_length"] = std::to_string(clip_length);
    m["clip_overlap"] = std::to_string(clip_overlap);
    m["seed"] = std::to_string(seed);
    m["sigma_frac"] = fmt(sigma_frac);
    m["bn_momentum"] = fmt(bn_momentum);
    m["val_interval"] = std::to_string(val_interval);
    return m;
}

}  // namespace vsal
