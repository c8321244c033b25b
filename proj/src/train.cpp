#include "vsal/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "vsal/adam.hpp"
#include "vsal/checkpoint.hpp"
#include "vsal/clstm.hpp"
#include "vsal/data.hpp"
#include "vsal/losses.hpp"
#include "vsal/omcnn.hpp"
#include "vsal/synthetic.hpp"

namespace fs = std::filesystem;

namespace vsal {

namespace {

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string fmt_hex(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

TensorF stack_batch(const std::vector<TensorF>& items) {
    Shape s = items[0].shape();
    s[0] = static_cast<int>(items.size());
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(numel(s)));
    for (const auto& t : items) data.insert(data.end(), t.data().begin(), t.data().end());
    return TensorF::from_data(std::move(s), std::move(data));
}

// Frames decoded on demand with a bounded byte budget.
class FrameCache {
  public:
    explicit FrameCache(const std::vector<VideoEntry>* videos, std::size_t budget = 512u << 20)
        : videos_(videos), budget_(budget) {}

    const RgbImage& get(int video, int frame) {
        std::int64_t key = static_cast<std::int64_t>(video) * 1000000 + frame;
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        RgbImage img = load_frame((*videos_)[static_cast<std::size_t>(video)].manifest, frame);
        bytes_ += img.v.size();
        if (bytes_ > budget_ && !cache_.empty()) {
            // Simple pressure valve: drop everything and start over.
            bytes_ = img.v.size();
            cache_.clear();
        }
        return cache_.emplace(key, std::move(img)).first->second;
    }

  private:
    const std::vector<VideoEntry>* videos_;
    std::size_t budget_;
    std::size_t bytes_ = 0;
    std::unordered_map<std::int64_t, RgbImage> cache_;
};

struct FramePair {
    int video = 0;
    int frame = 0;  // current frame; partner is frame-1 (or itself at 0)
};

struct Dataset {
    std::vector<VideoEntry> videos;
    std::vector<int> train_ids, val_ids;

    std::vector<FramePair> pairs(const std::vector<int>& ids) const {
        std::vector<FramePair> out;
        for (int v : ids) {
            int n = videos[static_cast<std::size_t>(v)].manifest.frame_count();
            for (int f = 1; f < n; ++f) out.push_back({v, f});
        }
        return out;
    }
};

Dataset load_training_data(const RunConfig& cfg) {
    Dataset ds;
    if (!cfg.train_dir.empty()) {
        auto train = load_dataset(cfg.train_dir);
        for (auto& v : train) {
            ds.train_ids.push_back(static_cast<int>(ds.videos.size()));
            ds.videos.push_back(std::move(v));
        }
        if (!cfg.val_dir.empty()) {
            auto val = load_dataset(cfg.val_dir);
            for (auto& v : val) {
                ds.val_ids.push_back(static_cast<int>(ds.videos.size()));
                ds.videos.push_back(std::move(v));
            }
        }
    } else {
        if (cfg.data_dir.empty()) throw ConfigError("config: data_dir (or train_dir) is required");
        ds.videos = load_dataset(cfg.data_dir);
        std::vector<std::string> ids;
        for (const auto& v : ds.videos) ids.push_back(v.id);
        SplitIds split = split_dataset(ids, cfg.ratio_train, cfg.ratio_val, cfg.ratio_test, cfg.seed);
        auto index_of = [&](const std::string& id) {
            for (std::size_t i = 0; i < ds.videos.size(); ++i)
                if (ds.videos[i].id == id) return static_cast<int>(i);
            throw DataError("split id not found: " + id);
        };
        for (const auto& id : split.train) ds.train_ids.push_back(index_of(id));
        for (const auto& id : split.val) ds.val_ids.push_back(index_of(id));
    }
    if (ds.train_ids.empty()) throw DataError("training split is empty");
    for (const auto& v : ds.videos) validate_fixations(v);
    return ds;
}

std::array<float, 3> training_mean(const Dataset& ds, FrameCache& cache) {
    std::vector<const RgbImage*> frames;
    for (int v : ds.train_ids) {
        int n = ds.videos[static_cast<std::size_t>(v)].manifest.frame_count();
        for (int f = 0; f < n; ++f) frames.push_back(&cache.get(v, f));
    }
    return channel_mean(frames);
}

// Ground-truth distribution for one frame at the prediction extent.
GrayMap ground_map(const VideoEntry& video, int frame, int map_size, double sigma_frac) {
    int w = video.manifest.width, h = video.manifest.height;
    if (w <= 0 || h <= 0)
        throw DataError(video.id + ": manifest must carry a size line for training");
    double sigma = sigma_frac * w;
    GrayMap m = fixations_to_map(video.frame_fixations(frame), h, w, sigma);
    return normalize_distribution(resize_map(m, map_size, map_size));
}

TensorF map_to_tensor(const GrayMap& m) {
    std::vector<float> data(m.v.size());
    for (std::size_t i = 0; i < m.v.size(); ++i) data[i] = static_cast<float>(m.v[i]);
    return TensorF::from_data({1, m.h, m.w, 1}, std::move(data));
}

GrayMap tensor_to_map(const TensorF& t) {
    const Shape& s = t.shape();
    GrayMap m(s[1], s[2]);
    for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] = static_cast<double>(t.data()[i]);
    return m;
}

// ------------------------------------------------------- checkpoint helpers

void export_store(ParamStore<float>& store, Adam<float>* opt, Checkpoint& ckpt) {
    for (std::size_t k = 0; k < store.params.size(); ++k) {
        const auto& [name, t] = store.params[k];
        ckpt.add(name, t.shape(), t.data());
    }
    for (const auto& [name, buf] : store.buffers)
        ckpt.add("buf." + name, {static_cast<int>(buf->size())}, *buf);
    if (opt) {
        for (std::size_t k = 0; k < store.params.size(); ++k) {
            const auto& [name, t] = store.params[k];
            ckpt.add("opt.m." + name, t.shape(), opt->first_moment(k));
            ckpt.add("opt.v." + name, t.shape(), opt->second_moment(k));
        }
    }
}

void import_store(ParamStore<float>& store, Adam<float>* opt, const Checkpoint& ckpt) {
    for (std::size_t k = 0; k < store.params.size(); ++k) {
        auto& [name, t] = store.params[k];
        const auto* e = ckpt.find(name);
        if (!e) throw DataError("checkpoint missing tensor " + name);
        if (e->shape != t.shape())
            throw DimensionError("checkpoint tensor " + name + " shape " + shape_str(e->shape) +
                                 " != model shape " + shape_str(t.shape()));
        t.mutable_data() = e->data;
    }
    for (auto& [name, buf] : store.buffers) {
        const auto* e = ckpt.find("buf." + name);
        if (!e) throw DataError("checkpoint missing buffer " + name);
        *buf = e->data;
    }
    if (opt) {
        for (std::size_t k = 0; k < store.params.size(); ++k) {
            const auto& [name, t] = store.params[k];
            const auto* m = ckpt.find("opt.m." + name);
            const auto* v = ckpt.find("opt.v." + name);
            if (!m || !v) throw DataError("checkpoint missing optimizer state for " + name);
            opt->first_moment(k) = m->data;
            opt->second_moment(k) = v->data;
        }
    }
}

void require_same_arch(const ArchTable& a, const ArchTable& b, const std::string& what) {
    if (a.serialize() != b.serialize())
        throw ConfigError("architecture table mismatch: " + what);
}

std::array<float, 3> mean_from_meta(const Checkpoint& ckpt) {
    auto it = ckpt.meta.find("mean");
    if (it == ckpt.meta.end()) throw DataError("checkpoint missing dataset mean");
    std::array<float, 3> mean{};
    std::istringstream is(it->second);
    std::string tok;
    for (int c = 0; c < 3; ++c) {
        if (!(is >> tok)) throw DataError("checkpoint mean is malformed");
        mean[static_cast<std::size_t>(c)] = static_cast<float>(std::strtod(tok.c_str(), nullptr));
    }
    return mean;
}

void put_config_echo(Checkpoint& ckpt, const RunConfig& cfg) {
    for (const auto& [key, value] : cfg.echo()) ckpt.meta["config." + key] = value;
}

double config_echo_num(const Checkpoint& ckpt, const std::string& key, double fallback) {
    auto it = ckpt.meta.find("config." + key);
    if (it == ckpt.meta.end()) return fallback;
    return std::strtod(it->second.c_str(), nullptr);
}

// --------------------------------------------------------------- validation

// Deterministic subset: up to cap items evenly strided across the list.
template <typename T>
std::vector<T> strided_subset(const std::vector<T>& items, std::size_t cap) {
    if (items.size() <= cap) return items;
    std::vector<T> out;
    double step = static_cast<double>(items.size()) / static_cast<double>(cap);
    for (std::size_t i = 0; i < cap; ++i)
        out.push_back(items[static_cast<std::size_t>(i * step)]);
    return out;
}

}  // namespace

// ------------------------------------------------------------- train omcnn

void cmd_train_omcnn(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    Dataset ds = load_training_data(cfg);
    FrameCache cache(&ds.videos);

    ArchTable arch = cfg.arch();
    Rng init_rng = Rng::derive(cfg.seed, 0);
    OmCnn<float> model(arch, init_rng);
    AdamConfig acfg;
    acfg.learning_rate = cfg.lr_omcnn;
    acfg.weight_decay = cfg.weight_decay;
    Adam<float> adam(model.parameters(), acfg);
    Rng data_rng = Rng::derive(cfg.seed, 1);

    std::array<float, 3> mean{};
    std::int64_t start_step = 0;
    double best_val = std::numeric_limits<double>::infinity();
    if (!cfg.resume.empty()) {
        Checkpoint ckpt = Checkpoint::load(cfg.resume);
        if (ckpt.kind != "omcnn") throw DataError("resume: checkpoint kind is " + ckpt.kind);
        require_same_arch(ckpt.arch, arch, "resume checkpoint vs config");
        import_store(model.store(), &adam, ckpt);
        start_step = std::strtoll(ckpt.meta.at("step").c_str(), nullptr, 10);
        adam.set_step_count(start_step);
        data_rng.restore(ckpt.meta.at("rng"));
        mean = mean_from_meta(ckpt);
        auto bv = ckpt.meta.find("best_val");
        if (bv != ckpt.meta.end()) best_val = std::strtod(bv->second.c_str(), nullptr);
    } else {
        mean = training_mean(ds, cache);
    }

    auto train_pairs = ds.pairs(ds.train_ids);
    if (train_pairs.empty()) throw DataError("no frame pairs in the training split");
    auto val_pairs = strided_subset(ds.pairs(ds.val_ids), 64);
    std::int64_t iters = cfg.iters_omcnn > 0
                             ? cfg.iters_omcnn
                             : static_cast<std::int64_t>(cfg.epochs_omcnn) *
                                   std::max<std::int64_t>(1, static_cast<std::int64_t>(train_pairs.size()) /
                                                                 cfg.batch_size);
    int map_size = arch.map_size();

    // Ground maps are small; memoized across epochs.
    std::unordered_map<std::int64_t, TensorF> ground_cache;
    auto ground_for = [&](const FramePair& p) {
        std::int64_t key = static_cast<std::int64_t>(p.video) * 1000000 + p.frame;
        auto it = ground_cache.find(key);
        if (it != ground_cache.end()) return it->second;
        TensorF g = map_to_tensor(ground_map(ds.videos[static_cast<std::size_t>(p.video)], p.frame,
                                             map_size, cfg.sigma_frac));
        return ground_cache.emplace(key, std::move(g)).first->second;
    };
    auto frame_tensor = [&](int video, int frame) {
        return preprocess_frame(cache.get(video, frame), arch.input_size, mean);
    };

    auto validate = [&]() {
        if (val_pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
        NoGradGuard ng;
        double acc = 0;
        for (const auto& p : val_pairs) {
            auto out = model.forward(frame_tensor(p.video, p.frame - 1), frame_tensor(p.video, p.frame),
                                     NormMode::eval);
            acc += static_cast<double>(kl_divergence(ground_for(p), out.fine).item());
        }
        return acc / static_cast<double>(val_pairs.size());
    };

    auto save_ckpt = [&](const std::string& name, std::int64_t step, double val) {
        Checkpoint ckpt;
        ckpt.kind = "omcnn";
        ckpt.arch = arch;
        ckpt.meta["step"] = std::to_string(step);
        ckpt.meta["rng"] = data_rng.state();
        ckpt.meta["mean"] = fmt_hex(mean[0]) + " " + fmt_hex(mean[1]) + " " + fmt_hex(mean[2]);
        if (std::isfinite(val)) ckpt.meta["best_val"] = fmt_g(val);
        put_config_echo(ckpt, cfg);
        export_store(model.store(), &adam, ckpt);
        ckpt.save((fs::path(out_dir) / name).string());
    };

    std::ofstream log((fs::path(out_dir) / "train_omcnn_log.csv").string(), std::ios::app);
    double last_val = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t step = start_step + 1; step <= iters; ++step) {
        std::vector<TensorF> prev, cur, ground;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const FramePair& p = train_pairs[data_rng.below(train_pairs.size())];
            prev.push_back(frame_tensor(p.video, p.frame - 1));
            cur.push_back(frame_tensor(p.video, p.frame));
            ground.push_back(ground_for(p));
        }
        auto out = model.forward(stack_batch(prev), stack_batch(cur), NormMode::train);
        TensorF loss = om_cnn_loss(stack_batch(ground), out.fine, out.coarse, cfg.lambda);
        double loss_value = static_cast<double>(loss.item());
        if (!std::isfinite(loss_value))
            throw NumericError("training loss is not finite at step " + std::to_string(step));
        loss.backward();
        adam.step();

        if (step % cfg.val_interval == 0) {
            last_val = validate();
            if (std::isfinite(last_val) && last_val < best_val) {
                best_val = last_val;
                save_ckpt("omcnn_best.ckpt", step, best_val);
            }
        }
        log << step << ',' << fmt_g(loss_value) << ',' << fmt_g(last_val) << '\n';
    }
    log.flush();
    save_ckpt("omcnn.ckpt", iters, best_val);
    if (!fs::exists(fs::path(out_dir) / "omcnn_best.ckpt")) save_ckpt("omcnn_best.ckpt", iters, best_val);
}

// ------------------------------------------------------------- train clstm

void cmd_train_clstm(const RunConfig& cfg, const std::string& omcnn_ckpt, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    Checkpoint base = Checkpoint::load(omcnn_ckpt);
    if (base.kind != "omcnn") throw DataError("train-clstm: expected an omcnn checkpoint");
    ArchTable arch = cfg.arch();
    require_same_arch(base.arch, arch, "omcnn checkpoint vs config");
    std::array<float, 3> mean = mean_from_meta(base);

    Rng dummy(0);
    OmCnn<float> extractor(arch, dummy);
    import_store(extractor.store(), nullptr, base);
    extractor.set_trainable(false);

    Dataset ds = load_training_data(cfg);
    FrameCache cache(&ds.videos);

    struct ClipRef {
        int video;
        int start;
    };
    auto collect_clips = [&](const std::vector<int>& ids) {
        std::vector<ClipRef> clips;
        for (int v : ids) {
            int n = ds.videos[static_cast<std::size_t>(v)].manifest.frame_count();
            for (int s : segment_clips(n, cfg.clip_length, cfg.clip_overlap)) clips.push_back({v, s});
        }
        return clips;
    };
    auto train_clips = collect_clips(ds.train_ids);
    if (train_clips.empty()) throw DataError("no clips in the training split");
    auto val_clips = strided_subset(collect_clips(ds.val_ids), 8);

    // The extractor is fixed, so per-frame features and ground maps are
    // computed once.
    int map_size = arch.map_size();
    std::unordered_map<std::int64_t, TensorF> feature_cache, ground_cache;
    auto features_for = [&](int video, int frame) {
        std::int64_t key = static_cast<std::int64_t>(video) * 1000000 + frame;
        auto it = feature_cache.find(key);
        if (it != feature_cache.end()) return it->second;
        NoGradGuard ng;
        int prev = std::max(frame - 1, 0);
        auto prev_t = preprocess_frame(cache.get(video, prev), arch.input_size, mean);
        auto cur_t = preprocess_frame(cache.get(video, frame), arch.input_size, mean);
        auto out = extractor.forward(prev_t, cur_t, NormMode::eval);
        return feature_cache.emplace(key, out.features).first->second;
    };
    auto ground_for = [&](int video, int frame) {
        std::int64_t key = static_cast<std::int64_t>(video) * 1000000 + frame;
        auto it = ground_cache.find(key);
        if (it != ground_cache.end()) return it->second;
        TensorF g = map_to_tensor(
            ground_map(ds.videos[static_cast<std::size_t>(video)], frame, map_size, cfg.sigma_frac));
        return ground_cache.emplace(key, std::move(g)).first->second;
    };

    Rng lstm_init = Rng::derive(cfg.seed, 2);
    ConvLstm<float> lstm(arch, lstm_init);
    AdamConfig acfg;
    acfg.learning_rate = cfg.lr_clstm;
    acfg.weight_decay = cfg.weight_decay;
    Adam<float> adam(lstm.parameters(), acfg);
    Rng data_rng = Rng::derive(cfg.seed, 3);

    std::int64_t start_step = 0;
    double best_val = std::numeric_limits<double>::infinity();
    if (!cfg.resume.empty()) {
        Checkpoint ckpt = Checkpoint::load(cfg.resume);
        if (ckpt.kind != "clstm") throw DataError("resume: checkpoint kind is " + ckpt.kind);
        require_same_arch(ckpt.arch, arch, "resume checkpoint vs config");
        import_store(lstm.store(), &adam, ckpt);
        start_step = std::strtoll(ckpt.meta.at("step").c_str(), nullptr, 10);
        adam.set_step_count(start_step);
        data_rng.restore(ckpt.meta.at("rng"));
        auto bv = ckpt.meta.find("best_val");
        if (bv != ckpt.meta.end()) best_val = std::strtod(bv->second.c_str(), nullptr);
    }

    std::int64_t iters =
        cfg.iters_clstm > 0 ? cfg.iters_clstm
                            : static_cast<std::int64_t>(cfg.epochs_clstm) *
                                  static_cast<std::int64_t>(train_clips.size());

    auto clip_loss = [&](const ClipRef& c, LstmMode mode, Rng& rng) {
        std::vector<TensorF> features, grounds;
        for (int i = 0; i < cfg.clip_length; ++i) {
            features.push_back(features_for(c.video, c.start + i));
            grounds.push_back(ground_for(c.video, c.start + i));
        }
        auto maps = lstm.forward(features, mode, cfg.p_h, cfg.p_f, cfg.mc_count, rng);
        return clstm_loss(maps, grounds);
    };

    auto validate = [&]() {
        if (val_clips.empty()) return std::numeric_limits<double>::quiet_NaN();
        NoGradGuard ng;
        Rng unused(0);
        double acc = 0;
        for (const auto& c : val_clips)
            acc += static_cast<double>(clip_loss(c, LstmMode::deterministic, unused).item());
        return acc / static_cast<double>(val_clips.size());
    };

    auto save_ckpt = [&](const std::string& name, std::int64_t step, double val) {
        Checkpoint ckpt;
        ckpt.kind = "clstm";
        ckpt.arch = arch;
        ckpt.meta["step"] = std::to_string(step);
        ckpt.meta["rng"] = data_rng.state();
        ckpt.meta["mean"] = base.meta.at("mean");
        if (std::isfinite(val)) ckpt.meta["best_val"] = fmt_g(val);
        put_config_echo(ckpt, cfg);
        export_store(lstm.store(), &adam, ckpt);
        ckpt.save((fs::path(out_dir) / name).string());
    };

    std::ofstream log((fs::path(out_dir) / "train_clstm_log.csv").string(), std::ios::app);
    double last_val = std::numeric_limits<double>::quiet_NaN();
    for (std::int64_t step = start_step + 1; step <= iters; ++step) {
        const ClipRef& c = train_clips[data_rng.below(train_clips.size())];
        TensorF loss = clip_loss(c, LstmMode::train, data_rng);
        double loss_value = static_cast<double>(loss.item());
        if (!std::isfinite(loss_value))
            throw NumericError("training loss is not finite at step " + std::to_string(step));
        loss.backward();
        adam.step();
        if (step % cfg.val_interval == 0) {
            last_val = validate();
            if (std::isfinite(last_val) && last_val < best_val) {
                best_val = last_val;
                save_ckpt("clstm_best.ckpt", step, best_val);
            }
        }
        log << step << ',' << fmt_g(loss_value) << ',' << fmt_g(last_val) << '\n';
    }
    log.flush();
    save_ckpt("clstm.ckpt", iters, best_val);
    if (!fs::exists(fs::path(out_dir) / "clstm_best.ckpt")) save_ckpt("clstm_best.ckpt", iters, best_val);
}

// ----------------------------------------------------------------- predict

void cmd_predict(const PredictOptions& opts) {
    Checkpoint om = Checkpoint::load(opts.omcnn_ckpt);
    Checkpoint cl = Checkpoint::load(opts.clstm_ckpt);
    if (om.kind != "omcnn" || cl.kind != "clstm")
        throw DataError("predict: need an omcnn checkpoint and a clstm checkpoint");
    require_same_arch(om.arch, cl.arch, "omcnn vs clstm checkpoints");
    if (opts.mode != "deterministic" && opts.mode != "mc")
        throw ConfigError("predict: mode must be deterministic or mc");

    ArchTable arch = om.arch;
    Rng dummy(0);
    OmCnn<float> model(arch, dummy);
    import_store(model.store(), nullptr, om);
    model.set_trainable(false);
    ConvLstm<float> lstm(arch, dummy);
    import_store(lstm.store(), nullptr, cl);
    for (auto& [name, t] : lstm.store().params) t.set_requires_grad(false);
    std::array<float, 3> mean = mean_from_meta(om);

    VideoManifest manifest = read_manifest(opts.manifest_path);
    if (manifest.frame_count() < 2) throw DataError("predict: video must have at least 2 frames");

    std::vector<RgbImage> frames;
    std::vector<std::string> errors;
    for (int i = 0; i < manifest.frame_count(); ++i) {
        try {
            frames.push_back(load_frame(manifest, i));
        } catch (const Error& e) {
            errors.push_back(e.what());
        }
    }
    fs::create_directories(opts.out_dir);
    if (!errors.empty()) {
        std::string list;
        for (const auto& e : errors) list += e + "\n";
        write_text_file((fs::path(opts.out_dir) / "errors.txt").string(), list);
        throw DataError("predict: " + std::to_string(errors.size()) +
                        " frames unreadable; see errors.txt");
    }

    NoGradGuard ng;
    std::vector<TensorF> features;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::size_t prev = i == 0 ? 0 : i - 1;  // first frame pairs with itself
        auto out = model.forward(preprocess_frame(frames[prev], arch.input_size, mean),
                                 preprocess_frame(frames[i], arch.input_size, mean), NormMode::eval);
        features.push_back(out.features);
    }

    double p_h = config_echo_num(cl, "p_h", 0.25);
    double p_f = config_echo_num(cl, "p_f", 0.25);
    int mc = opts.mc_count > 0 ? opts.mc_count : static_cast<int>(config_echo_num(cl, "mc_count", 100));
    Rng mask_rng = Rng::derive(opts.seed, 7);
    auto maps = lstm.forward(features, opts.mode == "mc" ? LstmMode::mc_inference : LstmMode::deterministic,
                             p_h, p_f, mc, mask_rng);

    for (std::size_t i = 0; i < maps.size(); ++i) {
        GrayMap m = tensor_to_map(maps[i]);
        char name[32];
        std::snprintf(name, sizeof name, "pred_%06zu.pgm", i);
        write_pgm((fs::path(opts.out_dir) / name).string(), m);
        if (opts.overlay) {
            GrayMap up = resize_map(m, frames[i].h, frames[i].w);
            double peak = map_max(up);
            RgbImage blend = frames[i];
            for (int y = 0; y < blend.h; ++y)
                for (int x = 0; x < blend.w; ++x) {
                    double a = peak > 0 ? up.at(y, x) / peak : 0.0;
                    unsigned char* px = blend.px(y, x);
                    px[0] = static_cast<unsigned char>(std::clamp(px[0] * (1 - a) + 255 * a, 0.0, 255.0));
                    px[1] = static_cast<unsigned char>(px[1] * (1 - a));
                    px[2] = static_cast<unsigned char>(px[2] * (1 - a));
                }
            std::snprintf(name, sizeof name, "overlay_%06zu.ppm", i);
            write_ppm((fs::path(opts.out_dir) / name).string(), blend);
        }
    }
}

// -------------------------------------------------------------------- eval

MetricReport cmd_eval(const EvalOptions& opts) {
    VideoManifest manifest = read_manifest(opts.manifest_path);
    int frames = manifest.frame_count();
    int w = manifest.width, h = manifest.height;
    if (w <= 0 || h <= 0) {
        RgbImage first = load_frame(manifest, 0);
        w = first.w;
        h = first.h;
    }
    std::vector<std::string> pred_files;
    for (const auto& entry : fs::directory_iterator(opts.pred_dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("pred_", 0) == 0 && entry.path().extension() == ".pgm")
            pred_files.push_back(entry.path().string());
    }
    std::sort(pred_files.begin(), pred_files.end());
    if (static_cast<int>(pred_files.size()) != frames)
        throw UsageError("eval: " + std::to_string(pred_files.size()) + " prediction maps vs " +
                         std::to_string(frames) + " frames");

    auto fixations = read_fixations(opts.fixations_path);
    std::vector<std::vector<Fixation>> by_frame(static_cast<std::size_t>(frames));
    for (const auto& f : fixations)
        if (f.frame >= 0 && f.frame < frames) by_frame[static_cast<std::size_t>(f.frame)].push_back(f);

    double sigma = opts.sigma_frac * w;
    MetricReport report;
    for (int t = 0; t < frames; ++t) {
        const auto& fix = by_frame[static_cast<std::size_t>(t)];
        if (fix.empty()) continue;  // AUC/NSS undefined without fixations
        GrayMap pred = resize_map(read_pgm(pred_files[static_cast<std::size_t>(t)]), h, w);
        GrayMap ground = fixations_to_map(fix, h, w, sigma);
        FrameMetrics fm;
        fm.frame = t;
        fm.auc = auc_judd(pred, fix);
        fm.nss = nss(pred, fix);
        fm.cc = cc_metric(pred, ground);
        fm.kl = kl_metric(ground, pred);
        report.frames.push_back(fm);
    }
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        write_text_file((fs::path(opts.out_dir) / "metrics.csv").string(), report.to_csv());
    }
    return report;
}

// ----------------------------------------------------------------- analyze

AnalysisReport cmd_analyze(const AnalyzeOptions& opts) {
    VideoManifest manifest = read_manifest(opts.manifest_path);
    int frames = manifest.frame_count();
    int w = manifest.width, h = manifest.height;
    if (w <= 0 || h <= 0) {
        RgbImage first = load_frame(manifest, 0);
        w = first.w;
        h = first.h;
    }
    auto fixations = read_fixations(opts.fixations_path);
    std::vector<std::vector<Fixation>> by_frame(static_cast<std::size_t>(frames));
    for (const auto& f : fixations)
        if (f.frame >= 0 && f.frame < frames) by_frame[static_cast<std::size_t>(f.frame)].push_back(f);

    double sigma = opts.sigma_frac * w;
    std::vector<GrayMap> fix_maps;
    fix_maps.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t)
        fix_maps.push_back(fixations_to_map(by_frame[static_cast<std::size_t>(t)], h, w, sigma));

    AnalysisReport report;
    report.windows = default_windows();
    report.temporal_cc_values = temporal_cc(fix_maps, report.windows, manifest.fps);

    std::vector<int> subjects;
    for (const auto& f : fixations)
        if (std::find(subjects.begin(), subjects.end(), f.subject) == subjects.end())
            subjects.push_back(f.subject);
    std::sort(subjects.begin(), subjects.end());
    if (subjects.size() >= 2) {
        std::vector<std::vector<GrayMap>> per_subject;
        for (int s : subjects) {
            std::vector<GrayMap> maps;
            for (int t = 0; t < frames; ++t) {
                std::vector<Fixation> own;
                for (const auto& f : by_frame[static_cast<std::size_t>(t)])
                    if (f.subject == s) own.push_back(f);
                maps.push_back(fixations_to_map(own, h, w, sigma));
            }
            per_subject.push_back(std::move(maps));
        }
        report.one_vs_all = one_vs_all_cc(per_subject);
        report.has_one_vs_all = true;
    }

    if (!opts.boxes_path.empty()) {
        auto boxes = read_boxes(opts.boxes_path, frames);
        report.object_hits = object_hit_analysis(fixations, boxes, opts.candidate_counts, w, h, sigma,
                                                 opts.seed);
        report.has_object_hits = true;
    }

    std::vector<GrayMap> motion;
    if (!opts.motion_dir.empty()) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(opts.motion_dir))
            if (entry.path().extension() == ".pgm") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        if (static_cast<int>(files.size()) != frames)
            throw UsageError("analyze: motion map count != frame count");
        for (const auto& f : files) motion.push_back(read_pgm(f));
    } else if (frames >= 2) {
        std::vector<RgbImage> imgs;
        for (int t = 0; t < frames; ++t) imgs.push_back(load_frame(manifest, t));
        motion = frame_difference_motion(imgs);
    }
    if (!motion.empty()) {
        report.motion_groups = motion_group_analysis(fixations, motion);
        report.has_motion_groups = true;
    }

    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        write_text_file((fs::path(opts.out_dir) / "analysis.txt").string(), report.to_text());
        std::string cc_csv = "window_start_s,window_end_s,cc\n";
        for (std::size_t i = 0; i < report.windows.size(); ++i)
            cc_csv += fmt_g(report.windows[i].start_s) + "," + fmt_g(report.windows[i].end_s) + "," +
                      fmt_g(report.temporal_cc_values[i]) + "\n";
        write_text_file((fs::path(opts.out_dir) / "temporal_cc.csv").string(), cc_csv);
        if (report.has_object_hits) {
            std::string hit_csv = "candidates,hit_proportion,area_proportion,random_baseline\n";
            for (std::size_t i = 0; i < report.object_hits.candidate_counts.size(); ++i)
                hit_csv += std::to_string(report.object_hits.candidate_counts[i]) + "," +
                           fmt_g(report.object_hits.hit_proportion[i]) + "," +
                           fmt_g(report.object_hits.area_proportion[i]) + "," +
                           fmt_g(report.object_hits.random_baseline[i]) + "\n";
            write_text_file((fs::path(opts.out_dir) / "object_hit.csv").string(), hit_csv);
        }
        if (report.has_motion_groups) {
            std::string mg_csv = "decile,fixation_share\n";
            for (int g = 0; g < 10; ++g)
                mg_csv += std::to_string(g + 1) + "," +
                          fmt_g(report.motion_groups.proportions[static_cast<std::size_t>(g)]) + "\n";
            write_text_file((fs::path(opts.out_dir) / "motion_groups.csv").string(), mg_csv);
        }
    }
    return report;
}

void cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir) {
    int videos = 1;
    SyntheticSceneSpec spec = parse_scene_spec(read_text_file(spec_path), &videos);
    write_synthetic_dataset(spec, videos, seed, out_dir);
}

}  // namespace vsal
