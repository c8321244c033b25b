#ifndef VSAL_OMCNN_HPP
#define VSAL_OMCNN_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vsal/arch.hpp"
#include "vsal/nn.hpp"

namespace vsal {

// Objectness mask: resize the coarse map to the feature extent, remap its
// range from [0,1] to [gamma,1], and scale every channel.
template <typename T>
Tensor<T> mask_features(const Tensor<T>& features, const Tensor<T>& coarse_map, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw ConfigError("mask_features: gamma must lie in [0,1], got " + std::to_string(gamma));
    const Shape& fs = features.shape();
    Tensor<T> m = bilinear_resize(coarse_map, fs[1], fs[2]);
    m = affine(m, static_cast<T>(1.0 - gamma), static_cast<T>(gamma));
    return mul_channelwise(features, m);
}

// Named parameter/buffer registry shared by both network modules so
// checkpoints can address every tensor by name.
template <typename T>
struct ParamStore {
    std::vector<std::pair<std::string, Tensor<T>>> params;
    std::vector<std::pair<std::string, std::vector<T>*>> buffers;

    Tensor<T> add(const std::string& name, Tensor<T> t) {
        t.set_requires_grad(true);
        params.emplace_back(name, t);
        return t;
    }
    void add_buffer(const std::string& name, std::vector<T>* v) { buffers.emplace_back(name, v); }

    std::vector<Tensor<T>> tensors() const {
        std::vector<Tensor<T>> out;
        out.reserve(params.size());
        for (const auto& [name, t] : params) out.push_back(t);
        return out;
    }
};

template <typename T>
struct ConvBlock {
    Tensor<T> w, b;
    Tensor<T> bn_gamma, bn_beta;
    std::shared_ptr<RunningStats<T>> stats;  // stable address across container moves
    ConvStage spec;
};

template <typename T>
struct FnBlock {
    Tensor<T> w, b;  // 1x1 conv to fn_channels
};

template <typename T>
struct InferenceParams {
    std::vector<Tensor<T>> conv_w, conv_b;
    std::vector<Tensor<T>> deconv_w, deconv_b;
};

template <typename T>
struct OmCnnOutput {
    Tensor<T> coarse;    // S_c in [0,1], extent 4*fn_size
    Tensor<T> fine;      // S_f, per-frame distribution, extent 4*fn_size
    Tensor<T> features;  // F_st, fn_size x fn_size x fn_channels
};

// Intra-frame saliency network: an objectness subnet over the current frame
// and a motion subnet over the frame pair, with the coarse objectness map
// gating the first six motion stages.
template <typename T>
class OmCnn {
  public:
    OmCnn(const ArchTable& arch, Rng& rng) : arch_(arch) {
        arch_.validate();
        int in_c = 3;
        for (std::size_t i = 0; i < arch_.objectness.size(); ++i)
            obj_.push_back(make_block("obj.conv" + std::to_string(i), arch_.objectness[i], in_c, rng));
        const auto& otaps = objectness_taps();
        for (std::size_t i = 0; i < otaps.size(); ++i)
            obj_fn_.push_back(make_fn("obj.fn" + std::to_string(i),
                                      arch_.scaled(arch_.objectness[otaps[i]].channels), rng));

        int tail = arch_.input_size / 32;  // extent after the five pools
        int c9 = arch_.scaled(arch_.objectness.back().channels);
        int fc1 = arch_.scaled(arch_.fc1_units);
        fc1_w_ = store_.add("obj.fc1.w", xavier_init<T>({tail, tail, c9, fc1}, rng));
        fc1_b_ = store_.add("obj.fc1.b", Tensor<T>::zeros({fc1}));
        int head = arch_.grid_size * arch_.grid_size * arch_.head_channels();
        fc2_w_ = store_.add("obj.fc2.w", xavier_init<T>({1, 1, fc1, head}, rng));
        fc2_b_ = store_.add("obj.fc2.b", Tensor<T>::zeros({head}));

        in_c = 6;
        for (std::size_t i = 0; i < arch_.motion.size(); ++i)
            mot_.push_back(make_block("mot.conv" + std::to_string(i), arch_.motion[i], in_c, rng));
        const auto& mtaps = motion_taps();
        for (std::size_t i = 0; i < mtaps.size(); ++i)
            mot_fn_.push_back(make_fn("mot.fn" + std::to_string(i),
                                      arch_.scaled(arch_.motion[mtaps[i]].channels), rng));

        int coarse_in = 4 * arch_.fn_channels + arch_.head_channels();
        ic_ = make_inference("ic", coarse_in, rng);
        if_ = make_inference("if", coarse_in + 4 * arch_.fn_channels, rng);
    }

    const ArchTable& arch() const { return arch_; }
    ParamStore<T>& store() { return store_; }
    std::vector<Tensor<T>> parameters() const { return store_.tensors(); }

    void set_trainable(bool trainable) {
        for (auto& [name, t] : store_.params) t.set_requires_grad(trainable);
    }

    struct ObjectnessResult {
        std::vector<Tensor<T>> taps;  // conv stages 4, 5, 6, 9 (1-based)
        Tensor<T> head;               // grid x grid x head_channels
    };

    ObjectnessResult objectness_subnet(const Tensor<T>& frame, NormMode mode) {
        const Shape& s = frame.shape();
        if (s.size() != 4 || s[1] != arch_.input_size || s[2] != arch_.input_size || s[3] != 3)
            throw DimensionError("objectness_subnet: frame must be (n," + std::to_string(arch_.input_size) +
                                 "," + std::to_string(arch_.input_size) + ",3), got " + shape_str(s));
        ObjectnessResult out;
        Tensor<T> x = frame;
        const auto& taps = objectness_taps();
        for (std::size_t i = 0; i < obj_.size(); ++i) {
            x = run_block(obj_[i], x, mode);
            if (std::find(taps.begin(), taps.end(), static_cast<int>(i)) != taps.end())
                out.taps.push_back(x);
        }
        Tensor<T> h = conv2d(x, fc1_w_, fc1_b_, 1, Padding::valid);
        h = leaky_relu(h, static_cast<T>(arch_.leak));
        h = conv2d(h, fc2_w_, fc2_b_, 1, Padding::same);
        out.head = reshape(h, {s[0], arch_.grid_size, arch_.grid_size, arch_.head_channels()});
        return out;
    }

    // 1x1 conv to fn_channels followed by bilinear resize to fn_size.
    Tensor<T> feature_normalize(const Tensor<T>& f, int bank, int idx) const {
        const auto& blocks = bank == 0 ? obj_fn_ : mot_fn_;
        const FnBlock<T>& fn = blocks.at(static_cast<std::size_t>(idx));
        Tensor<T> y = conv2d(f, fn.w, fn.b, 1, Padding::same);
        return bilinear_resize(y, arch_.fn_size, arch_.fn_size);
    }

    // FS_1..4 from the objectness taps plus FS_5 from the resized head.
    std::vector<Tensor<T>> spatial_features(const ObjectnessResult& obj) const {
        std::vector<Tensor<T>> fs;
        for (std::size_t i = 0; i < obj.taps.size(); ++i)
            fs.push_back(feature_normalize(obj.taps[i], 0, static_cast<int>(i)));
        fs.push_back(bilinear_resize(obj.head, arch_.fn_size, arch_.fn_size));
        return fs;
    }

    Tensor<T> coarse_inference(const std::vector<Tensor<T>>& fs) {
        return run_inference(ic_, concat_features(fs, "coarse_inference"), nullptr);
    }

    std::vector<Tensor<T>> motion_subnet(const Tensor<T>& frame_pair, const Tensor<T>& coarse_map,
                                         NormMode mode) {
        const Shape& s = frame_pair.shape();
        if (s.size() != 4 || s[1] != arch_.input_size || s[2] != arch_.input_size || s[3] != 6)
            throw DimensionError("motion_subnet: frame pair must be (n," + std::to_string(arch_.input_size) +
                                 "," + std::to_string(arch_.input_size) + ",6), got " + shape_str(s));
        std::vector<Tensor<T>> out;
        Tensor<T> x = frame_pair;
        const auto& taps = motion_taps();
        for (std::size_t i = 0; i < mot_.size(); ++i) {
            x = run_block(mot_[i], x, mode);
            if (mot_[i].spec.masked) x = mask_features(x, coarse_map, arch_.gamma);
            if (std::find(taps.begin(), taps.end(), static_cast<int>(i)) != taps.end()) out.push_back(x);
        }
        return out;
    }

    std::vector<Tensor<T>> temporal_features(const std::vector<Tensor<T>>& motion_taps_raw) const {
        std::vector<Tensor<T>> ft;
        for (std::size_t i = 0; i < motion_taps_raw.size(); ++i)
            ft.push_back(feature_normalize(motion_taps_raw[i], 1, static_cast<int>(i)));
        return ft;
    }

    // Returns (S_f, F_st). S_f is normalized to a per-frame distribution.
    std::pair<Tensor<T>, Tensor<T>> fine_inference(const std::vector<Tensor<T>>& fs,
                                                   const std::vector<Tensor<T>>& ft) {
        std::vector<Tensor<T>> all = fs;
        all.insert(all.end(), ft.begin(), ft.end());
        Tensor<T> f_st;
        Tensor<T> map = run_inference(if_, concat_features(all, "fine_inference"), &f_st);
        return {normalize_per_sample(map), f_st};
    }

    OmCnnOutput<T> forward(const Tensor<T>& frame_prev, const Tensor<T>& frame_cur, NormMode mode) {
        auto obj = objectness_subnet(frame_cur, mode);
        auto fs = spatial_features(obj);
        Tensor<T> s_c = coarse_inference(fs);
        Tensor<T> pair = concat_channels<T>({frame_prev, frame_cur});
        auto mt = motion_subnet(pair, s_c, mode);
        auto ft = temporal_features(mt);
        auto [s_f, f_st] = fine_inference(fs, ft);
        return {s_c, s_f, f_st};
    }

  private:
    Tensor<T> concat_features(const std::vector<Tensor<T>>& fs, const char* who) const {
        for (const auto& f : fs) {
            const Shape& s = f.shape();
            if (s[1] != arch_.fn_size || s[2] != arch_.fn_size)
                throw DimensionError(std::string(who) + ": feature extent " + shape_str(s) +
                                     " != fn_size " + std::to_string(arch_.fn_size));
        }
        return concat_channels(fs);
    }

    ConvBlock<T> make_block(const std::string& name, const ConvStage& spec, int& in_c, Rng& rng) {
        ConvBlock<T> blk;
        blk.spec = spec;
        int out_c = arch_.scaled(spec.channels);
        blk.w = store_.add(name + ".w", xavier_init<T>({spec.kernel, spec.kernel, in_c, out_c}, rng));
        blk.b = store_.add(name + ".b", Tensor<T>::zeros({out_c}));
        if (spec.batch_norm) {
            blk.bn_gamma = store_.add(name + ".bn_gamma", Tensor<T>::full({out_c}, T(1)));
            blk.bn_beta = store_.add(name + ".bn_beta", Tensor<T>::zeros({out_c}));
            blk.stats = std::make_shared<RunningStats<T>>(out_c);
            store_.add_buffer(name + ".bn_mean", &blk.stats->mean);
            store_.add_buffer(name + ".bn_var", &blk.stats->var);
        }
        in_c = out_c;
        return blk;
    }

    FnBlock<T> make_fn(const std::string& name, int in_c, Rng& rng) {
        FnBlock<T> fn;
        fn.w = store_.add(name + ".w", xavier_init<T>({1, 1, in_c, arch_.fn_channels}, rng));
        fn.b = store_.add(name + ".b", Tensor<T>::zeros({arch_.fn_channels}));
        return fn;
    }

    InferenceParams<T> make_inference(const std::string& name, int in_c, Rng& rng) {
        InferenceParams<T> inf;
        int c = in_c;
        for (std::size_t i = 0; i < arch_.inference_conv_channels.size(); ++i) {
            int out_c = arch_.scaled(arch_.inference_conv_channels[i]);
            inf.conv_w.push_back(
                store_.add(name + ".conv" + std::to_string(i) + ".w", xavier_init<T>({3, 3, c, out_c}, rng)));
            inf.conv_b.push_back(
                store_.add(name + ".conv" + std::to_string(i) + ".b", Tensor<T>::zeros({out_c})));
            c = out_c;
        }
        for (std::size_t i = 0; i < arch_.inference_deconv_channels.size(); ++i) {
            int out_c = arch_.inference_deconv_channels[i] == 1
                            ? 1
                            : arch_.scaled(arch_.inference_deconv_channels[i]);
            inf.deconv_w.push_back(store_.add(name + ".deconv" + std::to_string(i) + ".w",
                                              xavier_init<T>({4, 4, c, out_c}, rng)));
            inf.deconv_b.push_back(
                store_.add(name + ".deconv" + std::to_string(i) + ".b", Tensor<T>::zeros({out_c})));
            c = out_c;
        }
        return inf;
    }

    Tensor<T> run_block(ConvBlock<T>& blk, const Tensor<T>& in, NormMode mode) {
        Tensor<T> x = in;
        if (blk.spec.pool_before) x = maxpool2d(x, 2, 2);
        x = conv2d(x, blk.w, blk.b, blk.spec.stride, Padding::same);
        if (blk.spec.batch_norm) x = batch_norm(x, blk.bn_gamma, blk.bn_beta, blk.stats.get(), mode);
        return leaky_relu(x, static_cast<T>(arch_.leak));
    }

    // Four stride-1 convs, two stride-2 deconvs, sigmoid output. The tapped
    // conv stage comes back through f_st when requested.
    Tensor<T> run_inference(InferenceParams<T>& inf, const Tensor<T>& in, Tensor<T>* f_st) {
        Tensor<T> x = in;
        for (std::size_t i = 0; i < inf.conv_w.size(); ++i) {
            x = conv2d(x, inf.conv_w[i], inf.conv_b[i], 1, Padding::same);
            x = leaky_relu(x, static_cast<T>(arch_.leak));
            if (f_st && static_cast<int>(i) == arch_.feature_stage) *f_st = x;
        }
        for (std::size_t i = 0; i < inf.deconv_w.size(); ++i) {
            x = deconv2d(x, inf.deconv_w[i], inf.deconv_b[i], 2);
            if (i + 1 < inf.deconv_w.size()) x = leaky_relu(x, static_cast<T>(arch_.leak));
        }
        return sigmoid(x);
    }

    ArchTable arch_;
    ParamStore<T> store_;
    std::vector<ConvBlock<T>> obj_;
    std::vector<FnBlock<T>> obj_fn_;
    Tensor<T> fc1_w_, fc1_b_, fc2_w_, fc2_b_;
    std::vector<ConvBlock<T>> mot_;
    std::vector<FnBlock<T>> mot_fn_;
    InferenceParams<T> ic_, if_;
};

}  // namespace vsal

#endif
