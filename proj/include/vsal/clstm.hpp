#ifndef VSAL_CLSTM_HPP
#define VSAL_CLSTM_HPP

#include <array>
#include <string>
#include <vector>

#include "vsal/arch.hpp"
#include "vsal/nn.hpp"
#include "vsal/omcnn.hpp"

namespace vsal {

// Gate order used everywhere: input, forget, output, modulation.
enum GateIndex { gate_input = 0, gate_forget = 1, gate_output = 2, gate_modulation = 3 };

template <typename T>
struct LstmLayerState {
    Tensor<T> memory, hidden;
};

template <typename T>
using LstmState = std::vector<LstmLayerState<T>>;  // one entry per layer

// Inverted-dropout masks, one set per layer per clip: values are 0 or
// 1/(1-p), drawn once and reused across all time steps of the clip.
template <typename T>
struct DropoutMaskSet {
    std::array<Tensor<T>, 4> hidden;   // per gate, applied to H^{t-1}
    std::array<Tensor<T>, 4> feature;  // per gate, applied to the layer input
};

template <typename T>
DropoutMaskSet<T> sample_masks(const Shape& state_shape, double p_h, double p_f, Rng& rng) {
    if (p_h < 0.0 || p_h >= 1.0 || p_f < 0.0 || p_f >= 1.0)
        throw ConfigError("sample_masks: dropout rates must lie in [0,1), got p_h=" + std::to_string(p_h) +
                          " p_f=" + std::to_string(p_f));
    auto draw = [&](double p) {
        std::vector<T> m(static_cast<std::size_t>(numel(state_shape)));
        T keep = static_cast<T>(1.0 / (1.0 - p));
        for (auto& v : m) v = (p > 0.0 && rng.bernoulli(p)) ? T(0) : (p > 0.0 ? keep : T(1));
        return Tensor<T>::from_data(state_shape, std::move(m));
    };
    DropoutMaskSet<T> set;
    for (int g = 0; g < 4; ++g) set.hidden[g] = draw(p_h);
    for (int g = 0; g < 4; ++g) set.feature[g] = draw(p_f);
    return set;
}

template <typename T>
struct LstmCellParams {
    std::array<Tensor<T>, 4> w_hidden;   // convs over H^{t-1}
    std::array<Tensor<T>, 4> w_feature;  // convs over the layer input
    std::array<Tensor<T>, 4> bias;
};

// One convolutional LSTM step. Gates are sigmoid(conv(H) + conv(F) + B),
// modulation is tanh of the same form; memory update M = A.M + I.G and
// hidden H = O.tanh(M). With masks, H and F are elementwise-scaled per gate
// before each convolution.
template <typename T>
LstmLayerState<T> clstm_cell(const Tensor<T>& input, const LstmLayerState<T>& state,
                             const LstmCellParams<T>& p, const DropoutMaskSet<T>* masks) {
    if (input.shape() != state.hidden.shape())
        throw DimensionError("clstm_cell: input " + shape_str(input.shape()) + " != state " +
                             shape_str(state.hidden.shape()));
    auto gate_pre = [&](int g) {
        Tensor<T> h = masks ? mul(state.hidden, masks->hidden[g]) : state.hidden;
        Tensor<T> f = masks ? mul(input, masks->feature[g]) : input;
        Tensor<T> a = conv2d(h, p.w_hidden[g], p.bias[g], 1, Padding::same);
        Tensor<T> b = conv2d(f, p.w_feature[g], Tensor<T>(), 1, Padding::same);
        return add(a, b);
    };
    Tensor<T> gi = sigmoid(gate_pre(gate_input));
    Tensor<T> ga = sigmoid(gate_pre(gate_forget));
    Tensor<T> go = sigmoid(gate_pre(gate_output));
    Tensor<T> gg = tanh_op(gate_pre(gate_modulation));
    Tensor<T> m = add(mul(ga, state.memory), mul(gi, gg));
    Tensor<T> h = mul(go, tanh_op(m));
    return {m, h};
}

enum class LstmMode { train, mc_inference, deterministic };

// Two stacked convolutional LSTM layers over per-frame features, with a
// two-deconv head turning the top hidden state into a saliency distribution.
template <typename T>
class ConvLstm {
  public:
    ConvLstm(const ArchTable& arch, Rng& rng) : arch_(arch) {
        int c = arch_.fn_channels;
        int k = arch_.lstm_kernel;
        const char* gate_names[4] = {"i", "a", "o", "g"};
        for (int layer = 0; layer < arch_.lstm_layers; ++layer) {
            LstmCellParams<T> p;
            std::string base = "lstm" + std::to_string(layer) + ".";
            for (int g = 0; g < 4; ++g) {
                p.w_hidden[g] = store_.add(base + "wh_" + gate_names[g], xavier_init<T>({k, k, c, c}, rng));
                p.w_feature[g] = store_.add(base + "wf_" + gate_names[g], xavier_init<T>({k, k, c, c}, rng));
                p.bias[g] = store_.add(base + "b_" + gate_names[g], Tensor<T>::zeros({c}));
            }
            layers_.push_back(p);
        }
        int head0 = arch_.scaled(arch_.lstm_head_channels);
        head_w0_ = store_.add("head.deconv0.w", xavier_init<T>({4, 4, c, head0}, rng));
        head_b0_ = store_.add("head.deconv0.b", Tensor<T>::zeros({head0}));
        head_w1_ = store_.add("head.deconv1.w", xavier_init<T>({4, 4, head0, 1}, rng));
        head_b1_ = store_.add("head.deconv1.b", Tensor<T>::zeros({1}));
    }

    const ArchTable& arch() const { return arch_; }
    ParamStore<T>& store() { return store_; }
    std::vector<Tensor<T>> parameters() const { return store_.tensors(); }
    int layer_count() const { return static_cast<int>(layers_.size()); }
    const LstmCellParams<T>& layer_params(int layer) const { return layers_.at(layer); }

    Shape state_shape(int batch = 1) const {
        return {batch, arch_.fn_size, arch_.fn_size, arch_.fn_channels};
    }

    LstmState<T> zero_state(int batch = 1) const {
        LstmState<T> st;
        for (int l = 0; l < arch_.lstm_layers; ++l)
            st.push_back({Tensor<T>::zeros(state_shape(batch)), Tensor<T>::zeros(state_shape(batch))});
        return st;
    }

    // One frame through both layers plus the head; states updated in place.
    Tensor<T> step(const Tensor<T>& features, LstmState<T>& state,
                   const std::vector<DropoutMaskSet<T>>* masks) const {
        Tensor<T> x = features;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            state[l] = clstm_cell(x, state[l], layers_[l], masks ? &(*masks)[l] : nullptr);
            x = state[l].hidden;
        }
        Tensor<T> y = deconv2d(x, head_w0_, head_b0_, 2);
        y = leaky_relu(y, static_cast<T>(arch_.leak));
        y = deconv2d(y, head_w1_, head_b1_, 2);
        return normalize_per_sample(sigmoid(y));
    }

    std::vector<DropoutMaskSet<T>> sample_clip_masks(double p_h, double p_f, Rng& rng,
                                                      int batch = 1) const {
        std::vector<DropoutMaskSet<T>> masks;
        for (int l = 0; l < arch_.lstm_layers; ++l)
            masks.push_back(sample_masks<T>(state_shape(batch), p_h, p_f, rng));
        return masks;
    }

    // Full clip. train: one mask sample per layer for the whole clip;
    // mc_inference: average of monte_carlo_count stochastic passes;
    // deterministic: dropout off.
    std::vector<Tensor<T>> forward(const std::vector<Tensor<T>>& features, LstmMode mode, double p_h,
                                   double p_f, int monte_carlo_count, Rng& rng) const {
        if (features.empty()) throw UsageError("clstm_forward: empty feature sequence");
        int batch = features[0].shape()[0];
        if (mode == LstmMode::deterministic) return run_pass(features, batch, nullptr);
        if (mode == LstmMode::train) {
            auto masks = sample_clip_masks(p_h, p_f, rng, batch);
            return run_pass(features, batch, &masks);
        }
        if (monte_carlo_count < 1) throw ConfigError("clstm_forward: monte_carlo_count must be >= 1");
        // Stochastic passes are independent; masks are all drawn up front on
        // the caller's thread and the average is taken in pass order, so the
        // result does not depend on the thread count.
        std::vector<std::vector<Tensor<T>>> runs(static_cast<std::size_t>(monte_carlo_count));
        std::vector<std::vector<DropoutMaskSet<T>>> masks;
        masks.reserve(static_cast<std::size_t>(monte_carlo_count));
        for (int r = 0; r < monte_carlo_count; ++r)
            masks.push_back(sample_clip_masks(p_h, p_f, rng, batch));
        std::vector<Tensor<T>> plain_features;
        {
            // Detach once so worker threads never touch graph state.
            for (const auto& f : features) plain_features.push_back(detach(f));
        }
#pragma omp parallel for schedule(static) if (exec_mode() == ExecMode::parallel)
        for (int r = 0; r < monte_carlo_count; ++r) {
            NoGradGuard ng;  // thread-local, so set inside the worker
            runs[r] = run_pass(plain_features, batch, &masks[r]);
        }
        std::vector<Tensor<T>> out;
        for (std::size_t t = 0; t < features.size(); ++t) {
            std::vector<T> acc(runs[0][t].data().size(), T(0));
            for (int r = 0; r < monte_carlo_count; ++r) {
                const auto& v = runs[r][t].data();
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
            }
            T inv = T(1) / static_cast<T>(monte_carlo_count);
            for (auto& v : acc) v *= inv;
            out.push_back(normalize_per_sample(Tensor<T>::from_data(runs[0][t].shape(), std::move(acc))));
        }
        return out;
    }

  private:
    std::vector<Tensor<T>> run_pass(const std::vector<Tensor<T>>& features, int batch,
                                    const std::vector<DropoutMaskSet<T>>* masks) const {
        LstmState<T> st = zero_state(batch);
        std::vector<Tensor<T>> maps;
        maps.reserve(features.size());
        for (const auto& f : features) maps.push_back(step(f, st, masks));
        return maps;
    }

    ArchTable arch_;
    ParamStore<T> store_;
    std::vector<LstmCellParams<T>> layers_;
    Tensor<T> head_w0_, head_b0_, head_w1_, head_b1_;
};

}  // namespace vsal

#endif
