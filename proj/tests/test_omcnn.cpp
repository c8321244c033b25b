#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "vsal/losses.hpp"
#include "vsal/omcnn.hpp"

using namespace vsal;
using vsal::testing::random_tensor_f;

namespace {

template <typename T>
void zero_params(OmCnn<T>& model) {
    for (auto& [name, t] : model.store().params)
        std::fill(t.mutable_data().begin(), t.mutable_data().end(), T(0));
}

}  // namespace

TEST_CASE("paper-scale channel arithmetic of the architecture table") {
    ArchTable full = arch_full();
    CHECK(full.fn_size == 28);
    CHECK(full.fn_channels == 128);
    CHECK(full.head_channels() == 30);
    CHECK(4 * full.fn_channels + full.head_channels() == 542);   // coarse head input
    CHECK(542 + 4 * full.fn_channels == 1054);                   // fine head input
    CHECK(full.map_size() == 112);
    CHECK(full.scaled(full.inference_conv_channels[full.feature_stage]) == 128);
}

TEST_CASE("objectness subnet tap shapes at channel_scale 8, input 448") {
    ArchTable arch = default_arch(448, 8, 28, 16);
    Rng rng(101);
    OmCnn<float> model(arch, rng);
    TensorF frame = random_tensor_f({1, 448, 448, 3}, rng, 0, 1);
    auto obj = model.objectness_subnet(frame, NormMode::train);
    REQUIRE(obj.taps.size() == 4);
    CHECK(obj.taps[0].shape() == Shape{1, 56, 56, 16});
    CHECK(obj.taps[1].shape() == Shape{1, 28, 28, 32});
    CHECK(obj.taps[2].shape() == Shape{1, 28, 28, 64});
    CHECK(obj.taps[3].shape() == Shape{1, 14, 14, 128});
    CHECK(obj.head.shape() == Shape{1, 7, 7, 30});
}

TEST_CASE("zero weights give an all-zero head and wrong sizes are rejected") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(103);
    OmCnn<float> model(arch, rng);
    zero_params(model);
    TensorF frame = TensorF::zeros({1, 64, 64, 3});
    auto obj = model.objectness_subnet(frame, NormMode::train);
    for (float v : obj.head.data()) CHECK(v == 0.0f);
    CHECK_THROWS_AS(model.objectness_subnet(TensorF::zeros({1, 32, 32, 3}), NormMode::train),
                    DimensionError);
    CHECK_THROWS_AS(model.motion_subnet(TensorF::zeros({1, 64, 64, 3}), TensorF::zeros({1, 32, 32, 1}),
                                        NormMode::train),
                    DimensionError);
}

TEST_CASE("objectness forward is deterministic under fixed weights") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(107);
    OmCnn<float> model(arch, rng);
    Rng frng(5);
    TensorF frame = random_tensor_f({1, 64, 64, 3}, frng, 0, 1);
    auto a = model.objectness_subnet(frame, NormMode::train);
    auto b = model.objectness_subnet(frame, NormMode::train);
    CHECK(a.head.data() == b.head.data());
}

TEST_CASE("feature_normalize identity case and output contract") {
    ArchTable arch = default_arch(224, 8, 14, 16);
    Rng rng(109);
    OmCnn<float> model(arch, rng);
    // obj tap 0 has 16 channels at this scale == fn_channels, so identity
    // 1x1 weights exist; zero the model then install them.
    for (auto& [name, t] : model.store().params) {
        if (name == "obj.fn0.w") {
            auto& w = t.mutable_data();  // (1,1,16,16)
            std::fill(w.begin(), w.end(), 0.0f);
            for (int i = 0; i < 16; ++i) w[static_cast<std::size_t>(i) * 16 + i] = 1.0f;
        }
        if (name == "obj.fn0.b") std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0f);
    }
    Rng frng(6);
    TensorF f = random_tensor_f({1, 14, 14, 16}, frng);
    TensorF out = model.feature_normalize(f, 0, 0);
    CHECK(out.shape() == f.shape());
    for (std::size_t i = 0; i < f.data().size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(f.data()[i]));

    // constant input -> constant per-channel output
    TensorF c = TensorF::full({1, 28, 28, 16}, 0.5f);
    TensorF cn = model.feature_normalize(c, 0, 0);
    CHECK(cn.shape() == Shape{1, 14, 14, 16});
    for (int ch = 0; ch < 16; ++ch)
        for (int px = 1; px < 14 * 14; ++px)
            CHECK(cn.data()[static_cast<std::size_t>(px) * 16 + ch] ==
                  doctest::Approx(cn.data()[ch]));
}

TEST_CASE("paper-scale feature normalization maps 56x56x64 to 28x28x128") {
    // the same 1x1-conv + bilinear composition feature_normalize runs
    Rng rng(113);
    TensorF f = random_tensor_f({1, 56, 56, 64}, rng);
    TensorF w = random_tensor_f({1, 1, 64, 128}, rng);
    TensorF y = bilinear_resize(conv2d(f, w, TensorF::zeros({128}), 1, Padding::same), 28, 28);
    CHECK(y.shape() == Shape{1, 28, 28, 128});
}

TEST_CASE("coarse inference: extent, zero-weight value, bounds") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(127);
    OmCnn<float> model(arch, rng);
    Rng frng(8);
    TensorF frame = random_tensor_f({1, 64, 64, 3}, frng, 0, 1);
    auto obj = model.objectness_subnet(frame, NormMode::train);
    auto fs = model.spatial_features(obj);
    REQUIRE(fs.size() == 5);
    int concat_c = 0;
    for (const auto& f : fs) concat_c += f.shape()[3];
    CHECK(concat_c == 4 * arch.fn_channels + arch.head_channels());

    TensorF s_c = model.coarse_inference(fs);
    CHECK(s_c.shape() == Shape{1, 32, 32, 1});  // 4 * fn_size
    for (float v : s_c.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    zero_params(model);
    auto obj0 = model.objectness_subnet(frame, NormMode::train);
    TensorF s_c0 = model.coarse_inference(model.spatial_features(obj0));
    for (float v : s_c0.data()) CHECK(v == doctest::Approx(0.5f));
}

TEST_CASE("mask_features follows the gamma law") {
    Rng rng(131);
    TensorF c = random_tensor_f({1, 6, 6, 4}, rng);

    TensorF ones_map = TensorF::full({1, 12, 12, 1}, 1.0f);
    for (double gamma : {0.0, 0.3, 1.0}) {
        TensorF m = mask_features(c, ones_map, gamma);
        for (std::size_t i = 0; i < c.data().size(); ++i)
            CHECK(m.data()[i] == doctest::Approx(c.data()[i]));
    }

    TensorF zero_map = TensorF::zeros({1, 12, 12, 1});
    TensorF half = mask_features(c, zero_map, 0.5);
    for (std::size_t i = 0; i < c.data().size(); ++i)
        CHECK(half.data()[i] == doctest::Approx(0.5f * c.data()[i]));

    TensorF any_map = random_tensor_f({1, 12, 12, 1}, rng, 0, 1);
    TensorF inert = mask_features(c, any_map, 1.0);
    for (std::size_t i = 0; i < c.data().size(); ++i)
        CHECK(inert.data()[i] == doctest::Approx(c.data()[i]));

    CHECK_THROWS_AS(mask_features(c, ones_map, 1.5), ConfigError);
    CHECK_THROWS_AS(mask_features(c, ones_map, -0.1), ConfigError);
}

TEST_CASE("motion subnet: zero weights, stride schedule, gamma=1 independence") {
    ArchTable arch = default_arch(448, 8, 28, 16);
    Rng rng(137);
    OmCnn<float> model(arch, rng);
    Rng frng(9);
    TensorF pair = random_tensor_f({1, 448, 448, 6}, frng, 0, 1);
    TensorF s_c = random_tensor_f({1, 112, 112, 1}, frng, 0, 1);

    auto taps = model.motion_subnet(pair, s_c, NormMode::train);
    REQUIRE(taps.size() == 4);
    CHECK(taps[0].shape() == Shape{1, 56, 56, 32});
    CHECK(taps[1].shape() == Shape{1, 28, 28, 64});
    CHECK(taps[2].shape() == Shape{1, 14, 14, 64});
    CHECK(taps[3].shape() == Shape{1, 7, 7, 128});

    OmCnn<float> zero_model(default_arch(64, 16, 8, 8), rng);
    zero_params(zero_model);
    TensorF small_pair = TensorF::zeros({1, 64, 64, 6});
    auto zero_taps = zero_model.motion_subnet(small_pair, TensorF::full({1, 32, 32, 1}, 0.7f),
                                              NormMode::train);
    for (const auto& t : zero_taps)
        for (float v : t.data()) CHECK(v == 0.0f);

    ArchTable g1 = default_arch(64, 16, 8, 8, /*gamma=*/1.0);
    Rng rng2(139);
    OmCnn<float> inert(g1, rng2);
    TensorF p2 = random_tensor_f({1, 64, 64, 6}, frng, 0, 1);
    auto ta = inert.motion_subnet(p2, random_tensor_f({1, 32, 32, 1}, frng, 0, 1), NormMode::train);
    auto tb = inert.motion_subnet(p2, random_tensor_f({1, 32, 32, 1}, frng, 0, 1), NormMode::train);
    for (std::size_t k = 0; k < ta.size(); ++k) CHECK(ta[k].data() == tb[k].data());
}

TEST_CASE("fine inference yields a distribution and the feature block") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(149);
    OmCnn<float> model(arch, rng);
    Rng frng(10);
    auto out = model.forward(random_tensor_f({1, 64, 64, 3}, frng, 0, 1),
                             random_tensor_f({1, 64, 64, 3}, frng, 0, 1), NormMode::train);
    CHECK(out.fine.shape() == Shape{1, 32, 32, 1});
    CHECK(out.features.shape() == Shape{1, 8, 8, 8});
    double acc = 0;
    for (float v : out.fine.data()) {
        CHECK(v >= 0.0f);
        acc += v;
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-5));
    for (float v : out.coarse.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("with gamma=1 the fine map is invariant to the coarse map") {
    ArchTable arch = default_arch(64, 16, 8, 8, /*gamma=*/1.0);
    Rng rng(151);
    OmCnn<float> model(arch, rng);
    Rng frng(11);
    TensorF prev = random_tensor_f({1, 64, 64, 3}, frng, 0, 1);
    TensorF cur = random_tensor_f({1, 64, 64, 3}, frng, 0, 1);
    TensorF pair = concat_channels<float>({prev, cur});

    auto obj = model.objectness_subnet(cur, NormMode::train);
    auto fs = model.spatial_features(obj);
    TensorF s_c = model.coarse_inference(fs);

    auto run_fine = [&](const TensorF& coarse) {
        auto ft = model.temporal_features(model.motion_subnet(pair, coarse, NormMode::train));
        return model.fine_inference(fs, ft).first;
    };
    TensorF with_real = run_fine(s_c);
    TensorF with_fake = run_fine(random_tensor_f({1, 32, 32, 1}, frng, 0, 1));
    CHECK(with_real.data() == with_fake.data());
}

TEST_CASE("gradients reach every trainable parameter") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(157);
    OmCnn<float> model(arch, rng);
    Rng frng(12);
    auto out = model.forward(random_tensor_f({1, 64, 64, 3}, frng, 0, 1),
                             random_tensor_f({1, 64, 64, 3}, frng, 0, 1), NormMode::train);
    TensorF ground = normalize_per_sample(random_tensor_f({1, 32, 32, 1}, frng, 0.1, 1.0));
    TensorF loss = om_cnn_loss(ground, out.fine, out.coarse, 0.5);
    loss.backward();
    for (auto& [name, t] : model.store().params) {
        REQUIRE_MESSAGE(t.has_grad(), name);
        double norm = 0;
        for (float g : t.grad()) norm += static_cast<double>(g) * g;
        CHECK_MESSAGE(norm > 0.0, name);
    }
}
