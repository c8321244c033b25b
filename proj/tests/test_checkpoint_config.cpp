#include <doctest.h>

#include <filesystem>

#include "vsal/checkpoint.hpp"
#include "vsal/config.hpp"
#include "vsal/io.hpp"

using namespace vsal;
namespace fs = std::filesystem;

TEST_CASE("architecture table serialization round-trips") {
    ArchTable a = default_arch(224, 8, 14, 16, 0.5);
    std::string text = a.serialize();
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    ArchTable b = ArchTable::parse(lines);
    CHECK(b.serialize() == text);
    CHECK(b.input_size == 224);
    CHECK(b.motion.size() == 10);
    CHECK(b.motion[0].kernel == 7);
    CHECK(b.motion[5].masked);
    CHECK_FALSE(b.motion[6].masked);
}

TEST_CASE("arch validation enforces the documented invariants") {
    CHECK_THROWS_AS(default_arch(100, 1, 10, 128), ConfigError);  // not a multiple of 32
    CHECK_THROWS_AS(default_arch(448, 1, 30, 128), ConfigError);  // fn does not divide input
    CHECK_THROWS_AS(default_arch(448, 1, 28, 128, 1.5), ConfigError);  // gamma out of range
}

TEST_CASE("checkpoint save/load round-trips bit-identically") {
    Checkpoint ckpt;
    ckpt.kind = "omcnn";
    ckpt.arch = default_arch(64, 16, 8, 8);
    ckpt.meta["step"] = "123";
    ckpt.meta["rng"] = "456 789 0 0x0p+0";
    ckpt.meta["mean"] = "0x1p-1 0x1p-2 0x1p-3";
    ckpt.add("layer.w", {2, 2, 1, 3}, {1.5f, -2.25f, 0.125f, 3.0f, -0.5f, 9.75f, 0.0f, 1.0f, 2.0f,
                                       4.0f, 5.0f, 6.0f});
    ckpt.add("layer.b", {3}, {0.25f, 0.5f, 0.75f});

    fs::path dir = fs::temp_directory_path() / "vsal_ckpt_test";
    fs::create_directories(dir);
    std::string p1 = (dir / "a.ckpt").string();
    std::string p2 = (dir / "b.ckpt").string();
    ckpt.save(p1);
    Checkpoint loaded = Checkpoint::load(p1);
    loaded.save(p2);
    CHECK(read_text_file(p1) == read_text_file(p2));

    CHECK(loaded.kind == "omcnn");
    CHECK(loaded.meta.at("step") == "123");
    CHECK(loaded.arch.serialize() == ckpt.arch.serialize());
    const auto* e = loaded.find("layer.w");
    REQUIRE(e != nullptr);
    CHECK(e->shape == Shape{2, 2, 1, 3});
    CHECK(e->data == ckpt.arrays[0].data);
    CHECK(loaded.find("missing") == nullptr);
    fs::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects damaged files") {
    fs::path dir = fs::temp_directory_path() / "vsal_ckpt_bad";
    fs::create_directories(dir);
    std::string p = (dir / "bad.ckpt").string();
    write_text_file(p, "not a checkpoint\n");
    CHECK_THROWS_AS(Checkpoint::load(p), DataError);

    Checkpoint ckpt;
    ckpt.kind = "clstm";
    ckpt.arch = default_arch(64, 16, 8, 8);
    ckpt.add("w", {4}, {1, 2, 3, 4});
    ckpt.save(p);
    std::string content = read_text_file(p);
    write_text_file(p, content.substr(0, content.size() - 8));  // truncate payload
    CHECK_THROWS_AS(Checkpoint::load(p), DataError);
    fs::remove_all(dir);
}

TEST_CASE("config defaults match the published hyper-parameter table") {
    RunConfig cfg;
    CHECK(cfg.gamma == doctest::Approx(0.5));
    CHECK(cfg.lambda == doctest::Approx(0.5));
    CHECK(cfg.lr_omcnn == doctest::Approx(1e-5));
    CHECK(cfg.lr_clstm == doctest::Approx(1e-4));
    CHECK(cfg.weight_decay == doctest::Approx(5e-6));
    CHECK(cfg.epochs_omcnn == 12);
    CHECK(cfg.epochs_clstm == 15);
    CHECK(cfg.batch_size == 12);
    CHECK(cfg.p_h == doctest::Approx(0.25));
    CHECK(cfg.p_f == doctest::Approx(0.25));
    CHECK(cfg.mc_count == 100);
    CHECK(cfg.clip_length == 16);
    CHECK(cfg.clip_overlap == 10);
    CHECK(cfg.input_size == 448);
    CHECK(cfg.fn_size == 28);
    CHECK(cfg.fn_channels == 128);
}

TEST_CASE("config file parsing applies the preset then explicit overrides") {
    RunConfig cfg = parse_config(
        "# run\n"
        "arch_scale = tiny\n"
        "lambda = 0.25   # override\n"
        "seed = 99\n");
    CHECK(cfg.input_size == 224);
    CHECK(cfg.channel_scale == 8);
    CHECK(cfg.fn_channels == 16);
    CHECK(cfg.lambda == doctest::Approx(0.25));
    CHECK(cfg.seed == 99);
    CHECK(cfg.gamma == doctest::Approx(0.5));  // untouched default

    CHECK_THROWS_AS(parse_config("nonsense\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("unknown_key = 3\n"), ConfigError);
}

TEST_CASE("config validation names each out-of-range field") {
    auto expect_reject = [](const std::string& line, const std::string& field) {
        try {
            parse_config("arch_scale = tiny\n" + line + "\n");
            FAIL_CHECK("expected rejection of: " << line);
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(field) != std::string::npos, e.what());
        }
    };
    expect_reject("gamma = 1.5", "gamma");
    expect_reject("gamma = -0.1", "gamma");
    expect_reject("lambda = -1", "lambda");
    expect_reject("lr_omcnn = 0", "lr_omcnn");
    expect_reject("lr_clstm = -2e-4", "lr_clstm");
    expect_reject("weight_decay = -1e-6", "weight_decay");
    expect_reject("epochs_omcnn = 0", "epochs_omcnn");
    expect_reject("epochs_clstm = -3", "epochs_clstm");
    expect_reject("batch_size = 0", "batch_size");
    expect_reject("p_h = 1.0", "p_h");
    expect_reject("p_f = -0.25", "p_f");
    expect_reject("mc_count = 0", "mc_count");
    expect_reject("clip_length = 0", "clip_length");
    expect_reject("clip_overlap = 16", "clip_overlap");
    expect_reject("input_size = 100", "input_size");
    expect_reject("channel_scale = 0", "channel_scale");
    expect_reject("fn_size = 13", "fn_size");
    expect_reject("val_interval = 0", "val_interval");
    expect_reject("sigma_frac = 0", "sigma_frac");
}

TEST_CASE("config echo is stable and complete enough to rebuild hyperparameters") {
    RunConfig cfg;
    cfg.arch_scale = "tiny";
    apply_preset(cfg, "tiny");
    auto echo = cfg.echo();
    CHECK(echo.at("p_h") == "0.25");
    CHECK(echo.at("mc_count") == "100");
    CHECK(echo.at("input_size") == "224");
}
