#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vsal/adam.hpp"
#include "vsal/clstm.hpp"
#include "vsal/data.hpp"
#include "vsal/losses.hpp"
#include "vsal/omcnn.hpp"
#include "vsal/synthetic.hpp"
#include "vsal/train.hpp"

using namespace vsal;
namespace fs = std::filesystem;

namespace {

fs::path work_root() {
    fs::path p = fs::temp_directory_path() / "vsal_train_test";
    return p;
}

void make_dataset(const fs::path& dir, int videos, std::uint64_t seed) {
    SyntheticSceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.frame_count = 28;
    spec.subjects = 5;
    spec.random_objects_min = 1;
    spec.random_objects_max = 2;
    spec.random_size_min = 7;
    spec.random_size_max = 12;
    spec.random_speed_min = 0.5;
    spec.random_speed_max = 2.5;
    write_synthetic_dataset(spec, videos, seed, dir.string());
}

std::string small_config(const fs::path& train_dir, const fs::path& val_dir, int iters_om,
                         int iters_cl) {
    std::ostringstream os;
    os << "arch_scale = custom\n"
       << "input_size = 64\nchannel_scale = 16\nfn_size = 8\nfn_channels = 8\n"
       << "grid_size = 4\nboxes_per_cell = 1\nclass_count = 3\n"
       << "batch_size = 2\nlr_omcnn = 1e-3\nlr_clstm = 1e-3\n"
       << "iters_omcnn = " << iters_om << "\niters_clstm = " << iters_cl << "\n"
       << "clip_length = 8\nclip_overlap = 4\nval_interval = 5\nseed = 11\n"
       << "mc_count = 8\n"
       << "train_dir = " << train_dir.string() << "\n"
       << "val_dir = " << val_dir.string() << "\n";
    return os.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

struct Fixture {
    fs::path root, data_train, data_val;
    Fixture() {
        root = work_root();
        fs::remove_all(root);
        fs::create_directories(root);
        data_train = root / "train";
        data_val = root / "val";
        make_dataset(data_train, 3, 100);
        make_dataset(data_val, 1, 200);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("omcnn training: log format, determinism, and trajectory-identical resume") {
    Fixture& f = fixture();
    RunConfig cfg = parse_config(small_config(f.data_train, f.data_val, 12, 1));

    fs::path run_a = f.root / "run_a";
    cmd_train_omcnn(cfg, run_a.string());
    auto log_a = read_lines(run_a / "train_omcnn_log.csv");
    REQUIRE(log_a.size() == 12);
    for (const auto& line : log_a) CHECK(std::count(line.begin(), line.end(), ',') == 2);
    CHECK(fs::exists(run_a / "omcnn.ckpt"));
    CHECK(fs::exists(run_a / "omcnn_best.ckpt"));

    // identical seeds give byte-identical logs and checkpoints
    fs::path run_b = f.root / "run_b";
    cmd_train_omcnn(cfg, run_b.string());
    CHECK(read_text_file((run_a / "train_omcnn_log.csv").string()) ==
          read_text_file((run_b / "train_omcnn_log.csv").string()));
    CHECK(read_text_file((run_a / "omcnn.ckpt").string()) ==
          read_text_file((run_b / "omcnn.ckpt").string()));

    // a run stopped at 6 and resumed to 12 reproduces the full trajectory
    fs::path run_c = f.root / "run_c";
    RunConfig cfg_half = cfg;
    cfg_half.iters_omcnn = 6;
    cmd_train_omcnn(cfg_half, run_c.string());
    REQUIRE(read_lines(run_c / "train_omcnn_log.csv").size() == 6);
    RunConfig cfg_resume = cfg;
    cfg_resume.resume = (run_c / "omcnn.ckpt").string();
    cmd_train_omcnn(cfg_resume, run_c.string());
    auto log_c = read_lines(run_c / "train_omcnn_log.csv");
    REQUIRE(log_c.size() == 12);
    // step and loss columns are bit-identical; the val column may be
    // sampled at different steps because the first run validated at its
    // own end-of-run boundary
    auto step_loss = [](const std::string& line) { return line.substr(0, line.rfind(',')); };
    for (int i = 0; i < 12; ++i) CHECK(step_loss(log_c[i]) == step_loss(log_a[i]));
    CHECK(read_text_file((run_c / "omcnn.ckpt").string()) ==
          read_text_file((run_a / "omcnn.ckpt").string()));
}

TEST_CASE("omcnn resume rejects a mismatched architecture") {
    Fixture& f = fixture();
    RunConfig cfg = parse_config(small_config(f.data_train, f.data_val, 2, 1));
    RunConfig other = cfg;
    other.fn_channels = 4;
    other.resume = (f.root / "run_a" / "omcnn.ckpt").string();
    CHECK_THROWS_AS(cmd_train_omcnn(other, (f.root / "run_bad").string()), ConfigError);
}

TEST_CASE("clstm training consumes the frozen checkpoint and improves validation") {
    Fixture& f = fixture();
    RunConfig cfg = parse_config(small_config(f.data_train, f.data_train, 12, 120));
    fs::path out = f.root / "run_lstm";
    cmd_train_clstm(cfg, (f.root / "run_a" / "omcnn.ckpt").string(), out.string());
    auto log = read_lines(out / "train_clstm_log.csv");
    REQUIRE(log.size() == 120);
    CHECK(fs::exists(out / "clstm.ckpt"));

    // validation KL at the end is below the first recorded validation
    auto val_of = [](const std::string& line) {
        auto pos = line.rfind(',');
        return std::strtod(line.c_str() + pos + 1, nullptr);
    };
    double first_val = val_of(log[4]);   // first val_interval hit
    double last_val = val_of(log.back());
    CHECK(std::isfinite(first_val));
    CHECK(last_val < first_val);

    // wrong-kind checkpoint is rejected
    CHECK_THROWS_AS(cmd_train_clstm(cfg, (out / "clstm.ckpt").string(), (f.root / "bad").string()),
                    DataError);
}

TEST_CASE("frozen feature extractor receives no gradients") {
    ArchTable arch = default_arch(64, 16, 8, 8);
    Rng rng(901);
    OmCnn<float> extractor(arch, rng);
    extractor.set_trainable(false);
    ConvLstm<float> lstm(arch, rng);

    Rng frng(3);
    std::vector<float> a(64 * 64 * 3), b(64 * 64 * 3);
    for (auto& v : a) v = static_cast<float>(frng.uniform());
    for (auto& v : b) v = static_cast<float>(frng.uniform());
    auto out = extractor.forward(TensorF::from_data({1, 64, 64, 3}, a),
                                 TensorF::from_data({1, 64, 64, 3}, b), NormMode::eval);
    Rng mask_rng(5);
    auto maps = lstm.forward({out.features}, LstmMode::train, 0.25, 0.25, 1, mask_rng);
    TensorF ground = TensorF::full({1, 32, 32, 1}, 1.0f / 1024.0f);
    TensorF loss = clstm_loss<float>(maps, {ground});
    loss.backward();
    for (auto& [name, t] : extractor.store().params) {
        bool zero_grad = !t.has_grad();
        if (!zero_grad) {
            double norm = 0;
            for (float g : t.grad()) norm += std::abs(static_cast<double>(g));
            zero_grad = norm == 0.0;
        }
        CHECK_MESSAGE(zero_grad, name);
    }
    for (auto& [name, t] : lstm.store().params) CHECK_MESSAGE(t.has_grad(), name);
}

TEST_CASE("predict: file count, determinism, and the monte-carlo difference") {
    Fixture& f = fixture();
    PredictOptions opts;
    opts.omcnn_ckpt = (f.root / "run_a" / "omcnn_best.ckpt").string();
    opts.clstm_ckpt = (f.root / "run_lstm" / "clstm_best.ckpt").string();
    opts.manifest_path = (f.data_val / "v000" / "manifest.txt").string();
    opts.out_dir = (f.root / "pred_det").string();
    cmd_predict(opts);

    int frame_count = read_manifest(opts.manifest_path).frame_count();
    int written = 0;
    for (const auto& e : fs::directory_iterator(opts.out_dir))
        written += e.path().extension() == ".pgm" ? 1 : 0;
    CHECK(written == frame_count);

    PredictOptions again = opts;
    again.out_dir = (f.root / "pred_det2").string();
    cmd_predict(again);
    CHECK(read_text_file((fs::path(opts.out_dir) / "pred_000000.pgm").string()) ==
          read_text_file((fs::path(again.out_dir) / "pred_000000.pgm").string()));

    PredictOptions mc = opts;
    mc.out_dir = (f.root / "pred_mc").string();
    mc.mode = "mc";
    mc.mc_count = 8;
    mc.seed = 5;
    cmd_predict(mc);
    bool differs = false;
    for (int i = 0; i < frame_count && !differs; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "pred_%06d.pgm", i);
        differs = read_text_file((fs::path(opts.out_dir) / name).string()) !=
                  read_text_file((fs::path(mc.out_dir) / name).string());
    }
    CHECK(differs);

    PredictOptions overlay = opts;
    overlay.out_dir = (f.root / "pred_overlay").string();
    overlay.overlay = true;
    cmd_predict(overlay);
    CHECK(fs::exists(fs::path(overlay.out_dir) / "overlay_000000.ppm"));
}

TEST_CASE("predict reports unreadable frames and fails with a data error") {
    Fixture& f = fixture();
    fs::path broken = f.root / "broken_video";
    fs::create_directories(broken);
    VideoManifest m = read_manifest((f.data_val / "v000" / "manifest.txt").string());
    VideoManifest bad;
    bad.fps = m.fps;
    bad.width = m.width;
    bad.height = m.height;
    bad.frame_paths = {"missing_a.ppm", "missing_b.ppm"};
    write_manifest((broken / "manifest.txt").string(), bad);

    PredictOptions opts;
    opts.omcnn_ckpt = (f.root / "run_a" / "omcnn_best.ckpt").string();
    opts.clstm_ckpt = (f.root / "run_lstm" / "clstm_best.ckpt").string();
    opts.manifest_path = (broken / "manifest.txt").string();
    opts.out_dir = (f.root / "pred_broken").string();
    CHECK_THROWS_AS(cmd_predict(opts), DataError);
    CHECK(fs::exists(fs::path(opts.out_dir) / "errors.txt"));
}

TEST_CASE("eval: perfect predictions score near-perfectly and reports reproduce") {
    Fixture& f = fixture();
    VideoEntry video = load_video((f.data_val / "v000").string(), "v000");
    fs::path pred = f.root / "perfect_pred";
    fs::create_directories(pred);
    double sigma = video.manifest.width / 39.0;
    for (int t = 0; t < video.manifest.frame_count(); ++t) {
        GrayMap g = fixations_to_map(video.frame_fixations(t), video.manifest.height,
                                     video.manifest.width, sigma);
        char name[32];
        std::snprintf(name, sizeof name, "pred_%06d.pgm", t);
        write_pgm((pred / name).string(), g);
    }
    EvalOptions opts;
    opts.pred_dir = pred.string();
    opts.manifest_path = (f.data_val / "v000" / "manifest.txt").string();
    opts.fixations_path = (f.data_val / "v000" / "fixations.csv").string();
    opts.out_dir = (f.root / "eval_out").string();
    MetricReport report = cmd_eval(opts);
    REQUIRE(!report.frames.empty());
    CHECK(report.kl_summary().mean < 0.02);   // 8-bit quantization leaves a little
    CHECK(report.cc_summary().mean > 0.99);
    CHECK(report.auc_summary().mean > 0.9);

    MetricReport again = cmd_eval(opts);
    CHECK(report.to_csv() == again.to_csv());
    CHECK(fs::exists(fs::path(opts.out_dir) / "metrics.csv"));

    // frame-count mismatch is a usage error
    fs::remove(pred / "pred_000000.pgm");
    CHECK_THROWS_AS(cmd_eval(opts), UsageError);
}

TEST_CASE("analyze produces the report files from generated data") {
    Fixture& f = fixture();
    AnalyzeOptions opts;
    opts.manifest_path = (f.data_train / "v000" / "manifest.txt").string();
    opts.fixations_path = (f.data_train / "v000" / "fixations.csv").string();
    opts.boxes_path = (f.data_train / "v000" / "boxes.csv").string();
    opts.motion_dir = (f.data_train / "v000" / "motion").string();
    opts.out_dir = (f.root / "analysis_out").string();
    AnalysisReport report = cmd_analyze(opts);
    CHECK(report.temporal_cc_values.size() == 4);
    CHECK(report.has_object_hits);
    CHECK(report.has_motion_groups);
    double total = 0;
    for (double p : report.motion_groups.proportions) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fs::exists(fs::path(opts.out_dir) / "analysis.txt"));
    CHECK(fs::exists(fs::path(opts.out_dir) / "temporal_cc.csv"));
    CHECK(fs::exists(fs::path(opts.out_dir) / "object_hit.csv"));
    CHECK(fs::exists(fs::path(opts.out_dir) / "motion_groups.csv"));
}

TEST_CASE("cli subcommands map errors to the documented exit codes") {
    Fixture& f = fixture();
    std::string cli = VSAL_CLI_PATH;
    fs::path cfg_bad = f.root / "bad.cfg";
    write_text_file(cfg_bad.string(), "arch_scale = tiny\ngamma = 2.0\n");
    std::string cmd = cli + " train-omcnn --config " + cfg_bad.string() + " --out " +
                      (f.root / "cli_out").string() + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == 2);

    fs::path cfg_nodata = f.root / "nodata.cfg";
    write_text_file(cfg_nodata.string(),
                    "arch_scale = custom\ninput_size = 64\nchannel_scale = 16\nfn_size = 8\n"
                    "fn_channels = 8\niters_omcnn = 1\ntrain_dir = /nonexistent_dir_vsal\n");
    cmd = cli + " train-omcnn --config " + cfg_nodata.string() + " --out " +
          (f.root / "cli_out").string() + " >/dev/null 2>&1";
    rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == 3);

    fs::path scene = f.root / "scene.cfg";
    write_text_file(scene.string(),
                    "width = 64\nheight = 64\nframes = 6\nsubjects = 3\nvideos = 1\n"
                    "object = disc 8 1.5\n");
    cmd = cli + " synth --config " + scene.string() + " --seed 9 --out " +
          (f.root / "cli_synth").string() + " >/dev/null 2>&1";
    rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(f.root / "cli_synth" / "v000" / "manifest.txt"));

    cmd = cli + " analyze --manifest " + (f.root / "cli_synth" / "v000" / "manifest.txt").string() +
          " --fixations " + (f.root / "cli_synth" / "v000" / "fixations.csv").string() + " --out " +
          (f.root / "cli_analysis").string() + " >/dev/null 2>&1";
    rc = std::system(cmd.c_str());
    // 6 frames at 10 fps cannot fill a 2 s window: usage error -> exit 2
    CHECK(WEXITSTATUS(rc) == 2);
}
