// Command-line front end: train-omcnn, train-clstm, predict, eval, analyze,
// synth. Exit codes: 0 ok, 2 config/usage error, 3 data error, 4 numeric
// failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "vsal/train.hpp"

namespace {

vsal::RunConfig load_run_config(const std::string& path, std::uint64_t seed, bool seed_set) {
    vsal::RunConfig cfg = vsal::load_config(path);
    if (seed_set) {
        cfg.seed = seed;
        cfg.validate();
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"video saliency prediction toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, omcnn_ckpt, clstm_ckpt, manifest, fixations, pred_dir;
    std::string boxes_path, motion_dir, spec_path, mode = "deterministic";
    std::uint64_t seed = 1;
    bool overlay = false;
    int mc_count = 0;

    auto* train_om = app.add_subcommand("train-omcnn", "train the intra-frame network");
    train_om->add_option("--config", config_path, "run config file")->required();
    auto* tom_seed = train_om->add_option("--seed", seed, "override the config seed");
    train_om->add_option("--out", out_dir, "output directory")->required();

    auto* train_cl = app.add_subcommand("train-clstm", "train the convolutional LSTM");
    train_cl->add_option("--config", config_path, "run config file")->required();
    auto* tcl_seed = train_cl->add_option("--seed", seed, "override the config seed");
    train_cl->add_option("--out", out_dir, "output directory")->required();
    train_cl->add_option("--omcnn", omcnn_ckpt, "frozen omcnn checkpoint")->required();

    auto* predict = app.add_subcommand("predict", "write per-frame saliency maps");
    predict->add_option("--config", config_path, "run config file (unused fields ignored)");
    predict->add_option("--seed", seed, "mask sampling seed");
    predict->add_option("--out", out_dir, "output directory")->required();
    predict->add_option("--omcnn", omcnn_ckpt, "omcnn checkpoint")->required();
    predict->add_option("--clstm", clstm_ckpt, "clstm checkpoint")->required();
    predict->add_option("--manifest", manifest, "video manifest")->required();
    predict->add_option("--mode", mode, "deterministic | mc");
    predict->add_option("--mc-count", mc_count, "monte carlo passes (mc mode)");
    predict->add_flag("--overlay", overlay, "also write overlay images");

    auto* eval = app.add_subcommand("eval", "score predictions against fixations");
    eval->add_option("--config", config_path, "run config file (for sigma_frac)");
    eval->add_option("--seed", seed, "unused; accepted for interface uniformity");
    eval->add_option("--out", out_dir, "output directory")->required();
    eval->add_option("--pred", pred_dir, "directory of pred_*.pgm maps")->required();
    eval->add_option("--manifest", manifest, "video manifest")->required();
    eval->add_option("--fixations", fixations, "fixation csv")->required();

    auto* analyze = app.add_subcommand("analyze", "gaze statistics over a video");
    analyze->add_option("--config", config_path, "run config file (for sigma_frac)");
    analyze->add_option("--seed", seed, "random-baseline seed");
    analyze->add_option("--out", out_dir, "output directory")->required();
    analyze->add_option("--manifest", manifest, "video manifest")->required();
    analyze->add_option("--fixations", fixations, "fixation csv")->required();
    analyze->add_option("--boxes", boxes_path, "object box csv");
    analyze->add_option("--motion", motion_dir, "directory of motion magnitude maps");

    auto* synth = app.add_subcommand("synth", "render a synthetic dataset");
    synth->add_option("--config", spec_path, "scene spec file")->required();
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_om->parsed()) {
            vsal::cmd_train_omcnn(load_run_config(config_path, seed, tom_seed->count() > 0), out_dir);
        } else if (train_cl->parsed()) {
            vsal::cmd_train_clstm(load_run_config(config_path, seed, tcl_seed->count() > 0), omcnn_ckpt,
                                  out_dir);
        } else if (predict->parsed()) {
            vsal::PredictOptions opts;
            opts.omcnn_ckpt = omcnn_ckpt;
            opts.clstm_ckpt = clstm_ckpt;
            opts.manifest_path = manifest;
            opts.out_dir = out_dir;
            opts.mode = mode;
            opts.mc_count = mc_count;
            opts.seed = seed;
            opts.overlay = overlay;
            vsal::cmd_predict(opts);
        } else if (eval->parsed()) {
            vsal::EvalOptions opts;
            opts.pred_dir = pred_dir;
            opts.manifest_path = manifest;
            opts.fixations_path = fixations;
            opts.out_dir = out_dir;
            if (!config_path.empty()) opts.sigma_frac = vsal::load_config(config_path).sigma_frac;
            vsal::MetricReport report = vsal::cmd_eval(opts);
            std::fputs(report.to_csv().c_str(), stdout);
        } else if (analyze->parsed()) {
            vsal::AnalyzeOptions opts;
            opts.manifest_path = manifest;
            opts.fixations_path = fixations;
            opts.boxes_path = boxes_path;
            opts.motion_dir = motion_dir;
            opts.out_dir = out_dir;
            opts.seed = seed;
            if (!config_path.empty()) opts.sigma_frac = vsal::load_config(config_path).sigma_frac;
            vsal::AnalysisReport report = vsal::cmd_analyze(opts);
            std::fputs(report.to_text().c_str(), stdout);
        } else if (synth->parsed()) {
            vsal::cmd_synth(spec_path, seed, out_dir);
        }
    } catch (const vsal::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const vsal::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const vsal::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const vsal::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
