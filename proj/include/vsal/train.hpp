#ifndef VSAL_TRAIN_HPP
#define VSAL_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vsal/analysis.hpp"
#include "vsal/config.hpp"
#include "vsal/metrics.hpp"

namespace vsal {

// Stage 1: trains the intra-frame network on frame pairs, logging
// "step,loss,val_kl" per iteration and writing omcnn.ckpt (last state,
// resumable) plus omcnn_best.ckpt (best validation KL).
void cmd_train_omcnn(const RunConfig& cfg, const std::string& out_dir);

// Stage 2: the intra-frame network is frozen as a feature extractor and the
// convolutional LSTM is trained on clips. Writes clstm.ckpt/clstm_best.ckpt.
void cmd_train_clstm(const RunConfig& cfg, const std::string& omcnn_ckpt, const std::string& out_dir);

struct PredictOptions {
    std::string omcnn_ckpt;
    std::string clstm_ckpt;
    std::string manifest_path;
    std::string out_dir;
    std::string mode = "deterministic";  // deterministic | mc
    int mc_count = 0;                    // 0: value from the checkpoint config
    std::uint64_t seed = 1;
    bool overlay = false;
};

// One graymap per frame (pred_######.pgm); the first frame reuses itself as
// its pair partner.
void cmd_predict(const PredictOptions& opts);

struct EvalOptions {
    std::string pred_dir;
    std::string manifest_path;
    std::string fixations_path;
    std::string out_dir;
    double sigma_frac = 1.0 / 39.0;
};

MetricReport cmd_eval(const EvalOptions& opts);

struct AnalyzeOptions {
    std::string manifest_path;
    std::string fixations_path;
    std::string boxes_path;  // optional
    std::string motion_dir;  // optional; falls back to frame differences
    std::string out_dir;
    std::vector<int> candidate_counts = {1, 2, 3};
    double sigma_frac = 1.0 / 39.0;
    std::uint64_t seed = 1;
};

AnalysisReport cmd_analyze(const AnalyzeOptions& opts);

void cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir);

}  // namespace vsal

#endif
