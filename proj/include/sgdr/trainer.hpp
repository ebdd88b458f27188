#pragma once

#include <string>
#include <vector>

#include "sgdr/checkpoint.hpp"
#include "sgdr/config.hpp"
#include "sgdr/dataset.hpp"
#include "sgdr/metrics.hpp"
#include "sgdr/train_step.hpp"

namespace sgdr {

struct HistoryRow {
    int epoch = 0;
    EvalReport report;
};

struct TrainOutputs {
    std::string final_checkpoint;
    std::string train_log_path;
    std::string metrics_history_path;
    LossReport last_report;
    std::vector<HistoryRow> history;
};

// Full training procedure: two-phase learning-rate schedule, discriminators
// updated before generators each step, periodic evaluation on the held-out
// target split, checkpoints, structured logs. The final-epoch checkpoint is
// the deliverable; there is no early stopping (model selection on target
// labels would break the unsupervised contract).
TrainOutputs train(const DatasetManifest& manifest, const TrainConfig& config,
                   const std::string& out_dir, const std::string& resume_from = "");

// Test-time inference: target content encoder + segmentation head, argmax.
// No translation is performed.
SegMask infer(const ModelBundle<float>& m, const Image2D& image);

// Slice-by-slice evaluation of a model on the eval split.
EvalReport evaluate_model(const ModelBundle<float>& m, const DatasetStore& eval_store,
                          Spacing spacing);

// Shared helper: image+labels -> step-ready tensors.
PairItem<float> make_pair_item(const Image2D& x, const SegMask& x_mask, const Image2D& y);

}  // namespace sgdr
