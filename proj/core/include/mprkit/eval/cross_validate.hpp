#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mprkit/dataset.hpp"
#include "mprkit/eval/metrics.hpp"
#include "mprkit/eval/splits.hpp"
#include "mprkit/nn/train.hpp"

namespace mprkit::eval {

// One lesion's samples, all views, in ascending view order.
struct LesionGroup {
  std::string patient_id;
  std::string branch_id;
  std::string lesion_id;
  bool significant = false;
  bool revascularised = false;
  std::vector<const LabeledSample*> views;
};

struct SplitRow {
  std::string target;
  bool tta = false;
  int split_rep = 0;
  int split_fold = 0;
  MetricSet metrics;
};

struct PredictionRow {
  std::string target;
  bool tta = false;
  int split_rep = 0;
  int split_fold = 0;
  std::string patient_id;
  std::string lesion_id;
  int label = 0;
  double score = 0.0;
};

struct ReportTable {
  std::vector<SplitRow> rows;
  std::vector<PredictionRow> predictions;
  std::vector<std::string> warnings;
};

// Replaces model training and scoring for one (split, target): receives the
// training samples and the test lesions and returns per-view probabilities
// for each test lesion (outer index = lesion, inner = view order). Lets
// tests drive the aggregation machinery with oracle scores.
using SplitScorer = std::function<std::vector<std::vector<double>>(
    const Split& split, nn::Target target,
    const std::vector<const LabeledSample*>& train_samples,
    const std::vector<const LesionGroup*>& test_lesions)>;

struct CrossValidateConfig {
  nn::TrainConfig train;  // seed and target are overridden per split and target
  double threshold = 0.5;
  bool with_tta = true;
  bool with_single = true;
  int jobs = 1;
  SplitScorer scorer;  // empty = train the real model
};

// Group samples by lesion, preserving first-appearance order; views sorted
// by view index within each group.
std::vector<LesionGroup> group_lesions(const std::vector<LabeledSample>& samples);

// Repeated k-fold driver. For every split and both targets: fit input
// normalization on the training samples, train a fresh model (seeded from
// the split and the target name), score each test-patient lesion from its
// views, and compute lesion-level metrics for the mean-over-views score
// (tta) and/or the unrotated-view score. Rows, predictions, and warnings
// are merged in a fixed order (target, then tta before single, then split)
// regardless of --jobs. A single-class test fold leaves that row's AUC
// missing and appends a warning.
ReportTable cross_validate_full(const std::vector<LabeledSample>& samples, const SplitPlan& plan,
                                const CrossValidateConfig& config);

// Single-variant wrapper: TTA scoring when `tta` is true, otherwise the
// unrotated view only. Produces rows for both targets.
ReportTable cross_validate(const std::vector<LabeledSample>& samples, const SplitPlan& plan,
                           const nn::TrainConfig& train_cfg, bool tta);

// One (split, target) fit that also hands the trained model back, for
// checkpointing. Rows come in fixed order: tta first, then single-view.
struct SingleSplitOutput {
  nn::Model model;
  std::vector<SplitRow> rows;
  std::vector<PredictionRow> predictions;
  std::vector<std::string> warnings;
};
SingleSplitOutput train_single_split(const std::vector<LabeledSample>& samples, const Split& split,
                                     nn::Target target, const nn::TrainConfig& train_cfg,
                                     double threshold = 0.5);

}  // namespace mprkit::eval
