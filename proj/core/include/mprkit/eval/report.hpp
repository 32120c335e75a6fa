#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mprkit/eval/cross_validate.hpp"

namespace mprkit::eval {

struct SummaryRow {
  std::string target;
  bool tta = false;
  std::string metric;  // auc, accuracy, f1, sensitivity, specificity, mcc
  double mean = 0.0;
  double std_dev = 0.0;
  int count = 0;  // rows contributing (AUC skips splits where it was undefined)
};

// Per-split CSV: target,tta,split_rep,split_fold,auc,accuracy,f1,sensitivity,
// specificity,mcc. An undefined AUC is written as an empty field.
void write_rows_csv(const std::vector<SplitRow>& rows, const std::filesystem::path& path);
std::vector<SplitRow> load_rows_csv(const std::filesystem::path& path);

// Mean and sample standard deviation (n-1) of every metric over the split
// rows of each (target, tta) group, groups in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<SplitRow>& rows);

// Summary CSV: target,tta,metric,mean,std.
void write_summary_csv(const std::vector<SummaryRow>& summary, const std::filesystem::path& path);

// Lesion-level scores: target,tta,split_rep,split_fold,patient_id,lesion_id,
// label,score.
void write_predictions_csv(const std::vector<PredictionRow>& predictions,
                           const std::filesystem::path& path);
std::vector<PredictionRow> load_predictions_csv(const std::filesystem::path& path);

// Fixed-width text table of the summary, one line per (target, tta) group.
std::string render_summary_table(const std::vector<SummaryRow>& summary);

// Self-contained SVG with one pooled ROC polyline per (target, tta) group.
std::string render_roc_svg(const std::vector<PredictionRow>& predictions);

}  // namespace mprkit::eval
