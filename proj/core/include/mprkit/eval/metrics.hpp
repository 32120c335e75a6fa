#pragma once

#include <vector>

namespace mprkit::eval {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

struct MetricSet {
  double auc = 0.0;
  bool auc_defined = false;
  double accuracy = 0.0;
  double f1 = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double mcc = 0.0;
};

// Area under the ROC curve via the rank (Mann-Whitney) formulation; tied
// scores receive their midrank, which matches the trapezoidal sweep over
// unique thresholds. Labels are 0/1. Throws "AUC undefined" when the input
// holds a single class.
double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);

// A sample is predicted positive when its score exceeds the threshold.
ConfusionCounts count_confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                                double threshold);

// Full metric row: AUC plus thresholded confusion metrics. Ratios with a
// zero denominator (and MCC with any zero factor) evaluate to 0. A
// single-class input leaves the AUC marked undefined instead of throwing.
MetricSet compute_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold = 0.5);

}  // namespace mprkit::eval
