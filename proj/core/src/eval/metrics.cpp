#include "mprkit/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mprkit::eval {

namespace {

void check_inputs(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) {
    throw std::invalid_argument("labels and scores must have the same length");
  }
  for (int label : labels) {
    if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
  for (double score : scores) {
    if (!std::isfinite(score)) throw std::invalid_argument("scores must be finite");
  }
}

}  // namespace

double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  check_inputs(labels, scores);
  const size_t n = labels.size();
  const long npos = std::count(labels.begin(), labels.end(), 1);
  const long nneg = static_cast<long>(n) - npos;
  if (npos == 0 || nneg == 0) throw std::domain_error("AUC undefined");

  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t) {
      if (labels[idx[t]] == 1) positive_rank_sum += midrank;
    }
    i = j + 1;
  }

  const double u = positive_rank_sum -
                   0.5 * static_cast<double>(npos) * (static_cast<double>(npos) + 1.0);
  return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

ConfusionCounts count_confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                                double threshold) {
  check_inputs(labels, scores);
  ConfusionCounts counts;
  for (size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    if (labels[i] == 1) {
      predicted ? ++counts.tp : ++counts.fn;
    } else {
      predicted ? ++counts.fp : ++counts.tn;
    }
  }
  return counts;
}

MetricSet compute_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                          double threshold) {
  if (labels.empty()) throw std::invalid_argument("no samples");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold must lie in (0, 1)");
  }
  check_inputs(labels, scores);

  const ConfusionCounts c = count_confusion(labels, scores, threshold);
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double n = tp + fp + tn + fn;

  MetricSet m;
  m.accuracy = (tp + tn) / n;
  m.sensitivity = (tp + fn) > 0.0 ? tp / (tp + fn) : 0.0;
  m.specificity = (tn + fp) > 0.0 ? tn / (tn + fp) : 0.0;
  m.f1 = (2.0 * tp + fp + fn) > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  const double f1d = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = f1d > 0.0 ? (tp * tn - fp * fn) / std::sqrt(f1d) : 0.0;

  try {
    m.auc = roc_auc(labels, scores);
    m.auc_defined = true;
  } catch (const std::domain_error&) {
    m.auc = std::numeric_limits<double>::quiet_NaN();
    m.auc_defined = false;
  }
  return m;
}

}  // namespace mprkit::eval
