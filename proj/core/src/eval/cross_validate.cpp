#include "mprkit/eval/cross_validate.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mprkit/nn/model.hpp"
#include "mprkit/parallel.hpp"
#include "mprkit/seeding.hpp"
#include "mprkit/shaping.hpp"

namespace mprkit::eval {

namespace {

constexpr int kTargets = 2;
constexpr int kVariants = 2;  // 0 = tta, 1 = single view

nn::Target target_at(int index) {
  return index == 0 ? nn::Target::kSignificant : nn::Target::kRevascularised;
}

struct VariantResult {
  SplitRow row;
  std::vector<PredictionRow> predictions;
  std::optional<std::string> warning;
};

struct SplitResult {
  std::optional<VariantResult> variants[kTargets][kVariants];
};

struct SplitData {
  std::vector<const LabeledSample*> train_samples;
  std::vector<const LesionGroup*> test_lesions;
};

SplitData partition_split(const Split& split, const std::vector<LabeledSample>& samples,
                          const std::vector<LesionGroup>& groups) {
  const std::unordered_set<std::string> train_set(split.train_patients.begin(),
                                                  split.train_patients.end());
  const std::unordered_set<std::string> test_set(split.test_patients.begin(),
                                                 split.test_patients.end());
  for (const std::string& patient : split.test_patients) {
    if (train_set.count(patient) != 0) {
      throw std::logic_error("patient leakage across split (rep " + std::to_string(split.rep) +
                             ", fold " + std::to_string(split.fold) + ")");
    }
  }

  SplitData data;
  for (const LabeledSample& sample : samples) {
    if (train_set.count(sample.patient_id) != 0) data.train_samples.push_back(&sample);
  }
  for (const LesionGroup& group : groups) {
    if (test_set.count(group.patient_id) != 0) data.test_lesions.push_back(&group);
  }
  if (data.train_samples.empty()) {
    throw std::runtime_error("no training samples in split (rep " + std::to_string(split.rep) +
                             ", fold " + std::to_string(split.fold) + ")");
  }
  if (data.test_lesions.empty()) {
    throw std::runtime_error("no test lesions in split (rep " + std::to_string(split.rep) +
                             ", fold " + std::to_string(split.fold) + ")");
  }
  return data;
}

NormStats fit_norm(const std::vector<const LabeledSample*>& train_samples) {
  std::vector<const std::vector<double>*> tensors;
  tensors.reserve(train_samples.size());
  for (const LabeledSample* sample : train_samples) tensors.push_back(&sample->tensor.data);
  return compute_norm_stats(tensors);
}

nn::Model fit_split_model(const Split& split, nn::Target target, const NormStats& norm,
                          const std::vector<const LabeledSample*>& train_samples,
                          const nn::TrainConfig& base_cfg) {
  nn::Model model = nn::build_25d_model(seed_combine(split.init_seed, nn::target_name(target)));
  model.norm = norm;
  nn::TrainConfig cfg = base_cfg;
  cfg.seed = model.seed;
  cfg.target = target;
  nn::train(model, train_samples, cfg);
  return model;
}

std::vector<std::vector<double>> score_lesions(nn::Model& model,
                                               const std::vector<const LesionGroup*>& lesions) {
  std::vector<std::vector<double>> probs;
  probs.reserve(lesions.size());
  for (const LesionGroup* lesion : lesions) {
    std::vector<const std::vector<double>*> views;
    views.reserve(lesion->views.size());
    for (const LabeledSample* view : lesion->views) views.push_back(&view->tensor.data);
    probs.push_back(nn::predict_views(model, views));
  }
  return probs;
}

struct LesionScores {
  std::vector<int> labels;
  std::vector<double> tta;
  std::vector<double> single;
};

LesionScores aggregate_scores(nn::Target target, const std::vector<const LesionGroup*>& lesions,
                              const std::vector<std::vector<double>>& view_probs) {
  if (view_probs.size() != lesions.size()) {
    throw std::logic_error("scorer returned a lesion count mismatch");
  }
  LesionScores scores;
  scores.labels.resize(lesions.size());
  scores.tta.resize(lesions.size());
  scores.single.resize(lesions.size());
  for (size_t l = 0; l < lesions.size(); ++l) {
    if (view_probs[l].empty()) throw std::logic_error("scorer returned an empty view list");
    const LesionGroup& lesion = *lesions[l];
    scores.labels[l] =
        (target == nn::Target::kSignificant ? lesion.significant : lesion.revascularised) ? 1 : 0;
    double sum = 0.0;
    for (double p : view_probs[l]) sum += p;
    scores.tta[l] = sum / static_cast<double>(view_probs[l].size());
    scores.single[l] = view_probs[l].front();
  }
  return scores;
}

VariantResult make_variant(nn::Target target, bool tta, const Split& split,
                           const std::vector<const LesionGroup*>& lesions,
                           const std::vector<int>& labels, const std::vector<double>& scores,
                           double threshold) {
  VariantResult variant;
  variant.row.target = nn::target_name(target);
  variant.row.tta = tta;
  variant.row.split_rep = split.rep;
  variant.row.split_fold = split.fold;
  variant.row.metrics = compute_metrics(labels, scores, threshold);
  if (!variant.row.metrics.auc_defined) {
    variant.warning = "AUC undefined (single-class test fold): target=" + nn::target_name(target) +
                      " tta=" + (tta ? "1" : "0") + " rep=" + std::to_string(split.rep) +
                      " fold=" + std::to_string(split.fold);
  }
  variant.predictions.reserve(lesions.size());
  for (size_t l = 0; l < lesions.size(); ++l) {
    PredictionRow pred;
    pred.target = variant.row.target;
    pred.tta = tta;
    pred.split_rep = split.rep;
    pred.split_fold = split.fold;
    pred.patient_id = lesions[l]->patient_id;
    pred.lesion_id = lesions[l]->lesion_id;
    pred.label = labels[l];
    pred.score = scores[l];
    variant.predictions.push_back(std::move(pred));
  }
  return variant;
}

SplitResult run_split(const Split& split, const std::vector<LabeledSample>& samples,
                      const std::vector<LesionGroup>& groups, const CrossValidateConfig& config) {
  const SplitData data = partition_split(split, samples, groups);

  // Input normalization is fit once per split, on training samples only,
  // and shared by both targets. Computed lazily so injected scorers never
  // require real image statistics.
  std::optional<NormStats> norm;

  SplitResult result;
  for (int t = 0; t < kTargets; ++t) {
    const nn::Target target = target_at(t);
    std::vector<std::vector<double>> view_probs;
    if (config.scorer) {
      view_probs = config.scorer(split, target, data.train_samples, data.test_lesions);
    } else {
      if (!norm) norm = fit_norm(data.train_samples);
      nn::Model model = fit_split_model(split, target, *norm, data.train_samples, config.train);
      view_probs = score_lesions(model, data.test_lesions);
    }
    const LesionScores scores = aggregate_scores(target, data.test_lesions, view_probs);

    for (int v = 0; v < kVariants; ++v) {
      const bool tta = v == 0;
      if (tta && !config.with_tta) continue;
      if (!tta && !config.with_single) continue;
      result.variants[t][v] = make_variant(target, tta, split, data.test_lesions, scores.labels,
                                           tta ? scores.tta : scores.single, config.threshold);
    }
  }
  return result;
}

}  // namespace

std::vector<LesionGroup> group_lesions(const std::vector<LabeledSample>& samples) {
  std::vector<LesionGroup> groups;
  std::unordered_map<std::string, size_t> index;
  for (const LabeledSample& sample : samples) {
    auto [it, inserted] = index.emplace(sample.lesion_id, groups.size());
    if (inserted) {
      LesionGroup group;
      group.patient_id = sample.patient_id;
      group.branch_id = sample.branch_id;
      group.lesion_id = sample.lesion_id;
      group.significant = sample.significant;
      group.revascularised = sample.revascularised;
      groups.push_back(std::move(group));
    }
    LesionGroup& group = groups[it->second];
    if (group.patient_id != sample.patient_id || group.significant != sample.significant ||
        group.revascularised != sample.revascularised) {
      throw std::invalid_argument("inconsistent labels across views of lesion '" +
                                  sample.lesion_id + "'");
    }
    group.views.push_back(&sample);
  }
  for (LesionGroup& group : groups) {
    std::stable_sort(group.views.begin(), group.views.end(),
                     [](const LabeledSample* a, const LabeledSample* b) {
                       return a->view_k < b->view_k;
                     });
  }
  return groups;
}

ReportTable cross_validate_full(const std::vector<LabeledSample>& samples, const SplitPlan& plan,
                                const CrossValidateConfig& config) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  if (plan.splits.empty()) throw std::invalid_argument("empty split plan");
  if (!config.with_tta && !config.with_single) {
    throw std::invalid_argument("nothing to score: both tta and single-view disabled");
  }

  const std::vector<LesionGroup> groups = group_lesions(samples);
  std::vector<SplitResult> results(plan.splits.size());
  parallel_for(plan.splits.size(), static_cast<unsigned>(std::max(config.jobs, 1)), [&](size_t i) {
    results[i] = run_split(plan.splits[i], samples, groups, config);
  });

  ReportTable table;
  for (int t = 0; t < kTargets; ++t) {
    for (int v = 0; v < kVariants; ++v) {
      for (const SplitResult& result : results) {
        const std::optional<VariantResult>& variant = result.variants[t][v];
        if (!variant) continue;
        table.rows.push_back(variant->row);
        table.predictions.insert(table.predictions.end(), variant->predictions.begin(),
                                 variant->predictions.end());
        if (variant->warning) table.warnings.push_back(*variant->warning);
      }
    }
  }
  return table;
}

ReportTable cross_validate(const std::vector<LabeledSample>& samples, const SplitPlan& plan,
                           const nn::TrainConfig& train_cfg, bool tta) {
  CrossValidateConfig config;
  config.train = train_cfg;
  config.with_tta = tta;
  config.with_single = !tta;
  return cross_validate_full(samples, plan, config);
}

SingleSplitOutput train_single_split(const std::vector<LabeledSample>& samples, const Split& split,
                                     nn::Target target, const nn::TrainConfig& train_cfg,
                                     double threshold) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  const std::vector<LesionGroup> groups = group_lesions(samples);
  const SplitData data = partition_split(split, samples, groups);
  const NormStats norm = fit_norm(data.train_samples);

  SingleSplitOutput output{fit_split_model(split, target, norm, data.train_samples, train_cfg),
                           {},
                           {},
                           {}};
  const std::vector<std::vector<double>> view_probs = score_lesions(output.model, data.test_lesions);
  const LesionScores scores = aggregate_scores(target, data.test_lesions, view_probs);
  for (const bool tta : {true, false}) {
    VariantResult variant = make_variant(target, tta, split, data.test_lesions, scores.labels,
                                         tta ? scores.tta : scores.single, threshold);
    output.rows.push_back(std::move(variant.row));
    output.predictions.insert(output.predictions.end(), variant.predictions.begin(),
                              variant.predictions.end());
    if (variant.warning) output.warnings.push_back(*variant.warning);
  }
  return output;
}

}  // namespace mprkit::eval
