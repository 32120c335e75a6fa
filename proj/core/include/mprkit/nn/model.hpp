#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mprkit/nn/layers.hpp"
#include "mprkit/nn/tensor.hpp"
#include "mprkit/shaping.hpp"

namespace mprkit::nn {

// Which manifest label a model is trained against.
enum class Target { kSignificant, kRevascularised };

std::string target_name(Target target);
Target target_from_name(const std::string& name);

// Parameter gradients, one tensor per trainable parameter in layer order.
using Gradients = std::vector<Tensor>;

struct LayerSpec {
  std::string kind;
  std::vector<std::pair<std::string, int>> hyperparams;
};

// A feed-forward classifier plus its optimizer state. Owns its layers;
// movable, not copyable.
struct Model {
  std::vector<std::unique_ptr<Layer>> layers;
  std::vector<int> input_shape;  // per-sample shape, e.g. {2, 64, 32}
  std::uint64_t seed = 0;
  std::int64_t step = 0;     // completed optimizer steps
  int epochs_done = 0;
  NormStats norm;            // applied to inputs at batch-assembly time
  std::vector<Tensor> moment1;
  std::vector<Tensor> moment2;

  std::vector<Tensor*> params();
  std::vector<Tensor*> param_grads();
  std::vector<Tensor*> state();
  std::vector<LayerSpec> architecture() const;
  std::size_t param_count();
};

// Two-channel longitudinal-slice classifier:
// 3 x [3x3 conv -> batchnorm -> relu -> 2x2 maxpool] with 16/32/64 channels,
// then flatten -> dense 128 -> relu -> dense 1. Weights use He-uniform init
// drawn deterministically from the seed; biases start at zero.
Model build_25d_model(std::uint64_t seed);

// Rebuild an (uninitialized) model from an architecture description.
Model build_from_specs(const std::vector<LayerSpec>& specs, const std::vector<int>& input_shape);

// Run the network on a batch shaped {N, input_shape...}; returns sigmoid
// probabilities, one per sample. Eval mode uses batchnorm running stats.
std::vector<double> forward_probs(Model& model, const Tensor& batch, bool train);

// Mean binary cross-entropy over the batch with probabilities clamped to
// [1e-7, 1 - 1e-7]; runs backward and snapshots parameter gradients into
// `grads`. Samples whose raw probability lies outside the clamp range
// contribute zero gradient (the clamp is flat there).
double loss_and_grads(Model& model, const Tensor& batch, const std::vector<double>& labels,
                      Gradients& grads);

// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected).
void optimizer_step(Model& model, const Gradients& grads, double learning_rate);

// Per-view probabilities for one lesion: all views are normalized with the
// model's stored stats and scored in a single eval-mode forward pass.
std::vector<double> predict_views(Model& model, const std::vector<const std::vector<double>*>& views);

// Lesion-level score: mean over all views (tta) or the unrotated view alone.
double predict(Model& model, const std::vector<const std::vector<double>*>& views, bool tta);

}  // namespace mprkit::nn
