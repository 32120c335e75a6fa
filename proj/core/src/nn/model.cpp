#include "mprkit/nn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mprkit/seeding.hpp"

namespace mprkit::nn {

namespace {

constexpr double kProbFloor = 1e-7;
constexpr double kProbCeil = 1.0 - 1e-7;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_batch_shape(const Model& model, const Tensor& batch) {
  bool ok = batch.shape.size() == model.input_shape.size() + 1 && batch.shape[0] >= 1;
  if (ok) {
    for (size_t i = 0; i < model.input_shape.size(); ++i) {
      if (batch.shape[i + 1] != model.input_shape[i]) ok = false;
    }
  }
  if (!ok) throw std::invalid_argument("architecture/input mismatch");
}

Tensor forward_logits(Model& model, const Tensor& batch, bool train) {
  check_batch_shape(model, batch);
  Tensor y = batch;
  for (auto& layer : model.layers) y = layer->forward(y, train);
  if (y.shape.size() != 2 || y.shape[1] != 1) {
    throw std::invalid_argument("architecture/input mismatch: model head is not a single logit");
  }
  for (double v : y.data) {
    if (!std::isfinite(v)) throw std::runtime_error("numerical failure: non-finite logit");
  }
  return y;
}

void init_moments(Model& model) {
  model.moment1.clear();
  model.moment2.clear();
  for (Tensor* p : model.params()) {
    model.moment1.emplace_back(p->shape);
    model.moment2.emplace_back(p->shape);
  }
}

}  // namespace

std::string target_name(Target target) {
  return target == Target::kSignificant ? "significant" : "revascularised";
}

Target target_from_name(const std::string& name) {
  if (name == "significant") return Target::kSignificant;
  if (name == "revascularised") return Target::kRevascularised;
  throw std::invalid_argument("unknown target '" + name + "'");
}

std::vector<Tensor*> Model::params() {
  std::vector<Tensor*> out;
  for (auto& layer : layers) {
    for (Tensor* p : layer->params()) out.push_back(p);
  }
  return out;
}

std::vector<Tensor*> Model::param_grads() {
  std::vector<Tensor*> out;
  for (auto& layer : layers) {
    for (Tensor* g : layer->param_grads()) out.push_back(g);
  }
  return out;
}

std::vector<Tensor*> Model::state() {
  std::vector<Tensor*> out;
  for (auto& layer : layers) {
    for (Tensor* s : layer->state()) out.push_back(s);
  }
  return out;
}

std::vector<LayerSpec> Model::architecture() const {
  std::vector<LayerSpec> specs;
  specs.reserve(layers.size());
  for (const auto& layer : layers) specs.push_back({layer->kind(), layer->hyperparams()});
  return specs;
}

std::size_t Model::param_count() {
  std::size_t n = 0;
  for (Tensor* p : params()) n += p->size();
  return n;
}

Model build_25d_model(std::uint64_t seed) {
  Model model;
  model.input_shape = {2, 64, 32};
  model.seed = seed;

  const int channels[3] = {16, 32, 64};
  int in_c = 2;
  for (int stage = 0; stage < 3; ++stage) {
    model.layers.push_back(std::make_unique<Conv2D>(in_c, channels[stage]));
    model.layers.push_back(std::make_unique<BatchNorm2D>(channels[stage]));
    model.layers.push_back(std::make_unique<ReLU>());
    model.layers.push_back(std::make_unique<MaxPool2x2>());
    in_c = channels[stage];
  }
  model.layers.push_back(std::make_unique<Flatten>());
  model.layers.push_back(std::make_unique<Dense>(64 * 8 * 4, 128));
  model.layers.push_back(std::make_unique<ReLU>());
  model.layers.push_back(std::make_unique<Dense>(128, 1));

  Rng rng(seed_combine(seed, "init"));
  for (auto& layer : model.layers) {
    const std::string kind = layer->kind();
    if (kind != "conv2d" && kind != "dense") continue;
    Tensor* weight = layer->params()[0];  // weight first, bias second
    const double fan_in = static_cast<double>(weight->shape[1]);
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& w : weight->data) w = rng.uniform(-limit, limit);
  }

  init_moments(model);
  return model;
}

Model build_from_specs(const std::vector<LayerSpec>& specs, const std::vector<int>& input_shape) {
  Model model;
  model.input_shape = input_shape;
  for (const auto& spec : specs) model.layers.push_back(make_layer(spec.kind, spec.hyperparams));
  init_moments(model);
  return model;
}

std::vector<double> forward_probs(Model& model, const Tensor& batch, bool train) {
  Tensor logits = forward_logits(model, batch, train);
  std::vector<double> probs(logits.data.size());
  for (size_t i = 0; i < probs.size(); ++i) probs[i] = sigmoid(logits.data[i]);
  return probs;
}

double loss_and_grads(Model& model, const Tensor& batch, const std::vector<double>& labels,
                      Gradients& grads) {
  const int n = batch.shape.empty() ? 0 : batch.shape[0];
  if (static_cast<int>(labels.size()) != n || n == 0) {
    throw std::invalid_argument("labels do not match batch");
  }
  for (auto& layer : model.layers) layer->zero_grads();

  Tensor logits = forward_logits(model, batch, /*train=*/true);
  Tensor dz({n, 1});
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = labels[i];
    const double p_raw = sigmoid(logits.data[i]);
    const double p = std::min(std::max(p_raw, kProbFloor), kProbCeil);
    loss += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    const bool clamped = p_raw < kProbFloor || p_raw > kProbCeil;
    dz.data[i] = clamped ? 0.0 : (p_raw - y) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss)) throw std::runtime_error("numerical failure: non-finite loss");

  Tensor grad = dz;
  for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
    grad = (*it)->backward(grad);
  }

  grads.clear();
  for (Tensor* g : model.param_grads()) grads.push_back(*g);
  return loss;
}

void optimizer_step(Model& model, const Gradients& grads, double learning_rate) {
  std::vector<Tensor*> params = model.params();
  if (grads.size() != params.size()) throw std::runtime_error("corrupt gradient: tensor count");
  for (size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape != params[i]->shape) {
      throw std::runtime_error("corrupt gradient: tensor shape");
    }
    for (double g : grads[i].data) {
      if (!std::isfinite(g)) throw std::runtime_error("corrupt gradient: non-finite value");
    }
  }

  model.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(model.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(model.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& m = model.moment1[i];
    Tensor& v = model.moment2[i];
    Tensor& p = *params[i];
    const std::vector<double>& g = grads[i].data;
    for (size_t j = 0; j < g.size(); ++j) {
      m.data[j] = kAdamBeta1 * m.data[j] + (1.0 - kAdamBeta1) * g[j];
      v.data[j] = kAdamBeta2 * v.data[j] + (1.0 - kAdamBeta2) * g[j] * g[j];
      const double m_hat = m.data[j] / bc1;
      const double v_hat = v.data[j] / bc2;
      p.data[j] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

std::vector<double> predict_views(Model& model,
                                  const std::vector<const std::vector<double>*>& views) {
  if (views.empty()) throw std::invalid_argument("no views");
  size_t per_sample = 1;
  for (int d : model.input_shape) per_sample *= static_cast<size_t>(d);
  for (const auto* view : views) {
    if (view == nullptr || view->size() != per_sample) {
      throw std::invalid_argument("architecture/input mismatch");
    }
  }

  std::vector<int> shape;
  shape.push_back(static_cast<int>(views.size()));
  shape.insert(shape.end(), model.input_shape.begin(), model.input_shape.end());
  Tensor batch(shape);
  const double mean = model.norm.mean;
  const double inv_std = 1.0 / model.norm.std;
  for (size_t s = 0; s < views.size(); ++s) {
    const std::vector<double>& v = *views[s];
    double* dst = batch.data.data() + s * per_sample;
    for (size_t i = 0; i < per_sample; ++i) dst[i] = (v[i] - mean) * inv_std;
  }
  return forward_probs(model, batch, /*train=*/false);
}

double predict(Model& model, const std::vector<const std::vector<double>*>& views, bool tta) {
  const std::vector<double> probs = predict_views(model, views);
  if (!tta) return probs.front();
  double sum = 0.0;
  for (double p : probs) sum += p;
  return sum / static_cast<double>(probs.size());
}

}  // namespace mprkit::nn
