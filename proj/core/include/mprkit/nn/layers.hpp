#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mprkit/nn/tensor.hpp"

namespace mprkit::nn {

// One differentiable stage. forward() caches whatever backward() needs;
// backward() consumes the cache, accumulates parameter gradients, and
// returns the gradient with respect to its input. Layers are exclusively
// owned by one model and are not thread-safe across calls.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  // Integer hyperparameters, serialized into checkpoints.
  virtual std::vector<std::pair<std::string, int>> hyperparams() const { return {}; }

  virtual Tensor forward(const Tensor& x, bool train) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<Tensor*> param_grads() { return {}; }
  // Non-trained persistent state (batchnorm running statistics).
  virtual std::vector<Tensor*> state() { return {}; }

  void zero_grads() {
    for (Tensor* g : param_grads()) std::fill(g->data.begin(), g->data.end(), 0.0);
  }
};

// 3x3 convolution, stride 1, same padding, via per-sample im2col + GEMM.
class Conv2D : public Layer {
 public:
  Conv2D(int in_channels, int out_channels);

  std::string kind() const override { return "conv2d"; }
  std::vector<std::pair<std::string, int>> hyperparams() const override {
    return {{"in", in_c_}, {"out", out_c_}};
  }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<Tensor*> param_grads() override { return {&dweight_, &dbias_}; }

 private:
  int in_c_;
  int out_c_;
  Tensor weight_;   // [out_c, in_c*9]
  Tensor bias_;     // [out_c]
  Tensor dweight_;
  Tensor dbias_;
  // forward cache
  std::vector<int> in_shape_;
  std::vector<double> cols_;  // N x [in_c*9 x H*W]
};

// Per-channel batch normalization over N x C x H x W, biased variance,
// running statistics updated with momentum 0.9 in train mode.
class BatchNorm2D : public Layer {
 public:
  explicit BatchNorm2D(int channels);

  std::string kind() const override { return "batchnorm"; }
  std::vector<std::pair<std::string, int>> hyperparams() const override {
    return {{"channels", channels_}};
  }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Tensor*> params() override { return {&gamma_, &beta_}; }
  std::vector<Tensor*> param_grads() override { return {&dgamma_, &dbeta_}; }
  std::vector<Tensor*> state() override { return {&running_mean_, &running_var_}; }

  static constexpr double kMomentum = 0.9;
  static constexpr double kEps = 1e-5;

 private:
  int channels_;
  Tensor gamma_, beta_, dgamma_, dbeta_;
  Tensor running_mean_, running_var_;
  // forward cache
  std::vector<int> in_shape_;
  std::vector<double> xhat_;
  std::vector<double> inv_std_;  // per channel
  bool cached_train_ = false;
};

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<char> positive_;
};

// 2x2 max pooling with stride 2; the subgradient routes to the first
// maximum in scan order, so exactly one input per window receives it.
class MaxPool2x2 : public Layer {
 public:
  std::string kind() const override { return "maxpool"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
  std::vector<size_t> argmax_;
};

class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> in_shape_;
};

class Dense : public Layer {
 public:
  Dense(int in_features, int out_features);

  std::string kind() const override { return "dense"; }
  std::vector<std::pair<std::string, int>> hyperparams() const override {
    return {{"in", in_f_}, {"out", out_f_}};
  }
  Tensor forward(const Tensor& x, bool train) override;
  Tensor backward(const Tensor& dy) override;
  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<Tensor*> param_grads() override { return {&dweight_, &dbias_}; }

 private:
  int in_f_;
  int out_f_;
  Tensor weight_;  // [out, in]
  Tensor bias_;    // [out]
  Tensor dweight_;
  Tensor dbias_;
  std::vector<double> input_cache_;
  int cached_n_ = 0;
};

std::unique_ptr<Layer> make_layer(const std::string& kind,
                                  const std::vector<std::pair<std::string, int>>& hyperparams);

}  // namespace mprkit::nn
