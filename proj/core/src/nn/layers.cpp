#include "mprkit/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "mprkit/nn/matmul.hpp"

namespace mprkit::nn {

namespace {

void require_4d(const Tensor& x, int channels, const char* who) {
  if (x.shape.size() != 4 || x.shape[1] != channels) {
    throw std::invalid_argument(std::string("architecture/input mismatch in ") + who);
  }
}

int hyper(const std::vector<std::pair<std::string, int>>& hp, const std::string& name) {
  for (const auto& [key, value] : hp) {
    if (key == name) return value;
  }
  throw std::runtime_error("incompatible checkpoint: missing hyperparam '" + name + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2D

Conv2D::Conv2D(int in_channels, int out_channels)
    : in_c_(in_channels),
      out_c_(out_channels),
      weight_({out_channels, in_channels * 9}),
      bias_({out_channels}),
      dweight_({out_channels, in_channels * 9}),
      dbias_({out_channels}) {}

Tensor Conv2D::forward(const Tensor& x, bool train) {
  require_4d(x, in_c_, "conv2d");
  const int n = x.shape[0];
  const int h = x.shape[2];
  const int w = x.shape[3];
  const int hw = h * w;
  const int rows = in_c_ * 9;

  in_shape_ = x.shape;
  cols_.assign(static_cast<size_t>(n) * rows * hw, 0.0);

  Tensor y({n, out_c_, h, w});
  for (int s = 0; s < n; ++s) {
    double* col = cols_.data() + static_cast<size_t>(s) * rows * hw;
    const double* xs = x.data.data() + static_cast<size_t>(s) * in_c_ * hw;
    for (int c = 0; c < in_c_; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          double* dst = col + static_cast<size_t>((c * 9 + ky * 3 + kx)) * hw;
          for (int yy = 0; yy < h; ++yy) {
            const int sy = yy + ky - 1;
            if (sy < 0 || sy >= h) continue;  // dst already zero
            const double* src = xs + static_cast<size_t>(c) * hw + static_cast<size_t>(sy) * w;
            const int sx0 = kx - 1;
            for (int xx = 0; xx < w; ++xx) {
              const int sx = xx + sx0;
              if (sx >= 0 && sx < w) dst[yy * w + xx] = src[sx];
            }
          }
        }
      }
    }
    double* ys = y.data.data() + static_cast<size_t>(s) * out_c_ * hw;
    matmul(false, false, out_c_, hw, rows, weight_.data.data(), col, ys);
    for (int oc = 0; oc < out_c_; ++oc) {
      const double b = bias_.data[oc];
      double* row = ys + static_cast<size_t>(oc) * hw;
      for (int i = 0; i < hw; ++i) row[i] += b;
    }
  }
  if (!train) {
    cols_.clear();
    cols_.shrink_to_fit();
  }
  return y;
}

Tensor Conv2D::backward(const Tensor& dy) {
  if (in_shape_.empty() || cols_.empty()) {
    throw std::logic_error("conv2d backward without cached forward");
  }
  const int n = in_shape_[0];
  const int h = in_shape_[2];
  const int w = in_shape_[3];
  const int hw = h * w;
  const int rows = in_c_ * 9;

  Tensor dx(in_shape_);
  std::vector<double> dcol(static_cast<size_t>(rows) * hw);
  for (int s = 0; s < n; ++s) {
    const double* dys = dy.data.data() + static_cast<size_t>(s) * out_c_ * hw;
    const double* col = cols_.data() + static_cast<size_t>(s) * rows * hw;
    for (int oc = 0; oc < out_c_; ++oc) {
      const double* row = dys + static_cast<size_t>(oc) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += row[i];
      dbias_.data[oc] += acc;
    }
    // dW += dy_s x cols_s^T
    matmul(false, true, out_c_, rows, hw, dys, col, dweight_.data.data(), true);
    // dcols = W^T x dy_s
    matmul(true, false, rows, hw, out_c_, weight_.data.data(), dys, dcol.data());
    double* dxs = dx.data.data() + static_cast<size_t>(s) * in_c_ * hw;
    for (int c = 0; c < in_c_; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double* src = dcol.data() + static_cast<size_t>((c * 9 + ky * 3 + kx)) * hw;
          for (int yy = 0; yy < h; ++yy) {
            const int sy = yy + ky - 1;
            if (sy < 0 || sy >= h) continue;
            double* dst = dxs + static_cast<size_t>(c) * hw + static_cast<size_t>(sy) * w;
            const int sx0 = kx - 1;
            for (int xx = 0; xx < w; ++xx) {
              const int sx = xx + sx0;
              if (sx >= 0 && sx < w) dst[sx] += src[yy * w + xx];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2D

BatchNorm2D::BatchNorm2D(int channels)
    : channels_(channels),
      gamma_({channels}),
      beta_({channels}),
      dgamma_({channels}),
      dbeta_({channels}),
      running_mean_({channels}),
      running_var_({channels}) {
  std::fill(gamma_.data.begin(), gamma_.data.end(), 1.0);
  std::fill(running_var_.data.begin(), running_var_.data.end(), 1.0);
}

Tensor BatchNorm2D::forward(const Tensor& x, bool train) {
  require_4d(x, channels_, "batchnorm");
  const int n = x.shape[0];
  const int c = channels_;
  const int h = x.shape[2];
  const int w = x.shape[3];
  const int hw = h * w;
  const size_t m = static_cast<size_t>(n) * hw;
  if (train && n < 2) throw std::invalid_argument("batch too small for batchnorm");

  in_shape_ = x.shape;
  cached_train_ = train;
  xhat_.resize(x.data.size());
  inv_std_.resize(c);

  Tensor y(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    double mean;
    double inv_std;
    if (train) {
      double sum = 0.0;
      for (int s = 0; s < n; ++s) {
        const double* px = x.data.data() + (static_cast<size_t>(s) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) sum += px[i];
      }
      mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (int s = 0; s < n; ++s) {
        const double* px = x.data.data() + (static_cast<size_t>(s) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) {
          const double d = px[i] - mean;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(m);
      inv_std = 1.0 / std::sqrt(var + kEps);
      running_mean_.data[ch] = kMomentum * running_mean_.data[ch] + (1.0 - kMomentum) * mean;
      running_var_.data[ch] = kMomentum * running_var_.data[ch] + (1.0 - kMomentum) * var;
    } else {
      mean = running_mean_.data[ch];
      inv_std = 1.0 / std::sqrt(running_var_.data[ch] + kEps);
    }
    inv_std_[ch] = inv_std;
    const double g = gamma_.data[ch];
    const double b = beta_.data[ch];
    for (int s = 0; s < n; ++s) {
      const size_t base = (static_cast<size_t>(s) * c + ch) * hw;
      for (int i = 0; i < hw; ++i) {
        const double xh = (x.data[base + i] - mean) * inv_std;
        xhat_[base + i] = xh;
        y.data[base + i] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2D::backward(const Tensor& dy) {
  if (in_shape_.empty()) throw std::logic_error("batchnorm backward without cached forward");
  const int n = in_shape_[0];
  const int c = channels_;
  const int hw = in_shape_[2] * in_shape_[3];
  const double m = static_cast<double>(static_cast<size_t>(n) * hw);

  Tensor dx(in_shape_);
  for (int ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int s = 0; s < n; ++s) {
      const size_t base = (static_cast<size_t>(s) * c + ch) * hw;
      for (int i = 0; i < hw; ++i) {
        sum_dy += dy.data[base + i];
        sum_dy_xhat += dy.data[base + i] * xhat_[base + i];
      }
    }
    dbeta_.data[ch] += sum_dy;
    dgamma_.data[ch] += sum_dy_xhat;
    const double g = gamma_.data[ch];
    const double inv_std = inv_std_[ch];
    if (cached_train_) {
      const double k1 = g * inv_std / m;
      for (int s = 0; s < n; ++s) {
        const size_t base = (static_cast<size_t>(s) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) {
          dx.data[base + i] =
              k1 * (m * dy.data[base + i] - sum_dy - xhat_[base + i] * sum_dy_xhat);
        }
      }
    } else {
      const double k1 = g * inv_std;
      for (int s = 0; s < n; ++s) {
        const size_t base = (static_cast<size_t>(s) * c + ch) * hw;
        for (int i = 0; i < hw; ++i) dx.data[base + i] = k1 * dy.data[base + i];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, bool /*train*/) {
  positive_.resize(x.data.size());
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) {
    const bool pos = x.data[i] > 0.0;
    positive_[i] = pos ? 1 : 0;
    y.data[i] = pos ? x.data[i] : 0.0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  if (positive_.size() != dy.data.size()) {
    throw std::logic_error("relu backward without cached forward");
  }
  Tensor dx(dy.shape);
  for (size_t i = 0; i < dy.data.size(); ++i) dx.data[i] = positive_[i] ? dy.data[i] : 0.0;
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2x2

Tensor MaxPool2x2::forward(const Tensor& x, bool /*train*/) {
  if (x.shape.size() != 4 || x.shape[2] % 2 != 0 || x.shape[3] % 2 != 0) {
    throw std::invalid_argument("architecture/input mismatch in maxpool");
  }
  const int n = x.shape[0];
  const int c = x.shape[1];
  const int h = x.shape[2];
  const int w = x.shape[3];
  const int oh = h / 2;
  const int ow = w / 2;

  in_shape_ = x.shape;
  Tensor y({n, c, oh, ow});
  argmax_.resize(y.data.size());
  size_t out = 0;
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const size_t plane = (static_cast<size_t>(s) * c + ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const size_t i00 = plane + static_cast<size_t>(2 * oy) * w + 2 * ox;
          size_t best = i00;
          double best_v = x.data[i00];
          const size_t candidates[3] = {i00 + 1, i00 + w, i00 + w + 1};
          for (size_t cand : candidates) {
            if (x.data[cand] > best_v) {
              best_v = x.data[cand];
              best = cand;
            }
          }
          y.data[out] = best_v;
          argmax_[out] = best;
          ++out;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2x2::backward(const Tensor& dy) {
  if (in_shape_.empty() || argmax_.size() != dy.data.size()) {
    throw std::logic_error("maxpool backward without cached forward");
  }
  Tensor dx(in_shape_);
  for (size_t i = 0; i < dy.data.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Flatten

Tensor Flatten::forward(const Tensor& x, bool /*train*/) {
  if (x.shape.empty()) throw std::invalid_argument("architecture/input mismatch in flatten");
  in_shape_ = x.shape;
  int features = 1;
  for (size_t i = 1; i < x.shape.size(); ++i) features *= x.shape[i];
  Tensor y({x.shape[0], features});
  y.data = x.data;
  return y;
}

Tensor Flatten::backward(const Tensor& dy) {
  if (in_shape_.empty()) throw std::logic_error("flatten backward without cached forward");
  Tensor dx(in_shape_);
  dx.data = dy.data;
  return dx;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(int in_features, int out_features)
    : in_f_(in_features),
      out_f_(out_features),
      weight_({out_features, in_features}),
      bias_({out_features}),
      dweight_({out_features, in_features}),
      dbias_({out_features}) {}

Tensor Dense::forward(const Tensor& x, bool train) {
  if (x.shape.size() != 2 || x.shape[1] != in_f_) {
    throw std::invalid_argument("architecture/input mismatch in dense");
  }
  const int n = x.shape[0];
  Tensor y({n, out_f_});
  matmul(false, true, n, out_f_, in_f_, x.data.data(), weight_.data.data(), y.data.data());
  for (int s = 0; s < n; ++s) {
    double* row = y.data.data() + static_cast<size_t>(s) * out_f_;
    for (int j = 0; j < out_f_; ++j) row[j] += bias_.data[j];
  }
  if (train) {
    input_cache_ = x.data;
    cached_n_ = n;
  } else {
    input_cache_.clear();
    cached_n_ = 0;
  }
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  if (cached_n_ == 0) throw std::logic_error("dense backward without cached forward");
  const int n = cached_n_;
  // dW += dy^T x X
  matmul(true, false, out_f_, in_f_, n, dy.data.data(), input_cache_.data(),
         dweight_.data.data(), true);
  for (int s = 0; s < n; ++s) {
    const double* row = dy.data.data() + static_cast<size_t>(s) * out_f_;
    for (int j = 0; j < out_f_; ++j) dbias_.data[j] += row[j];
  }
  Tensor dx({n, in_f_});
  matmul(false, false, n, in_f_, out_f_, dy.data.data(), weight_.data.data(), dx.data.data());
  return dx;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const std::string& kind,
                                  const std::vector<std::pair<std::string, int>>& hyperparams) {
  if (kind == "conv2d") return std::make_unique<Conv2D>(hyper(hyperparams, "in"), hyper(hyperparams, "out"));
  if (kind == "batchnorm") return std::make_unique<BatchNorm2D>(hyper(hyperparams, "channels"));
  if (kind == "relu") return std::make_unique<ReLU>();
  if (kind == "maxpool") return std::make_unique<MaxPool2x2>();
  if (kind == "flatten") return std::make_unique<Flatten>();
  if (kind == "dense") return std::make_unique<Dense>(hyper(hyperparams, "in"), hyper(hyperparams, "out"));
  throw std::runtime_error("incompatible checkpoint: unknown layer kind '" + kind + "'");
}

}  // namespace mprkit::nn
