#include "mprkit/nn/train.hpp"

#include <stdexcept>
#include <string>

#include "mprkit/seeding.hpp"

namespace mprkit::nn {

double label_of(const LabeledSample& sample, Target target) {
  const bool flag =
      target == Target::kSignificant ? sample.significant : sample.revascularised;
  return flag ? 1.0 : 0.0;
}

TrainHistory train(Model& model, const std::vector<const LabeledSample*>& samples,
                   const TrainConfig& config) {
  if (samples.empty()) throw std::invalid_argument("no training samples");
  if (config.batch_size < 1) throw std::invalid_argument("bad train config: batch size");
  if (config.epochs < 0) throw std::invalid_argument("bad train config: epochs");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("bad train config: learning rate");

  size_t per_sample = 1;
  for (int d : model.input_shape) per_sample *= static_cast<size_t>(d);
  for (const LabeledSample* sample : samples) {
    if (sample == nullptr || sample->tensor.shape != model.input_shape ||
        sample->tensor.data.size() != per_sample) {
      throw std::invalid_argument("architecture/input mismatch");
    }
  }

  const int n = static_cast<int>(samples.size());
  std::vector<int> batch_sizes;
  for (int remaining = n; remaining > 0;) {
    const int take = std::min(config.batch_size, remaining);
    batch_sizes.push_back(take);
    remaining -= take;
  }
  if (batch_sizes.size() >= 2 && batch_sizes.back() == 1 &&
      batch_sizes[batch_sizes.size() - 2] > 1) {
    batch_sizes[batch_sizes.size() - 2] -= 1;
    batch_sizes.back() = 2;
  }

  const double mean = model.norm.mean;
  const double inv_std = 1.0 / model.norm.std;

  TrainHistory history;
  std::vector<size_t> order(samples.size());
  Gradients grads;
  for (int e = 0; e < config.epochs; ++e) {
    const int epoch_number = model.epochs_done + 1;
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(seed_combine(config.seed, static_cast<std::uint64_t>(model.epochs_done)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    size_t cursor = 0;
    for (size_t b = 0; b < batch_sizes.size(); ++b) {
      const int bs = batch_sizes[b];
      std::vector<int> shape;
      shape.push_back(bs);
      shape.insert(shape.end(), model.input_shape.begin(), model.input_shape.end());
      Tensor batch(shape);
      std::vector<double> labels(bs);
      for (int s = 0; s < bs; ++s) {
        const LabeledSample& sample = *samples[order[cursor + s]];
        labels[s] = label_of(sample, config.target);
        double* dst = batch.data.data() + static_cast<size_t>(s) * per_sample;
        for (size_t i = 0; i < per_sample; ++i) dst[i] = (sample.tensor.data[i] - mean) * inv_std;
      }
      cursor += bs;

      try {
        const double batch_loss = loss_and_grads(model, batch, labels, grads);
        optimizer_step(model, grads, config.learning_rate);
        loss_sum += batch_loss * static_cast<double>(bs);
      } catch (const std::exception& err) {
        throw std::runtime_error("training aborted (epoch " + std::to_string(epoch_number) +
                                 ", batch " + std::to_string(b + 1) + "): " + err.what());
      }
    }
    history.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    model.epochs_done += 1;
  }
  return history;
}

}  // namespace mprkit::nn
