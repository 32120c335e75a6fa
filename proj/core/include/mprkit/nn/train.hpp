#pragma once

#include <cstdint>
#include <vector>

#include "mprkit/dataset.hpp"
#include "mprkit/nn/model.hpp"

namespace mprkit::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 1;
  std::uint64_t seed = 0;
  Target target = Target::kSignificant;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // sample-weighted mean loss per completed epoch
};

// Minibatch training with a fresh shuffle each epoch. The shuffle for an
// epoch is seeded from (config seed, epochs completed so far), so training
// for k epochs and then m more reproduces one k+m epoch run bit for bit.
// A trailing batch of one sample is avoided by rebalancing the last two
// batches. Failures are rethrown with epoch/batch context.
TrainHistory train(Model& model, const std::vector<const LabeledSample*>& samples,
                   const TrainConfig& config);

double label_of(const LabeledSample& sample, Target target);

}  // namespace mprkit::nn
