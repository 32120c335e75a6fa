#pragma once

#include <filesystem>

#include "mprkit/nn/model.hpp"

namespace mprkit::nn {

// Single-file format: one JSON header line (architecture, counters, input
// normalization, payload length) followed by a raw little-endian float64
// payload holding, in order: every parameter tensor, the first and second
// Adam moments, then persistent layer state (batchnorm running statistics),
// each group in layer order.
void save_checkpoint(Model& model, const std::filesystem::path& path);

Model load_checkpoint(const std::filesystem::path& path);

}  // namespace mprkit::nn
