#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mprkit::nn {

// Dense row-major tensor of doubles. All arithmetic in this engine is
// 64-bit so finite-difference gradient checks have headroom.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(element_count(shape), 0.0);
  }

  static size_t element_count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d < 1) throw std::invalid_argument("tensor dims must be positive");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  size_t size() const { return data.size(); }
  int dim(size_t i) const { return shape.at(i); }
};

}  // namespace mprkit::nn
