#include "mprkit/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mprkit {
namespace {

// Endpoint-anchored source position for linear resampling of n samples onto
// target positions: output index t maps to t * (n-1) / (target-1).
double source_position(int t, int n, int target) {
  if (target == 1) return (n - 1) / 2.0;
  return static_cast<double>(t) * (n - 1) / (target - 1);
}

}  // namespace

MprStack resample_length(const MprStack& stack, int target_len) {
  if (target_len < 1) throw std::invalid_argument("resample target must be at least 1");
  if (stack.length < 2) throw std::invalid_argument("padding needs at least 2 slices");
  MprStack out = stack;
  out.length = target_len;
  out.pixels.assign(out.pixel_count(), 0.0);
  const size_t slice_px = static_cast<size_t>(stack.height) * stack.width;
  for (int t = 0; t < target_len; ++t) {
    const double src = source_position(t, stack.length, target_len);
    int l0 = static_cast<int>(src);
    if (l0 > stack.length - 2) l0 = stack.length - 2;
    const double f = src - l0;
    const double* a = stack.pixels.data() + static_cast<size_t>(l0) * slice_px;
    const double* b = a + slice_px;
    double* dst = out.pixels.data() + static_cast<size_t>(t) * slice_px;
    for (size_t p = 0; p < slice_px; ++p) dst[p] = (1.0 - f) * a[p] + f * b[p];
  }
  return out;
}

MprStack apply_padding(const MprStack& stack, const PaddingStrategy& strategy) {
  if (strategy.target_len < 1) throw std::invalid_argument("pad target must be at least 1");
  if (stack.length < 2) throw std::invalid_argument("padding needs at least 2 slices");
  switch (strategy.kind) {
    case PaddingKind::kZeroPad: {
      if (stack.length > strategy.target_len)
        throw std::invalid_argument("lesion longer than pad target");
      MprStack out = stack;
      out.length = strategy.target_len;
      out.pixels.assign(out.pixel_count(), 0.0);
      const size_t slice_px = static_cast<size_t>(stack.height) * stack.width;
      const int front = (strategy.target_len - stack.length) / 2;  // extra slice goes last
      std::copy(stack.pixels.begin(), stack.pixels.end(),
                out.pixels.begin() + static_cast<size_t>(front) * slice_px);
      return out;
    }
    case PaddingKind::kStretchToLongest:
    case PaddingKind::kIntermediateResize:
      return resample_length(stack, strategy.target_len);
  }
  throw std::invalid_argument("unknown padding strategy");
}

SlicePair slice_pair(const MprStack& stack) {
  if (stack.height != stack.width)
    throw std::invalid_argument("slice pair needs square slices");
  if (stack.height % 2 != 0) throw std::invalid_argument("slice pair needs even slice height");
  SlicePair pair;
  pair.length = stack.length;
  pair.width = stack.width;
  pair.pixels.resize(2 * static_cast<size_t>(stack.length) * stack.width);
  pair.meta = stack.meta;
  const int mid = stack.height / 2;
  for (int l = 0; l < stack.length; ++l) {
    for (int w = 0; w < stack.width; ++w) {
      pair.at(0, l, w) = stack.at(l, mid, w);  // longitudinal plane along the row axis
      pair.at(1, l, w) = stack.at(l, w, mid);  // orthogonal plane along the column axis
    }
  }
  return pair;
}

CubeSequence cube_sequence(const MprStack& stack) {
  CubeSequence seq;
  if (stack.height != seq.cube || stack.width != seq.cube)
    throw std::invalid_argument("cube sequencing needs 25x25 slices");
  if (stack.length < seq.cube) throw std::invalid_argument("stack too short for cube sequencing");
  seq.count = (stack.length - seq.cube) / seq.stride + 1;
  seq.data.resize(static_cast<size_t>(seq.count) * seq.cube_size());
  const size_t slice_px = static_cast<size_t>(stack.height) * stack.width;
  for (int c = 0; c < seq.count; ++c) {
    const size_t src = static_cast<size_t>(c) * seq.stride * slice_px;
    std::copy(stack.pixels.begin() + src, stack.pixels.begin() + src + seq.cube_size(),
              seq.data.begin() + static_cast<size_t>(c) * seq.cube_size());
  }
  return seq;
}

MprStack downscale_inplane(const MprStack& stack, int target) {
  if (target < 2) throw std::invalid_argument("in-plane target must be at least 2");
  if (stack.height != stack.width)
    throw std::invalid_argument("in-plane resampling needs square slices");
  if (stack.height < target) throw std::invalid_argument("cannot downscale upward");
  MprStack out = stack;
  out.height = target;
  out.width = target;
  out.pixels.assign(out.pixel_count(), 0.0);
  const int h = stack.height;
  for (int l = 0; l < stack.length; ++l) {
    for (int i = 0; i < target; ++i) {
      const double si = source_position(i, h, target);
      int i0 = static_cast<int>(si);
      if (i0 > h - 2) i0 = h - 2;
      const double fi = si - i0;
      for (int j = 0; j < target; ++j) {
        const double sj = source_position(j, h, target);
        int j0 = static_cast<int>(sj);
        if (j0 > h - 2) j0 = h - 2;
        const double fj = sj - j0;
        out.at(l, i, j) =
            (1.0 - fi) * ((1.0 - fj) * stack.at(l, i0, j0) + fj * stack.at(l, i0, j0 + 1)) +
            fi * ((1.0 - fj) * stack.at(l, i0 + 1, j0) + fj * stack.at(l, i0 + 1, j0 + 1));
      }
    }
  }
  return out;
}

NormStats compute_norm_stats(const std::vector<const std::vector<double>*>& pixel_sets) {
  size_t n = 0;
  double sum = 0.0;
  for (const auto* set : pixel_sets) {
    n += set->size();
    for (double v : *set) sum += v;
  }
  if (n == 0) throw std::invalid_argument("degenerate statistics");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto* set : pixel_sets)
    for (double v : *set) ss += (v - mean) * (v - mean);
  NormStats stats;
  stats.mean = mean;
  stats.std = std::sqrt(ss / static_cast<double>(n));  // population std
  return stats;
}

void normalize(std::vector<double>& pixels, const NormStats& stats) {
  if (!(stats.std > 1e-12)) throw std::invalid_argument("degenerate statistics");
  const double inv = 1.0 / stats.std;
  for (double& v : pixels) v = (v - stats.mean) * inv;
}

}  // namespace mprkit
