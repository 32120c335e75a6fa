#pragma once

#include <vector>

#include "mprkit/reformat.hpp"

namespace mprkit {

enum class PaddingKind { kZeroPad, kStretchToLongest, kIntermediateResize };

// The three ways a variable-length stack becomes a fixed-length input:
// centered zero padding, or linear length resampling to a long/short target.
struct PaddingStrategy {
  PaddingKind kind = PaddingKind::kIntermediateResize;
  int target_len = 64;

  static PaddingStrategy zero_pad(int target_len = 170) {
    return {PaddingKind::kZeroPad, target_len};
  }
  static PaddingStrategy stretch_to_longest(int target_len = 170) {
    return {PaddingKind::kStretchToLongest, target_len};
  }
  static PaddingStrategy intermediate_resize(int target_len = 64) {
    return {PaddingKind::kIntermediateResize, target_len};
  }
};

// ZeroPad centers the original slices (extra zero slice at the end when the
// deficit is odd) and refuses stacks longer than the target ("lesion longer
// than pad target"). The resampling strategies interpolate per-pixel along
// the slice axis with endpoints fixed to the first/last slice.
MprStack apply_padding(const MprStack& stack, const PaddingStrategy& strategy);

// Length resampling used by the stretch/intermediate strategies; exposed for
// round-trip checks. target_len >= 1.
MprStack resample_length(const MprStack& stack, int target_len);

// Two orthogonal longitudinal planes through the centerline: channel 0 fixes
// the row at H/2 (an L x W image), channel 1 fixes the column at W/2.
struct SlicePair {
  int length = 0;  // L rows per channel
  int width = 0;   // W columns per channel
  std::vector<double> pixels;  // channel-major: [c][l][w]
  MprMeta meta;

  size_t index(int c, int l, int w) const {
    return (static_cast<size_t>(c) * length + l) * width + w;
  }
  double at(int c, int l, int w) const { return pixels[index(c, l, w)]; }
  double& at(int c, int l, int w) { return pixels[index(c, l, w)]; }
};

SlicePair slice_pair(const MprStack& stack);

// Overlapping cube windows along the slice axis: cube i covers slices
// [stride*i, stride*i + cube); the trailing remainder shorter than a stride
// is dropped. Requires 25x25 in-plane slices and L >= 25.
struct CubeSequence {
  int cube = 25;
  int stride = 5;
  int count = 0;
  std::vector<double> data;  // [cube][z][y][x], contiguous per cube

  size_t cube_size() const {
    return static_cast<size_t>(cube) * cube * cube;
  }
};

CubeSequence cube_sequence(const MprStack& stack);

// Separable linear in-plane resampling H x W -> target x target. Throws
// "cannot downscale upward" when the input is smaller than the target.
MprStack downscale_inplane(const MprStack& stack, int target = 25);

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

// Population statistics over a pixel pool (typically the training portion of
// one split).
NormStats compute_norm_stats(const std::vector<const std::vector<double>*>& pixel_sets);

// Elementwise (x - mean) / std. Throws "degenerate statistics" when std is
// not usable.
void normalize(std::vector<double>& pixels, const NormStats& stats);

}  // namespace mprkit
