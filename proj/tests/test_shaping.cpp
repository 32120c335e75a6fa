// Padding, cube sequencing, in-plane downscaling, 2.5D slice pairs, and
// intensity normalization.
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mprkit/seeding.hpp"
#include "mprkit/shaping.hpp"
#include "test_support.hpp"

using mprkit::CubeSequence;
using mprkit::MprStack;
using mprkit::NormStats;
using mprkit::PaddingStrategy;
using mprkit::Rng;
using mprkit::SlicePair;

namespace {

MprStack make_stack(int length, int height, int width) {
  MprStack s;
  s.length = length;
  s.height = height;
  s.width = width;
  s.pixels.assign(s.pixel_count(), 0.0);
  s.meta.patient_id = "p0";
  s.meta.branch_id = "b0";
  s.meta.lesion_id = "l0";
  return s;
}

MprStack random_stack(int length, int height, int width, uint64_t seed) {
  MprStack s = make_stack(length, height, width);
  Rng rng(seed);
  for (double& v : s.pixels) v = rng.uniform(-50.0, 450.0);
  return s;
}

// Endpoint-anchored linear interpolation of a 1D sequence onto target
// positions; the independent oracle for slice-axis resampling.
std::vector<double> lerp_1d(const std::vector<double>& v, int target) {
  std::vector<double> out(target);
  const int n = static_cast<int>(v.size());
  for (int t = 0; t < target; ++t) {
    const double src = (target == 1) ? (n - 1) / 2.0 : double(t) * (n - 1) / (target - 1);
    int l0 = static_cast<int>(src);
    if (l0 > n - 2) l0 = n - 2;
    const double f = src - l0;
    out[t] = (1.0 - f) * v[l0] + f * v[l0 + 1];
  }
  return out;
}

}  // namespace

TEST_CASE("zero padding centers the original slices with the extra slice last") {
  // 60 slices into 170: slices 0..54 zero, 55..114 original, 115..169 zero.
  MprStack s = random_stack(60, 4, 4, mprkit::seed_combine(21, "zeropad"));
  const MprStack out = mprkit::apply_padding(s, PaddingStrategy::zero_pad(170));
  REQUIRE(out.length == 170);
  CHECK(out.height == 4);
  CHECK(out.width == 4);
  for (int l = 0; l < 55; ++l)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(out.at(l, i, j) == 0.0);
  for (int l = 55; l <= 114; ++l)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(out.at(l, i, j) == s.at(l - 55, i, j));
  for (int l = 115; l < 170; ++l)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(out.at(l, i, j) == 0.0);

  // Odd deficit: 5 into 8 puts one zero slice in front and two at the end.
  MprStack odd = random_stack(5, 2, 2, mprkit::seed_combine(21, "zeropad-odd"));
  const MprStack padded = mprkit::apply_padding(odd, PaddingStrategy::zero_pad(8));
  CHECK(padded.at(0, 0, 0) == 0.0);
  for (int l = 1; l <= 5; ++l) CHECK(padded.at(l, 1, 1) == odd.at(l - 1, 1, 1));
  CHECK(padded.at(6, 0, 0) == 0.0);
  CHECK(padded.at(7, 0, 0) == 0.0);
}

TEST_CASE("zero padding refuses stacks longer than the target") {
  MprStack s = random_stack(171, 2, 2, 1);
  CHECK_THROWS_WITH_AS(mprkit::apply_padding(s, PaddingStrategy::zero_pad(170)),
                       doctest::Contains("lesion longer than pad target"), std::invalid_argument);
}

TEST_CASE("resampling strategies hit their target lengths") {
  MprStack s = random_stack(100, 4, 4, mprkit::seed_combine(21, "targets"));
  CHECK(mprkit::apply_padding(s, PaddingStrategy::intermediate_resize(64)).length == 64);
  CHECK(mprkit::apply_padding(s, PaddingStrategy::stretch_to_longest(170)).length == 170);
  CHECK(mprkit::apply_padding(s, PaddingStrategy::intermediate_resize(64)).height == 4);
}

TEST_CASE("length resampling at matching length is the identity") {
  MprStack s = random_stack(64, 3, 3, mprkit::seed_combine(21, "identity"));
  const MprStack out = mprkit::apply_padding(s, PaddingStrategy::intermediate_resize(64));
  REQUIRE(out.length == 64);
  for (size_t i = 0; i < s.pixels.size(); ++i) CHECK(out.pixels[i] == s.pixels[i]);
}

TEST_CASE("length resampling matches the 1D endpoint-anchored oracle per pixel") {
  MprStack s = random_stack(17, 3, 4, mprkit::seed_combine(21, "oracle"));
  for (int target : {5, 12, 17, 41}) {
    const MprStack out = mprkit::resample_length(s, target);
    REQUIRE(out.length == target);
    for (int i = 0; i < s.height; ++i)
      for (int j = 0; j < s.width; ++j) {
        std::vector<double> line(s.length);
        for (int l = 0; l < s.length; ++l) line[l] = s.at(l, i, j);
        const std::vector<double> expect = lerp_1d(line, target);
        for (int t = 0; t < target; ++t)
          CHECK(out.at(t, i, j) == doctest::Approx(expect[t]).epsilon(1e-12));
      }
  }
}

TEST_CASE("length round trip on a smooth signal stays within 1% of range") {
  // Slicewise-smooth low-frequency signal; amplitude 1 -> dynamic range 2.
  MprStack s = make_stack(100, 2, 2);
  for (int l = 0; l < s.length; ++l) {
    const double v = std::sin(2.0 * M_PI * l / 99.0) + 0.3 * std::cos(6.0 * M_PI * l / 99.0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s.at(l, i, j) = v;
  }
  double lo = 1e300, hi = -1e300;
  for (double v : s.pixels) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const MprStack back = mprkit::resample_length(mprkit::resample_length(s, 64), 100);
  double err_sum = 0.0;
  for (size_t i = 0; i < s.pixels.size(); ++i) err_sum += std::abs(back.pixels[i] - s.pixels[i]);
  CHECK(err_sum / double(s.pixels.size()) < 0.01 * (hi - lo));
}

TEST_CASE("cube sequencing counts and coverage") {
  CHECK(mprkit::cube_sequence(random_stack(145, 25, 25, 2)).count == 25);
  CHECK(mprkit::cube_sequence(random_stack(170, 25, 25, 3)).count == 30);

  MprStack whole = random_stack(25, 25, 25, mprkit::seed_combine(21, "cube-one"));
  const CubeSequence one = mprkit::cube_sequence(whole);
  REQUIRE(one.count == 1);
  REQUIRE(one.data.size() == whole.pixels.size());
  for (size_t i = 0; i < whole.pixels.size(); ++i) CHECK(one.data[i] == whole.pixels[i]);

  // Cube c covers slices [5c, 5c+25); verify content block by block.
  MprStack s = random_stack(60, 25, 25, mprkit::seed_combine(21, "cube-cover"));
  const CubeSequence seq = mprkit::cube_sequence(s);
  REQUIRE(seq.count == (60 - 25) / 5 + 1);  // 8 cubes; slices 0..59 all covered
  const size_t slice_px = 25 * 25;
  for (int c = 0; c < seq.count; ++c)
    for (int z = 0; z < 25; ++z)
      for (size_t p = 0; p < slice_px; ++p) {
        const double got = seq.data[(static_cast<size_t>(c) * 25 + z) * slice_px + p];
        CHECK(got == s.pixels[static_cast<size_t>(5 * c + z) * slice_px + p]);
      }
  // Consecutive cubes overlap by exactly 20 slices: cube c slice z equals
  // cube c+1 slice z-5 for z in [5, 25).
  for (int z = 5; z < 25; ++z)
    CHECK(seq.data[(0 * 25 + z) * slice_px] == seq.data[(1 * 25 + (z - 5)) * slice_px]);
}

TEST_CASE("cube sequencing rejects short or unsized stacks") {
  CHECK_THROWS_WITH_AS(mprkit::cube_sequence(random_stack(24, 25, 25, 4)),
                       doctest::Contains("stack too short for cube sequencing"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(mprkit::cube_sequence(random_stack(30, 32, 32, 5)),
                       doctest::Contains("cube sequencing needs 25x25"), std::invalid_argument);
}

TEST_CASE("in-plane downscaling: shape, constants, and linear ramps") {
  MprStack s = make_stack(3, 32, 32);
  for (double& v : s.pixels) v = 7.5;
  const MprStack flat = mprkit::downscale_inplane(s, 25);
  CHECK(flat.length == 3);
  CHECK(flat.height == 25);
  CHECK(flat.width == 25);
  for (double v : flat.pixels) CHECK(v == doctest::Approx(7.5).epsilon(1e-12));

  // f(i,j) = i + j stays a ramp with slope (H-1)/(T-1) in target coordinates.
  MprStack ramp = make_stack(2, 32, 32);
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) ramp.at(l, i, j) = i + j;
  const MprStack down = mprkit::downscale_inplane(ramp, 25);
  const double scale = 31.0 / 24.0;
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 25; ++i)
      for (int j = 0; j < 25; ++j)
        CHECK(down.at(l, i, j) == doctest::Approx((i + j) * scale).epsilon(1e-9));

  CHECK_THROWS_WITH_AS(mprkit::downscale_inplane(random_stack(2, 20, 20, 6), 25),
                       doctest::Contains("cannot downscale upward"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(mprkit::downscale_inplane(random_stack(2, 32, 16, 7), 25),
                       doctest::Contains("square slices"), std::invalid_argument);
}

TEST_CASE("slice pair selects the two central longitudinal planes") {
  MprStack s = random_stack(10, 8, 8, mprkit::seed_combine(21, "pair"));
  s.meta.view_k = 3;
  const SlicePair pair = mprkit::slice_pair(s);
  REQUIRE(pair.length == 10);
  REQUIRE(pair.width == 8);
  CHECK(pair.meta.lesion_id == "l0");
  CHECK(pair.meta.view_k == 3);
  for (int l = 0; l < 10; ++l)
    for (int w = 0; w < 8; ++w) {
      CHECK(pair.at(0, l, w) == s.at(l, 4, w));  // channel 0: row H/2
      CHECK(pair.at(1, l, w) == s.at(l, w, 4));  // channel 1: column W/2
    }
}

TEST_CASE("slice-constant stacks give slice-constant pair rows") {
  MprStack s = make_stack(6, 4, 4);
  for (int l = 0; l < 6; ++l)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) s.at(l, i, j) = 10.0 * l;
  const SlicePair pair = mprkit::slice_pair(s);
  for (int c = 0; c < 2; ++c)
    for (int l = 0; l < 6; ++l)
      for (int w = 0; w < 4; ++w) CHECK(pair.at(c, l, w) == doctest::Approx(10.0 * l));
}

TEST_CASE("slice pair commutes with length resampling") {
  MprStack s = random_stack(30, 6, 6, mprkit::seed_combine(21, "commute"));
  const SlicePair resized_then_paired = mprkit::slice_pair(mprkit::resample_length(s, 11));
  const SlicePair paired = mprkit::slice_pair(s);
  // Resample each pair channel column along the slice axis with the oracle.
  for (int c = 0; c < 2; ++c)
    for (int w = 0; w < 6; ++w) {
      std::vector<double> line(30);
      for (int l = 0; l < 30; ++l) line[l] = paired.at(c, l, w);
      const std::vector<double> expect = lerp_1d(line, 11);
      for (int t = 0; t < 11; ++t)
        CHECK(resized_then_paired.at(c, t, w) == doctest::Approx(expect[t]).epsilon(1e-9));
    }
}

TEST_CASE("slice pair requires square slices with even height") {
  MprStack rect = random_stack(4, 8, 6, 8);
  CHECK_THROWS_WITH_AS(mprkit::slice_pair(rect), doctest::Contains("square"),
                       std::invalid_argument);
  MprStack odd = random_stack(4, 7, 7, 9);
  CHECK_THROWS_WITH_AS(mprkit::slice_pair(odd), doctest::Contains("even"), std::invalid_argument);
}

TEST_CASE("normalization statistics are population moments") {
  // Equal-mass {0, 400}: mean 200, population std 200, outputs {-1, +1}.
  std::vector<double> a(10, 0.0);
  std::vector<double> b(10, 400.0);
  const NormStats stats = mprkit::compute_norm_stats({&a, &b});
  CHECK(stats.mean == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(stats.std == doctest::Approx(200.0).epsilon(1e-12));

  std::vector<double> x{0.0, 400.0, 0.0, 400.0};
  mprkit::normalize(x, stats);
  CHECK(x == std::vector<double>{-1.0, 1.0, -1.0, 1.0});
}

TEST_CASE("normalization identities and degenerate cases") {
  NormStats stats{5.0, 2.0};
  std::vector<double> at_mean(8, 5.0);
  mprkit::normalize(at_mean, stats);
  for (double v : at_mean) CHECK(v == 0.0);

  // Round trip within 1e-7.
  Rng rng(mprkit::seed_combine(21, "norm-roundtrip"));
  std::vector<double> x(100);
  for (double& v : x) v = rng.uniform(-300.0, 700.0);
  std::vector<double> y = x;
  mprkit::normalize(y, stats);
  for (double& v : y) v = v * stats.std + stats.mean;
  for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-7));

  CHECK_THROWS_WITH_AS(mprkit::compute_norm_stats({}), doctest::Contains("degenerate statistics"),
                       std::invalid_argument);
  std::vector<double> flat(5, 3.0);
  const NormStats zero = mprkit::compute_norm_stats({&flat});
  CHECK(zero.std == 0.0);
  CHECK_THROWS_WITH_AS(mprkit::normalize(flat, zero), doctest::Contains("degenerate statistics"),
                       std::invalid_argument);
}
