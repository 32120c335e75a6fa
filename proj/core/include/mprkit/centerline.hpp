#pragma once

#include <filesystem>
#include <vector>

#include "mprkit/geometry.hpp"

namespace mprkit {

// Ordered 3D curve with uniform arc-length spacing between consecutive
// points. Consecutive point distance must stay within 1e-6 mm of step_mm.
struct Centerline {
  std::vector<PointMm> points;
  double step_mm = 0.0;

  size_t size() const { return points.size(); }
  double length_mm() const { return points.empty() ? 0.0 : step_mm * double(points.size() - 1); }
};

// Throws std::invalid_argument when the uniform-spacing invariant is broken
// (< 2 points, duplicated points, or off-step consecutive distances).
void validate_centerline(const Centerline& cl);

Centerline load_centerline(const std::filesystem::path& path);
void store_centerline(const Centerline& cl, const std::filesystem::path& path);

}  // namespace mprkit
