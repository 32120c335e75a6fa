#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "mprkit/geometry.hpp"

namespace mprkit {

// 3D scalar intensity grid with physical voxel spacing. Voxels are stored
// x-fastest, then y, then z; voxel (i,j,k) is centred at
// origin + (i,j,k) * spacing. Immutable once built; concurrent read-only
// sampling is safe.
struct Volume3D {
  std::array<int, 3> dims{0, 0, 0};          // voxels per axis, each >= 2
  std::array<double, 3> spacing{1, 1, 1};    // mm per voxel, each > 0
  std::array<double, 3> origin{0, 0, 0};     // mm, centre of voxel (0,0,0)
  std::vector<double> voxels;                // dims[0]*dims[1]*dims[2] values

  size_t index(int i, int j, int k) const {
    return static_cast<size_t>(i) +
           static_cast<size_t>(dims[0]) *
               (static_cast<size_t>(j) + static_cast<size_t>(dims[1]) * static_cast<size_t>(k));
  }
  double at(int i, int j, int k) const { return voxels[index(i, j, k)]; }
  double& at(int i, int j, int k) { return voxels[index(i, j, k)]; }
  size_t voxel_count() const {
    return static_cast<size_t>(dims[0]) * static_cast<size_t>(dims[1]) *
           static_cast<size_t>(dims[2]);
  }
};

// Validating constructor; throws std::invalid_argument on broken invariants.
Volume3D make_volume(std::array<int, 3> dims, std::array<double, 3> spacing,
                     std::array<double, 3> origin);

// Trilinear interpolation at a world-space point. Points outside the
// voxel-centre hull return exactly 0.0; non-finite points are an error.
double sample_trilinear(const Volume3D& vol, const PointMm& p);

// On-disk format: a JSON manifest next to a header-less little-endian
// float32 raw file, x-fastest.
Volume3D load_volume(const std::filesystem::path& manifest_path);
void store_volume(const Volume3D& vol, const std::filesystem::path& manifest_path);

}  // namespace mprkit
