#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mprkit/centerline.hpp"
#include "mprkit/geometry.hpp"
#include "mprkit/phantom.hpp"
#include "mprkit/volume.hpp"

namespace mprkit {

// Orthonormal right-handed frame at one centerline point (t x n = b).
struct Frame {
  Vec3 tangent;
  Vec3 normal;
  Vec3 binormal;
};

using FrameSequence = std::vector<Frame>;

// Rotation-minimizing frames by double-reflection transport. The first frame
// is seeded from the tangent and the world axis most orthogonal to it.
// Throws "degenerate centerline" on zero-length segments.
FrameSequence build_frames(const Centerline& cl);

// Every frame rotated about its tangent by angle_rad:
// n' = cos*n + sin*b, b' = -sin*n + cos*b.
FrameSequence rotate_frames(const FrameSequence& frames, double angle_rad);

struct MprMeta {
  std::string patient_id;
  std::string branch_id;
  std::string lesion_id;
  bool significant = false;
  bool revascularised = false;
  int view_k = 0;
};

// Stack of square cross-sections along a lesion: slice-major pixels, slice l
// row i column j at pixels[(l*height + i)*width + j]. Row offsets run along
// the frame normal, column offsets along the binormal.
struct MprStack {
  int length = 0;  // L slices
  int height = 0;  // H rows
  int width = 0;   // W columns (square: W == H)
  double in_plane_spacing_mm = 0.5;
  double step_mm = 0.5;
  std::vector<double> pixels;
  MprMeta meta;

  size_t index(int l, int i, int j) const {
    return (static_cast<size_t>(l) * height + i) * width + j;
  }
  double at(int l, int i, int j) const { return pixels[index(l, i, j)]; }
  double& at(int l, int i, int j) { return pixels[index(l, i, j)]; }
  size_t pixel_count() const {
    return static_cast<size_t>(length) * height * width;
  }
};

// Samples slice l on the plane through centerline point start_idx + l:
// pixel (i,j) sits at offset ((i-(H-1)/2)*s*normal + (j-(W-1)/2)*s*binormal)
// from the point, trilinearly interpolated. Throws "lesion out of range" on
// invalid indices.
MprStack extract_mpr(const Volume3D& vol, const Centerline& cl, const FrameSequence& frames,
                     const LesionRecord& lesion, int height = 32,
                     double in_plane_spacing_mm = 0.5);

// Zeroes pixels farther than (H/2 - 0.5) * spacing from the slice center.
MprStack cylinder_mask(const MprStack& stack);

// In-plane rotation of every slice by k * (360/n_views) degrees about the
// slice center, bilinear with zero fill. Expects a cylinder-masked stack.
// Throws "invalid view index" when k is outside [0, n_views).
MprStack rotate_view(const MprStack& stack, int k, int n_views = 18);

// On-disk format: little-endian float32 raw (slice-major) plus a JSON
// sidecar carrying dims, spacings, lesion id, and view index.
void store_mpr_stack(const MprStack& stack, const std::filesystem::path& sidecar_path);
MprStack load_mpr_stack(const std::filesystem::path& sidecar_path);

}  // namespace mprkit
