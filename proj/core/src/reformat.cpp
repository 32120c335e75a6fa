#include "mprkit/reformat.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mprkit {

using nlohmann::json;

FrameSequence build_frames(const Centerline& cl) {
  const auto& pts = cl.points;
  const size_t n = pts.size();
  if (n < 2) throw std::invalid_argument("degenerate centerline");
  for (size_t i = 0; i + 1 < n; ++i)
    if ((pts[i + 1] - pts[i]).norm() == 0.0) throw std::invalid_argument("degenerate centerline");

  // Per-point tangents: central differences inside, one-sided at the ends.
  std::vector<Vec3> tangents(n);
  tangents[0] = (pts[1] - pts[0]).normalized();
  for (size_t i = 1; i + 1 < n; ++i) tangents[i] = (pts[i + 1] - pts[i - 1]).normalized();
  tangents[n - 1] = (pts[n - 1] - pts[n - 2]).normalized();

  // Seed: normal from the world axis most orthogonal to the first tangent
  // (ties resolved toward the smaller axis index).
  const Vec3& t0 = tangents[0];
  const double axis_dots[3] = {std::abs(t0.x), std::abs(t0.y), std::abs(t0.z)};
  int best_axis = 0;
  for (int a = 1; a < 3; ++a)
    if (axis_dots[a] < axis_dots[best_axis]) best_axis = a;
  const Vec3 axis{best_axis == 0 ? 1.0 : 0.0, best_axis == 1 ? 1.0 : 0.0,
                  best_axis == 2 ? 1.0 : 0.0};

  FrameSequence frames(n);
  frames[0].tangent = t0;
  frames[0].normal = axis.cross(t0).normalized();
  frames[0].binormal = t0.cross(frames[0].normal);

  // Double-reflection transport: reflect across the segment bisector plane,
  // then across the bisector of the reflected and next tangents. This is the
  // standard rotation-minimizing construction; normals never twist about the
  // tangent beyond what the tangent itself turns.
  for (size_t i = 0; i + 1 < n; ++i) {
    const Vec3 v1 = pts[i + 1] - pts[i];
    const double c1 = v1.dot(v1);
    const Vec3 n_refl = frames[i].normal - v1 * (2.0 / c1 * v1.dot(frames[i].normal));
    const Vec3 t_refl = frames[i].tangent - v1 * (2.0 / c1 * v1.dot(frames[i].tangent));
    const Vec3 v2 = tangents[i + 1] - t_refl;
    const double c2 = v2.dot(v2);
    Vec3 next_normal = n_refl;
    if (c2 > 0.0) next_normal = n_refl - v2 * (2.0 / c2 * v2.dot(n_refl));
    frames[i + 1].tangent = tangents[i + 1];
    frames[i + 1].normal = next_normal.normalized();
    frames[i + 1].binormal = tangents[i + 1].cross(frames[i + 1].normal);
  }
  return frames;
}

FrameSequence rotate_frames(const FrameSequence& frames, double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  FrameSequence out(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    out[i].tangent = frames[i].tangent;
    out[i].normal = frames[i].normal * c + frames[i].binormal * s;
    out[i].binormal = frames[i].normal * (-s) + frames[i].binormal * c;
  }
  return out;
}

MprStack extract_mpr(const Volume3D& vol, const Centerline& cl, const FrameSequence& frames,
                     const LesionRecord& lesion, int height, double in_plane_spacing_mm) {
  if (frames.size() != cl.points.size())
    throw std::invalid_argument("frames do not match centerline");
  if (height < 2 || height % 2 != 0)
    throw std::invalid_argument("slice height must be even and at least 2");
  if (!(in_plane_spacing_mm > 0.0))
    throw std::invalid_argument("in-plane spacing must be positive");
  const int n = static_cast<int>(cl.points.size());
  if (lesion.start_idx < 0 || lesion.end_idx >= n || lesion.start_idx >= lesion.end_idx)
    throw std::invalid_argument("lesion out of range");

  MprStack stack;
  stack.length = lesion.end_idx - lesion.start_idx + 1;
  stack.height = height;
  stack.width = height;
  stack.in_plane_spacing_mm = in_plane_spacing_mm;
  stack.step_mm = cl.step_mm;
  stack.pixels.resize(stack.pixel_count());
  stack.meta.patient_id = lesion.patient_id;
  stack.meta.branch_id = lesion.branch_id;
  stack.meta.lesion_id = lesion.lesion_id;
  stack.meta.significant = lesion.significant;
  stack.meta.revascularised = lesion.revascularised;
  stack.meta.view_k = 0;

  const double center = (height - 1) / 2.0;
  for (int l = 0; l < stack.length; ++l) {
    const int idx = lesion.start_idx + l;
    const PointMm& p0 = cl.points[idx];
    const Vec3& nrm = frames[idx].normal;
    const Vec3& bin = frames[idx].binormal;
    for (int i = 0; i < height; ++i) {
      const double du = (i - center) * in_plane_spacing_mm;
      for (int j = 0; j < height; ++j) {
        const double dv = (j - center) * in_plane_spacing_mm;
        const PointMm p = p0 + nrm * du + bin * dv;
        stack.at(l, i, j) = sample_trilinear(vol, p);
      }
    }
  }
  return stack;
}

MprStack cylinder_mask(const MprStack& stack) {
  if (stack.height != stack.width)
    throw std::invalid_argument("cylinder mask needs square slices");
  MprStack out = stack;
  const double center = (stack.height - 1) / 2.0;
  const double radius = stack.height / 2.0 - 0.5;  // in pixels; spacing cancels
  const double r2 = radius * radius;
  for (int i = 0; i < stack.height; ++i) {
    for (int j = 0; j < stack.width; ++j) {
      const double du = i - center;
      const double dv = j - center;
      if (du * du + dv * dv > r2)
        for (int l = 0; l < stack.length; ++l) out.at(l, i, j) = 0.0;
    }
  }
  return out;
}

MprStack rotate_view(const MprStack& stack, int k, int n_views) {
  if (n_views < 1 || k < 0 || k >= n_views) throw std::invalid_argument("invalid view index");
  if (stack.height != stack.width)
    throw std::invalid_argument("in-plane rotation needs square slices");
  MprStack out = stack;
  out.meta.view_k = k;
  if (k == 0) return out;

  const double theta = 2.0 * 3.14159265358979323846 * k / n_views;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const int h = stack.height;
  const double center = (h - 1) / 2.0;
  for (int l = 0; l < stack.length; ++l) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < h; ++j) {
        // Pull: the output pixel takes its value from the source position
        // rotated the same way the sampling frame would have been.
        const double u = i - center;
        const double v = j - center;
        const double si = c * u - s * v + center;
        const double sj = s * u + c * v + center;
        double value = 0.0;
        if (si >= 0.0 && si <= h - 1 && sj >= 0.0 && sj <= h - 1) {
          int i0 = static_cast<int>(si);
          int j0 = static_cast<int>(sj);
          if (i0 > h - 2) i0 = h - 2;
          if (j0 > h - 2) j0 = h - 2;
          const double fi = si - i0;
          const double fj = sj - j0;
          value = (1.0 - fi) * ((1.0 - fj) * stack.at(l, i0, j0) + fj * stack.at(l, i0, j0 + 1)) +
                  fi * ((1.0 - fj) * stack.at(l, i0 + 1, j0) + fj * stack.at(l, i0 + 1, j0 + 1));
        }
        out.at(l, i, j) = value;
      }
    }
  }
  return out;
}

void store_mpr_stack(const MprStack& stack, const std::filesystem::path& sidecar_path) {
  std::filesystem::path raw_path = sidecar_path;
  raw_path.replace_extension(".raw");

  std::ofstream raw(raw_path, std::ios::binary);
  if (!raw) throw std::runtime_error("cannot write stack " + raw_path.string());
  std::vector<float> narrowed(stack.pixels.size());
  for (size_t i = 0; i < stack.pixels.size(); ++i)
    narrowed[i] = static_cast<float>(stack.pixels[i]);
  raw.write(reinterpret_cast<const char*>(narrowed.data()),
            static_cast<std::streamsize>(narrowed.size() * sizeof(float)));
  if (!raw) throw std::runtime_error("cannot write stack " + raw_path.string());

  json j{{"dims", {stack.length, stack.height, stack.width}},
         {"in_plane_spacing_mm", stack.in_plane_spacing_mm},
         {"step_mm", stack.step_mm},
         {"lesion_id", stack.meta.lesion_id},
         {"view_k", stack.meta.view_k}};
  std::ofstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot write stack sidecar " + sidecar_path.string());
  side << j.dump(2) << "\n";
}

MprStack load_mpr_stack(const std::filesystem::path& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open stack sidecar " + sidecar_path.string());
  json j;
  try {
    side >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed stack sidecar " + sidecar_path.string() + ": " + e.what());
  }

  MprStack stack;
  try {
    stack.length = j.at("dims").at(0).get<int>();
    stack.height = j.at("dims").at(1).get<int>();
    stack.width = j.at("dims").at(2).get<int>();
    stack.in_plane_spacing_mm = j.at("in_plane_spacing_mm").get<double>();
    stack.step_mm = j.at("step_mm").get<double>();
    stack.meta.lesion_id = j.at("lesion_id").get<std::string>();
    stack.meta.view_k = j.at("view_k").get<int>();
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed stack sidecar " + sidecar_path.string() + ": " + e.what());
  }
  if (stack.length < 1 || stack.height < 1 || stack.width < 1)
    throw std::runtime_error("malformed stack sidecar " + sidecar_path.string());

  std::filesystem::path raw_path = sidecar_path;
  raw_path.replace_extension(".raw");
  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) throw std::runtime_error("cannot open stack " + raw_path.string());
  std::vector<float> narrowed(stack.pixel_count());
  raw.read(reinterpret_cast<char*>(narrowed.data()),
           static_cast<std::streamsize>(narrowed.size() * sizeof(float)));
  if (raw.gcount() != static_cast<std::streamsize>(narrowed.size() * sizeof(float)))
    throw std::runtime_error("corrupt stack " + raw_path.string());
  stack.pixels.assign(narrowed.begin(), narrowed.end());
  return stack;
}

}  // namespace mprkit
