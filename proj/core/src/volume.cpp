#include "mprkit/volume.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw volume format assumes a little-endian host");

namespace mprkit {

Volume3D make_volume(std::array<int, 3> dims, std::array<double, 3> spacing,
                     std::array<double, 3> origin) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) throw std::invalid_argument("volume dims must be >= 2 per axis");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw std::invalid_argument("volume spacing must be positive");
    if (!std::isfinite(origin[a])) throw std::invalid_argument("volume origin must be finite");
  }
  Volume3D vol;
  vol.dims = dims;
  vol.spacing = spacing;
  vol.origin = origin;
  vol.voxels.assign(vol.voxel_count(), 0.0);
  return vol;
}

double sample_trilinear(const Volume3D& vol, const PointMm& p) {
  if (!p.is_finite()) throw std::invalid_argument("invalid coordinate");

  const double gx = (p.x - vol.origin[0]) / vol.spacing[0];
  const double gy = (p.y - vol.origin[1]) / vol.spacing[1];
  const double gz = (p.z - vol.origin[2]) / vol.spacing[2];

  const double mx = static_cast<double>(vol.dims[0] - 1);
  const double my = static_cast<double>(vol.dims[1] - 1);
  const double mz = static_cast<double>(vol.dims[2] - 1);
  if (gx < 0.0 || gx > mx || gy < 0.0 || gy > my || gz < 0.0 || gz > mz) return 0.0;

  int i0 = static_cast<int>(gx);
  int j0 = static_cast<int>(gy);
  int k0 = static_cast<int>(gz);
  if (i0 > vol.dims[0] - 2) i0 = vol.dims[0] - 2;
  if (j0 > vol.dims[1] - 2) j0 = vol.dims[1] - 2;
  if (k0 > vol.dims[2] - 2) k0 = vol.dims[2] - 2;
  const double fx = gx - i0;
  const double fy = gy - j0;
  const double fz = gz - k0;

  const double c000 = vol.at(i0, j0, k0);
  const double c100 = vol.at(i0 + 1, j0, k0);
  const double c010 = vol.at(i0, j0 + 1, k0);
  const double c110 = vol.at(i0 + 1, j0 + 1, k0);
  const double c001 = vol.at(i0, j0, k0 + 1);
  const double c101 = vol.at(i0 + 1, j0, k0 + 1);
  const double c011 = vol.at(i0, j0 + 1, k0 + 1);
  const double c111 = vol.at(i0 + 1, j0 + 1, k0 + 1);

  const double c00 = c000 * (1.0 - fx) + c100 * fx;
  const double c10 = c010 * (1.0 - fx) + c110 * fx;
  const double c01 = c001 * (1.0 - fx) + c101 * fx;
  const double c11 = c011 * (1.0 - fx) + c111 * fx;
  const double c0 = c00 * (1.0 - fy) + c10 * fy;
  const double c1 = c01 * (1.0 - fy) + c11 * fy;
  return c0 * (1.0 - fz) + c1 * fz;
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string(what) + ": cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error(std::string(what) + ": " + path.string());
  }
  return j;
}

std::array<double, 3> triple_d(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw nlohmann::json::type_error::create(302, "triple", nullptr);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::array<int, 3> triple_i(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw nlohmann::json::type_error::create(302, "triple", nullptr);
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

}  // namespace

Volume3D load_volume(const std::filesystem::path& manifest_path) {
  nlohmann::json j = read_json_file(manifest_path, "bad manifest");

  Volume3D vol;
  std::string raw_name;
  try {
    vol = make_volume(triple_i(j.at("dims")), triple_d(j.at("spacing_mm")),
                      triple_d(j.at("origin_mm")));
    raw_name = j.at("raw").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("bad manifest: " + manifest_path.string());
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("bad manifest: " + manifest_path.string());
  }

  const std::filesystem::path raw_path = manifest_path.parent_path() / raw_name;
  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) throw std::runtime_error("corrupt volume: missing raw file " + raw_path.string());
  raw.seekg(0, std::ios::end);
  const auto bytes = static_cast<uint64_t>(raw.tellg());
  raw.seekg(0, std::ios::beg);
  const uint64_t expected = vol.voxel_count() * sizeof(float);
  if (bytes != expected)
    throw std::runtime_error("corrupt volume: raw size mismatch in " + raw_path.string());

  std::vector<float> buf(vol.voxel_count());
  raw.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
  if (!raw) throw std::runtime_error("corrupt volume: short read from " + raw_path.string());
  for (size_t i = 0; i < buf.size(); ++i) {
    if (!std::isfinite(buf[i]))
      throw std::runtime_error("corrupt volume: non-finite voxel in " + raw_path.string());
    vol.voxels[i] = static_cast<double>(buf[i]);
  }
  return vol;
}

void store_volume(const Volume3D& vol, const std::filesystem::path& manifest_path) {
  if (vol.voxels.size() != vol.voxel_count())
    throw std::invalid_argument("volume voxel count does not match dims");

  std::filesystem::path raw_path = manifest_path;
  raw_path.replace_extension(".raw");

  {
    std::ofstream raw(raw_path, std::ios::binary | std::ios::trunc);
    if (!raw) throw std::runtime_error("cannot write " + raw_path.string());
    std::vector<float> buf(vol.voxels.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(vol.voxels[i]);
    raw.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!raw) throw std::runtime_error("cannot write " + raw_path.string());
  }

  nlohmann::json j;
  j["dims"] = vol.dims;
  j["spacing_mm"] = vol.spacing;
  j["origin_mm"] = vol.origin;
  j["raw"] = raw_path.filename().string();
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
  out << j.dump(2) << "\n";
}

}  // namespace mprkit
