#include "mprkit/centerline.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mprkit {

using nlohmann::json;

void validate_centerline(const Centerline& cl) {
  if (cl.points.size() < 2) throw std::invalid_argument("centerline needs at least 2 points");
  if (!(cl.step_mm > 0.0)) throw std::invalid_argument("centerline step must be positive");
  for (size_t i = 0; i + 1 < cl.points.size(); ++i) {
    const double d = (cl.points[i + 1] - cl.points[i]).norm();
    if (d == 0.0) throw std::invalid_argument("centerline has duplicated points");
    if (std::abs(d - cl.step_mm) > 1e-6)
      throw std::invalid_argument("centerline spacing deviates from step_mm");
  }
}

Centerline load_centerline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open centerline " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed centerline " + path.string() + ": " + e.what());
  }
  Centerline cl;
  try {
    cl.step_mm = j.at("step_mm").get<double>();
    for (const auto& jp : j.at("points"))
      cl.points.push_back({jp.at(0).get<double>(), jp.at(1).get<double>(), jp.at(2).get<double>()});
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed centerline " + path.string() + ": " + e.what());
  }
  validate_centerline(cl);
  return cl;
}

void store_centerline(const Centerline& cl, const std::filesystem::path& path) {
  validate_centerline(cl);
  json jpoints = json::array();
  for (const auto& p : cl.points) jpoints.push_back({p.x, p.y, p.z});
  json j{{"step_mm", cl.step_mm}, {"points", std::move(jpoints)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write centerline " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace mprkit
