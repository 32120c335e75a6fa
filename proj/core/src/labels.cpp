#include "mprkit/labels.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace mprkit {

using nlohmann::json;

size_t DatasetManifest::lesion_count() const {
  size_t n = 0;
  for (const auto& p : patients)
    for (const auto& b : p.branches) n += b.lesions.size();
  return n;
}

std::vector<std::string> DatasetManifest::patient_ids() const {
  std::vector<std::string> ids;
  ids.reserve(patients.size());
  for (const auto& p : patients) ids.push_back(p.patient_id);
  return ids;
}

bool binarize_stenosis(double grade) {
  if (!(grade >= 0.0 && grade <= 1.0)) throw std::invalid_argument("invalid grade");
  return grade >= 0.5;  // boundary is positive by convention
}

std::vector<bool> propagate_revascularisation(const BranchEntry& branch) {
  std::vector<bool> out(branch.lesions.size(), false);
  if (!branch.revascularised) return out;
  if (branch.lesions.empty()) throw std::invalid_argument("unassignable label");
  // The flag belongs to the whole branch; assign it to the lesion with the
  // highest grade, breaking ties toward the most proximal start index.
  size_t best = 0;
  for (size_t i = 1; i < branch.lesions.size(); ++i) {
    const auto& cand = branch.lesions[i];
    const auto& cur = branch.lesions[best];
    if (cand.stenosis_grade > cur.stenosis_grade ||
        (cand.stenosis_grade == cur.stenosis_grade && cand.start_idx < cur.start_idx))
      best = i;
  }
  out[best] = true;
  return out;
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> patient_ids;
  std::set<std::string> lesion_ids;
  for (const auto& p : manifest.patients) {
    if (p.patient_id.empty()) throw std::invalid_argument("manifest: empty patient id");
    if (!patient_ids.insert(p.patient_id).second)
      throw std::invalid_argument("manifest: duplicate patient id '" + p.patient_id + "'");
    for (const auto& b : p.branches) {
      if (b.branch_id.empty()) throw std::invalid_argument("manifest: empty branch id");
      if (b.revascularised && b.lesions.empty()) throw std::invalid_argument("unassignable label");
      for (const auto& l : b.lesions) {
        if (l.lesion_id.empty()) throw std::invalid_argument("manifest: empty lesion id");
        if (!lesion_ids.insert(l.lesion_id).second)
          throw std::invalid_argument("manifest: duplicate lesion id '" + l.lesion_id + "'");
        if (l.start_idx < 0 || l.start_idx >= l.end_idx)
          throw std::invalid_argument("manifest: inverted lesion interval '" + l.lesion_id + "'");
        if (!(l.stenosis_grade >= 0.0 && l.stenosis_grade <= 1.0))
          throw std::invalid_argument("invalid grade");
      }
    }
  }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("bad manifest: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad manifest: " + std::string(e.what()));
  }
  DatasetManifest m;
  try {
    for (const auto& jp : j.at("patients")) {
      PatientEntry p;
      p.patient_id = jp.at("patient_id").get<std::string>();
      for (const auto& jb : jp.at("branches")) {
        BranchEntry b;
        b.branch_id = jb.at("branch_id").get<std::string>();
        b.centerline = jb.at("centerline").get<std::string>();
        b.volume = jb.at("volume").get<std::string>();
        b.revascularised = jb.at("revascularised").get<bool>();
        for (const auto& jl : jb.at("lesions")) {
          LesionEntry l;
          l.lesion_id = jl.at("lesion_id").get<std::string>();
          l.start_idx = jl.at("start_idx").get<int>();
          l.end_idx = jl.at("end_idx").get<int>();
          l.stenosis_grade = jl.at("stenosis_grade").get<double>();
          b.lesions.push_back(std::move(l));
        }
        p.branches.push_back(std::move(b));
      }
      m.patients.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("bad manifest: " + std::string(e.what()));
  }
  validate_manifest(m);
  return m;
}

void store_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  validate_manifest(manifest);
  json jpatients = json::array();
  for (const auto& p : manifest.patients) {
    json jbranches = json::array();
    for (const auto& b : p.branches) {
      json jlesions = json::array();
      for (const auto& l : b.lesions) {
        jlesions.push_back({{"lesion_id", l.lesion_id},
                            {"start_idx", l.start_idx},
                            {"end_idx", l.end_idx},
                            {"stenosis_grade", l.stenosis_grade}});
      }
      jbranches.push_back({{"branch_id", b.branch_id},
                           {"centerline", b.centerline},
                           {"volume", b.volume},
                           {"revascularised", b.revascularised},
                           {"lesions", std::move(jlesions)}});
    }
    jpatients.push_back({{"patient_id", p.patient_id}, {"branches", std::move(jbranches)}});
  }
  json j{{"patients", std::move(jpatients)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("bad manifest: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace mprkit
