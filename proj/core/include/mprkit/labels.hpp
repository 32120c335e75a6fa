#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mprkit {

struct LesionEntry {
  std::string lesion_id;
  int start_idx = 0;
  int end_idx = 0;
  double stenosis_grade = 0.0;
};

struct BranchEntry {
  std::string branch_id;
  std::string centerline;  // path relative to the manifest
  std::string volume;      // volume manifest path relative to the manifest
  bool revascularised = false;
  std::vector<LesionEntry> lesions;
};

struct PatientEntry {
  std::string patient_id;
  std::vector<BranchEntry> branches;
};

struct DatasetManifest {
  std::vector<PatientEntry> patients;

  size_t lesion_count() const;
  std::vector<std::string> patient_ids() const;
};

// True iff the stenosis grade crosses the significance threshold (boundary
// inclusive). Grades outside [0,1] are an error.
bool binarize_stenosis(double grade);

// Branch-level revascularisation propagated to exactly one lesion: the one
// with the highest grade, ties broken by the most proximal start index.
std::vector<bool> propagate_revascularisation(const BranchEntry& branch);

// Throws std::invalid_argument when an invariant is broken (duplicate
// patient ids, inverted lesion indices, grades outside [0,1], ...).
void validate_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);
void store_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace mprkit
