#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mprkit/labels.hpp"
#include "mprkit/phantom.hpp"
#include "mprkit/shaping.hpp"

namespace mprkit {

struct SampleTensor {
  std::vector<int> shape;
  std::vector<double> data;
};

// One shaped model input: a (lesion, view) pair with both binary targets.
struct LabeledSample {
  std::string patient_id;
  std::string branch_id;
  std::string lesion_id;
  bool significant = false;
  bool revascularised = false;
  int view_k = 0;
  SampleTensor tensor;
};

enum class Pathway { k25D, kCubes };

struct AssembleOptions {
  int n_views = 18;
  PaddingStrategy padding = PaddingStrategy::intermediate_resize();
  Pathway pathway = Pathway::k25D;
  int slice_height = 32;
  double in_plane_spacing_mm = 0.5;
  unsigned jobs = 1;
};

// Lesion-level cohort counts (samples = lesions * views once assembled).
struct CohortSummary {
  size_t n_lesions = 0;
  size_t n_samples = 0;
  size_t n_significant = 0;
  size_t n_revascularised = 0;
};

// Identity/label bookkeeping for every (lesion, view) pair without reading
// any voxels.
struct SamplePlanEntry {
  std::string patient_id;
  std::string branch_id;
  std::string lesion_id;
  int view_k = 0;
  bool significant = false;
  bool revascularised = false;
};

std::vector<SamplePlanEntry> plan_samples(const DatasetManifest& manifest, int n_views);
CohortSummary summarize_manifest(const DatasetManifest& manifest);

// Full pipeline per lesion: extract -> cylinder mask -> rotate k ->
// padding -> pathway shaping. Samples come back in manifest order
// (patients, branches, lesions, views). Referenced volume/centerline files
// that do not exist raise "broken manifest reference".
std::vector<LabeledSample> assemble_dataset(const std::filesystem::path& manifest_path,
                                            const AssembleOptions& options,
                                            CohortSummary* summary = nullptr);

// Same pipeline fed by in-memory phantom rasterization; no cohort files
// needed.
std::vector<LabeledSample> assemble_from_plan(const CohortPlan& plan,
                                              const AssembleOptions& options,
                                              CohortSummary* summary = nullptr);

// Disk cache: one float32 tensor file per sample plus an index JSON.
void write_cache(const std::vector<LabeledSample>& samples,
                 const std::filesystem::path& cache_dir);
std::vector<LabeledSample> load_cache(const std::filesystem::path& cache_dir);

}  // namespace mprkit
