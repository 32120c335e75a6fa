#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mprkit/centerline.hpp"
#include "mprkit/labels.hpp"
#include "mprkit/volume.hpp"

namespace mprkit {

// Parameters of a single synthetic vessel: a bent tube with one Gaussian
// narrowing. Radii/lengths in mm, intensities in HU-like units.
struct PhantomSpec {
  double healthy_radius_mm = 2.0;
  double stenosis_center_t = 0.5;   // narrowing center as arc-length fraction
  double stenosis_sigma_mm = 3.0;   // axial extent of the narrowing
  double diameter_reduction = 0.0;  // d in [0,1): r_min = r0 * (1 - d)
  double lumen_hu = 400.0;
  double background_hu = 0.0;
  double noise_sigma_hu = 20.0;
  double curvature = 0.5;           // >= 0; 0 gives a straight tube
};

// Voxel grid phantoms are rasterized into, plus the centerline step.
struct PhantomGeometry {
  std::array<int, 3> dims{128, 128, 128};
  double spacing_mm = 0.5;  // isotropic
  double step_mm = 0.5;     // centerline resampling step
};

struct LesionRecord {
  std::string patient_id;
  std::string branch_id;
  std::string lesion_id;
  int start_idx = 0;  // centerline indices, start < end
  int end_idx = 0;
  double stenosis_grade = 0.0;  // area grade 1 - (1-d)^2
  bool significant = false;
  bool revascularised = false;
};

struct PhantomResult {
  Volume3D volume;
  Centerline centerline;
  LesionRecord lesion;
};

// Deterministic single-vessel phantom. Throws std::invalid_argument on spec
// violations and "phantom out of bounds" when the tube would leave the grid.
PhantomResult generate_phantom(const PhantomSpec& spec, uint64_t seed,
                               const PhantomGeometry& geom = {});

// --- Cohort generation -----------------------------------------------------
// Split into a cheap planning stage (labels, geometry parameters, seeds; no
// voxels) and a rasterization stage, so consumers can stream branch volumes
// without keeping a whole cohort on disk or in memory.

struct LesionPlan {
  std::string lesion_id;
  double center_t = 0.5;          // arc-length fraction of the narrowing
  double sigma_mm = 3.0;
  double diameter_reduction = 0;  // derived from the drawn area grade
  double grade = 0.0;
  bool revascularised = false;
  int start_idx = 0;
  int end_idx = 0;
};

struct BranchPlan {
  std::string branch_id;
  uint64_t noise_seed = 0;
  double healthy_radius_mm = 2.0;
  double curvature = 0.5;
  Centerline centerline;  // resampled at planning time (defines lesion indices)
  bool revascularised = false;
  std::vector<LesionPlan> lesions;
};

struct PatientPlan {
  std::string patient_id;
  std::vector<BranchPlan> branches;
};

struct CohortPlan {
  std::vector<PatientPlan> patients;
  PhantomSpec base;        // intensity/noise settings shared by all branches
  PhantomGeometry geometry;
};

// Lays out n_lesions over n_patients (counts differing by at most one),
// groups each patient's lesions into branches of 1..3, draws area grades
// uniformly from grade_range, and applies the branch revascularisation rule:
// the max-grade lesion is revascularised iff its grade >= 0.45, dropped with
// 5 % probability (label noise). Patients are seeded by hash(seed, id).
CohortPlan plan_cohort(int n_patients, int n_lesions, double grade_lo, double grade_hi,
                       uint64_t seed);

struct BranchPhantom {
  Volume3D volume;
  Centerline centerline;
  std::vector<LesionRecord> lesions;
};

// Rasterizes one planned branch: binary tube fill at radius
// r(s) = r0 * (1 - sum_j d_j * exp(-(s - s_j)^2 / (2 sigma_j^2)))
// plus i.i.d. Gaussian voxel noise, quantized to float32 precision.
BranchPhantom materialize_branch(const BranchPlan& branch, const PhantomSpec& base,
                                 const PhantomGeometry& geom, const std::string& patient_id);

// Plans a cohort, rasterizes every branch (patient-parallel when jobs > 1),
// writes volumes and centerlines under out_dir, and stores the dataset
// manifest as out_dir/manifest.json. Returns the manifest.
DatasetManifest generate_cohort(int n_patients, int n_lesions, double grade_lo, double grade_hi,
                                uint64_t seed, const std::filesystem::path& out_dir,
                                unsigned jobs = 1);

// Manifest rows for a plan without touching voxels (paths as generate_cohort
// would write them).
DatasetManifest manifest_from_plan(const CohortPlan& plan);

}  // namespace mprkit
