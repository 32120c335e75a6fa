// Synthetic vessel phantoms: geometry, rasterization oracle, cohort planning
// rules, and on-disk cohort layout.
#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "mprkit/phantom.hpp"
#include "mprkit/seeding.hpp"
#include "test_support.hpp"

using mprkit::BranchPlan;
using mprkit::Centerline;
using mprkit::CohortPlan;
using mprkit::DatasetManifest;
using mprkit::LesionPlan;
using mprkit::PhantomGeometry;
using mprkit::PhantomResult;
using mprkit::PhantomSpec;
using mprkit::PointMm;
using mprkit::Volume3D;

namespace {

// Lattice points (i,j) in a 128x128 slice whose centres lie within r_mm of
// the axis pinned at voxel (64,64); spacing 0.5 mm. Independent oracle for
// the rasterized tube cross-section.
long disk_count(double r_mm) {
  const double limit_px2 = 4.0 * r_mm * r_mm;  // (r/0.5)^2
  long count = 0;
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j) {
      const double d2 = double(i - 64) * (i - 64) + double(j - 64) * (j - 64);
      if (d2 <= limit_px2) ++count;
    }
  return count;
}

long slice_lumen_count(const Volume3D& vol, int k, double lumen_hu) {
  long count = 0;
  for (int j = 0; j < vol.dims[1]; ++j)
    for (int i = 0; i < vol.dims[0]; ++i)
      if (vol.at(i, j, k) > lumen_hu / 2.0) ++count;
  return count;
}

// Straight +z branch through voxel column (64, 64), z centres aligned with
// the voxel grid, one Gaussian narrowing centred mid-branch.
BranchPlan straight_branch(double r0, double d, double sigma) {
  BranchPlan b;
  b.branch_id = "b0";
  b.noise_seed = 1;
  b.healthy_radius_mm = r0;
  b.curvature = 0.0;
  b.centerline.step_mm = 0.5;
  for (int i = 0; i <= 104; ++i) b.centerline.points.push_back({32.0, 32.0, 6.0 + 0.5 * i});

  LesionPlan l;
  l.lesion_id = "l0";
  l.center_t = 0.5;  // arc position 26 mm -> z = 32 mm = slice 64
  l.sigma_mm = sigma;
  l.diameter_reduction = d;
  l.grade = 1.0 - (1.0 - d) * (1.0 - d);
  l.start_idx = 30;
  l.end_idx = 74;
  b.lesions.push_back(l);
  return b;
}

}  // namespace

TEST_CASE("phantom spec validation") {
  const PhantomSpec ok;
  CHECK_NOTHROW(mprkit::generate_phantom(ok, 1));

  PhantomSpec bad = ok;
  bad.diameter_reduction = 1.0;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("diameter reduction outside [0,1)"),
                       std::invalid_argument);
  bad = ok;
  bad.stenosis_sigma_mm = 0.0;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("stenosis sigma must be positive"),
                       std::invalid_argument);
  bad = ok;
  bad.stenosis_center_t = 1.5;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("stenosis center fraction"), std::invalid_argument);
  bad = ok;
  bad.curvature = -0.1;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("curvature must be non-negative"), std::invalid_argument);
  bad = ok;
  bad.noise_sigma_hu = -1.0;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("noise sigma must be non-negative"),
                       std::invalid_argument);
  bad = ok;
  bad.healthy_radius_mm = 0.5;  // thinner than two voxels at 0.5 mm spacing
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(bad, 1),
                       doctest::Contains("lumen not resolvable"), std::invalid_argument);
}

TEST_CASE("oversized phantoms refuse to leave the grid") {
  PhantomSpec spec;
  spec.healthy_radius_mm = 20.0;
  CHECK_THROWS_WITH_AS(mprkit::generate_phantom(spec, 1), doctest::Contains("phantom out of bounds"),
                       std::invalid_argument);
}

TEST_CASE("generated phantoms are deterministic in the seed") {
  PhantomSpec spec;
  spec.diameter_reduction = 0.35;
  const PhantomResult a = mprkit::generate_phantom(spec, 99);
  const PhantomResult b = mprkit::generate_phantom(spec, 99);
  CHECK(a.volume.voxels == b.volume.voxels);
  REQUIRE(a.centerline.size() == b.centerline.size());
  CHECK(a.lesion.lesion_id == b.lesion.lesion_id);
  CHECK(a.lesion.stenosis_grade == b.lesion.stenosis_grade);

  const PhantomResult c = mprkit::generate_phantom(spec, 100);
  CHECK(a.volume.voxels != c.volume.voxels);
}

TEST_CASE("phantom centerlines are uniformly resampled and in bounds") {
  PhantomSpec spec;
  spec.curvature = 0.8;
  const PhantomResult r = mprkit::generate_phantom(spec, 5);
  CHECK_NOTHROW(mprkit::validate_centerline(r.centerline));
  REQUIRE(r.centerline.size() >= 2);
  for (size_t i = 1; i < r.centerline.size(); ++i) {
    const double d = (r.centerline.points[i] - r.centerline.points[i - 1]).norm();
    CHECK(std::abs(d - r.centerline.step_mm) < 1e-9);
  }
  for (const PointMm& p : r.centerline.points) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 63.5);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 63.5);
    CHECK(p.z >= 0.0);
    CHECK(p.z <= 63.5);
  }
}

TEST_CASE("lesion record carries the area grade and significance") {
  PhantomSpec spec;
  spec.diameter_reduction = 0.3;  // grade 1 - 0.49 = 0.51 -> significant
  const PhantomResult hi = mprkit::generate_phantom(spec, 2);
  CHECK(hi.lesion.stenosis_grade == doctest::Approx(0.51).epsilon(1e-12));
  CHECK(hi.lesion.significant);
  CHECK_FALSE(hi.lesion.revascularised);  // single-vessel path applies no branch rule
  CHECK(hi.lesion.start_idx >= 0);
  CHECK(hi.lesion.start_idx < hi.lesion.end_idx);
  CHECK(hi.lesion.end_idx < static_cast<int>(hi.centerline.size()));

  spec.diameter_reduction = 0.2;  // grade 0.36 -> not significant
  const PhantomResult lo = mprkit::generate_phantom(spec, 2);
  CHECK(lo.lesion.stenosis_grade == doctest::Approx(0.36).epsilon(1e-12));
  CHECK_FALSE(lo.lesion.significant);

  // Extreme narrowing centres clamp to valid indices.
  spec.diameter_reduction = 0.4;
  spec.stenosis_center_t = 0.0;
  const PhantomResult edge = mprkit::generate_phantom(spec, 2);
  CHECK(edge.lesion.start_idx >= 0);
  CHECK(edge.lesion.start_idx < edge.lesion.end_idx);
  CHECK(edge.lesion.end_idx < static_cast<int>(edge.centerline.size()));
}

TEST_CASE("noise-free straight tube matches the exact lattice-disk oracle") {
  PhantomSpec base;
  base.noise_sigma_hu = 0.0;
  const double r0 = 3.03, d = 0.4, sigma = 4.0;
  const BranchPlan branch = straight_branch(r0, d, sigma);
  const auto bp = mprkit::materialize_branch(branch, base, PhantomGeometry{}, "p000");

  REQUIRE(bp.volume.dims == std::array<int, 3>{128, 128, 128});
  REQUIRE(bp.lesions.size() == 1);
  CHECK(bp.lesions[0].stenosis_grade == doctest::Approx(1.0 - 0.36).epsilon(1e-12));

  // Healthy cross-sections 20 mm (= 5 sigma) from the narrowing: the tube
  // radius is r0 times (1 - d*exp(-12.5)).
  const double r_healthy = r0 * (1.0 - d * std::exp(-12.5));
  const long healthy_oracle = disk_count(r_healthy);
  CHECK(slice_lumen_count(bp.volume, 24, base.lumen_hu) == healthy_oracle);   // z = 12 mm
  CHECK(slice_lumen_count(bp.volume, 104, base.lumen_hu) == healthy_oracle);  // z = 52 mm

  // Waist cross-section at the narrowing centre: radius exactly r0*(1-d);
  // neighbouring stamp balls cannot widen it because the radius profile is
  // at its minimum there.
  const double r_waist = r0 * (1.0 - d);
  CHECK(slice_lumen_count(bp.volume, 64, base.lumen_hu) == disk_count(r_waist));

  // Discrete area ratio tracks the area grade (1-d)^2.
  const double ratio = double(disk_count(r_waist)) / double(healthy_oracle);
  CHECK(std::abs(ratio - (1.0 - d) * (1.0 - d)) < 0.08);

  // Outside the tube everything stays background.
  CHECK(bp.volume.at(0, 0, 64) == base.background_hu);
  CHECK(bp.volume.at(64, 64, 64) == base.lumen_hu);
}

TEST_CASE("branch noise is seeded and float32-quantized") {
  PhantomSpec base;  // default noise 20 HU
  BranchPlan branch = straight_branch(2.5, 0.2, 3.0);
  const auto a = mprkit::materialize_branch(branch, base, PhantomGeometry{}, "p000");
  const auto b = mprkit::materialize_branch(branch, base, PhantomGeometry{}, "p000");
  CHECK(a.volume.voxels == b.volume.voxels);

  branch.noise_seed = 2;
  const auto c = mprkit::materialize_branch(branch, base, PhantomGeometry{}, "p000");
  CHECK(a.volume.voxels != c.volume.voxels);

  for (size_t i = 0; i < a.volume.voxels.size(); i += 997) {
    const double v = a.volume.voxels[i];
    CHECK(v == static_cast<double>(static_cast<float>(v)));
  }
}

TEST_CASE("cohort planning validates its arguments") {
  CHECK_THROWS_WITH_AS(mprkit::plan_cohort(0, 5, 0.0, 0.9, 1),
                       doctest::Contains("at least one patient"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(mprkit::plan_cohort(5, 0, 0.0, 0.9, 1),
                       doctest::Contains("at least one lesion"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(mprkit::plan_cohort(5, 5, 0.0, 0.96, 1),
                       doctest::Contains("grade range"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(mprkit::plan_cohort(5, 5, 0.6, 0.4, 1), doctest::Contains("grade range"),
                       std::invalid_argument);
}

TEST_CASE("cohort planning spreads lesions evenly and deterministically") {
  const CohortPlan plan = mprkit::plan_cohort(7, 10, 0.0, 0.9, 42);
  REQUIRE(plan.patients.size() == 7);

  size_t total = 0;
  std::multiset<int> per_patient;
  std::set<std::string> lesion_ids, branch_ids;
  for (const auto& p : plan.patients) {
    int mine = 0;
    for (const auto& b : p.branches) {
      CHECK(b.lesions.size() >= 1);
      CHECK(b.lesions.size() <= 3);
      CHECK(branch_ids.insert(b.branch_id).second);
      CHECK_NOTHROW(mprkit::validate_centerline(b.centerline));
      for (const auto& l : b.lesions) {
        CHECK(lesion_ids.insert(l.lesion_id).second);
        CHECK(l.grade >= 0.0);
        CHECK(l.grade <= 0.9);
        CHECK(l.diameter_reduction ==
              doctest::Approx(1.0 - std::sqrt(1.0 - l.grade)).epsilon(1e-12));
        CHECK(l.start_idx >= 0);
        CHECK(l.start_idx < l.end_idx);
        CHECK(l.end_idx < static_cast<int>(b.centerline.size()));
        ++mine;
      }
    }
    per_patient.insert(mine);
    total += static_cast<size_t>(mine);
  }
  CHECK(total == 10);
  CHECK(*per_patient.rbegin() - *per_patient.begin() <= 1);  // counts differ by at most one

  // Determinism: identical plans for the same seed, different otherwise.
  const CohortPlan again = mprkit::plan_cohort(7, 10, 0.0, 0.9, 42);
  REQUIRE(again.patients.size() == plan.patients.size());
  for (size_t i = 0; i < plan.patients.size(); ++i) {
    REQUIRE(again.patients[i].branches.size() == plan.patients[i].branches.size());
    for (size_t j = 0; j < plan.patients[i].branches.size(); ++j) {
      const auto& x = plan.patients[i].branches[j];
      const auto& y = again.patients[i].branches[j];
      CHECK(x.noise_seed == y.noise_seed);
      CHECK(x.healthy_radius_mm == y.healthy_radius_mm);
      REQUIRE(x.lesions.size() == y.lesions.size());
      for (size_t k = 0; k < x.lesions.size(); ++k) {
        CHECK(x.lesions[k].grade == y.lesions[k].grade);
        CHECK(x.lesions[k].revascularised == y.lesions[k].revascularised);
      }
    }
  }
  const CohortPlan other = mprkit::plan_cohort(7, 10, 0.0, 0.9, 43);
  CHECK(other.patients[0].branches[0].lesions[0].grade !=
        plan.patients[0].branches[0].lesions[0].grade);
}

TEST_CASE("revascularisation labels obey the one-sided branch rule") {
  // Low grades can never cross the 0.45 rule threshold: the label noise is
  // one-sided, so nothing is ever revascularised.
  const CohortPlan low = mprkit::plan_cohort(20, 60, 0.0, 0.2, 7);
  for (const auto& p : low.patients)
    for (const auto& b : p.branches) {
      CHECK_FALSE(b.revascularised);
      for (const auto& l : b.lesions) CHECK_FALSE(l.revascularised);
    }

  // High grades make every branch rule-positive; about 5% are flipped off.
  const CohortPlan high = mprkit::plan_cohort(100, 300, 0.9, 0.9, 7);
  int branches = 0, revasc = 0;
  for (const auto& p : high.patients)
    for (const auto& b : p.branches) {
      ++branches;
      int flagged = 0;
      double best_grade = -1.0;
      int best_start = 0;
      const LesionPlan* flagged_lesion = nullptr;
      for (const auto& l : b.lesions) {
        if (l.revascularised) {
          ++flagged;
          flagged_lesion = &l;
        }
        if (l.grade > best_grade || (l.grade == best_grade && l.start_idx < best_start)) {
          best_grade = l.grade;
          best_start = l.start_idx;
        }
      }
      if (b.revascularised) {
        ++revasc;
        REQUIRE(flagged == 1);
        CHECK(flagged_lesion->grade == best_grade);
        CHECK(flagged_lesion->grade >= 0.45);
      } else {
        CHECK(flagged == 0);
      }
    }
  const double fraction = double(revasc) / double(branches);
  CHECK(fraction > 0.85);
  CHECK(fraction <= 1.0);
}

TEST_CASE("cohort generation writes a loadable, self-consistent layout") {
  test_support::TempDir tmp("cohort");
  const DatasetManifest manifest = mprkit::generate_cohort(3, 5, 0.0, 0.9, 11, tmp.path(), 2);

  CHECK(manifest.lesion_count() == 5);
  CHECK_NOTHROW(mprkit::validate_manifest(manifest));

  const DatasetManifest loaded = mprkit::load_manifest(tmp.path() / "manifest.json");
  CHECK(loaded.lesion_count() == 5);
  REQUIRE(loaded.patients.size() == manifest.patients.size());
  CHECK(loaded.patient_ids() == manifest.patient_ids());

  for (const auto& p : loaded.patients)
    for (const auto& b : p.branches) {
      const Volume3D vol = mprkit::load_volume(tmp.path() / b.volume);
      CHECK(vol.dims == std::array<int, 3>{128, 128, 128});
      const Centerline cl = mprkit::load_centerline(tmp.path() / b.centerline);
      CHECK_NOTHROW(mprkit::validate_centerline(cl));
      for (const auto& l : b.lesions) CHECK(l.end_idx < static_cast<int>(cl.size()));
    }

  // The manifest is exactly the planned cohort's bookkeeping.
  const DatasetManifest planned =
      mprkit::manifest_from_plan(mprkit::plan_cohort(3, 5, 0.0, 0.9, 11));
  REQUIRE(planned.patients.size() == loaded.patients.size());
  for (size_t i = 0; i < planned.patients.size(); ++i)
    CHECK(planned.patients[i].patient_id == loaded.patients[i].patient_id);
}
