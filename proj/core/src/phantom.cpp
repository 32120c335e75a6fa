#include "mprkit/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "mprkit/parallel.hpp"
#include "mprkit/seeding.hpp"

namespace mprkit {
namespace {

constexpr double kRevascGradeThreshold = 0.45;  // branch rule threshold (area grade)
constexpr double kLabelFlipProb = 0.05;         // chance a rule-positive branch is flipped off
constexpr double kFineStepMm = 0.1;             // rasterization substep along the tube

struct BezierArc {
  PointMm p0, p1, p2;

  PointMm at(double t) const {
    const double u = 1.0 - t;
    return p0 * (u * u) + p1 * (2.0 * u * t) + p2 * (t * t);
  }
};

// Uniform arc-length resampling by chord stepping: from each accepted point,
// bisect for the parameter whose chord distance equals step_mm. Valid while
// chord distance grows monotonically in t, which holds for the gentle arcs
// used here (total turning angle well below 90 degrees).
Centerline resample_uniform(const BezierArc& arc, double step_mm) {
  Centerline cl;
  cl.step_mm = step_mm;
  cl.points.push_back(arc.at(0.0));
  double t_cur = 0.0;
  while ((arc.at(1.0) - cl.points.back()).norm() >= step_mm) {
    const PointMm last = cl.points.back();
    double lo = t_cur;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((arc.at(mid) - last).norm() < step_mm)
        lo = mid;
      else
        hi = mid;
    }
    t_cur = hi;
    cl.points.push_back(arc.at(t_cur));
  }
  return cl;
}

// Uniformly distributed unit vector.
Vec3 random_unit(Rng& rng) {
  while (true) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

// Randomly oriented planar arc through `center`: endpoints chord_mm apart,
// the middle control point offset by curvature * chord/4 perpendicular to
// the chord. curvature 0 degenerates to a straight segment.
Centerline make_centerline(const PointMm& center, double chord_mm, double curvature, Rng& rng,
                           double step_mm) {
  const Vec3 u = random_unit(rng);
  Vec3 v;
  while (true) {
    const Vec3 w = random_unit(rng);
    const Vec3 perp = w - u * w.dot(u);
    const double n = perp.norm();
    if (n > 1e-3) {
      v = perp / n;
      break;
    }
  }
  BezierArc arc;
  arc.p0 = center - u * (0.5 * chord_mm);
  arc.p2 = center + u * (0.5 * chord_mm);
  arc.p1 = center + v * (curvature * 0.25 * chord_mm);
  return resample_uniform(arc, step_mm);
}

void check_spec(const PhantomSpec& spec, const PhantomGeometry& geom) {
  const double min_spacing = geom.spacing_mm;
  if (!(geom.spacing_mm > 0.0) || !(geom.step_mm > 0.0))
    throw std::invalid_argument("phantom spec: spacing and step must be positive");
  if (!(spec.healthy_radius_mm >= 2.0 * min_spacing))
    throw std::invalid_argument("phantom spec: lumen not resolvable at this spacing");
  if (!(spec.stenosis_center_t >= 0.0 && spec.stenosis_center_t <= 1.0))
    throw std::invalid_argument("phantom spec: stenosis center fraction outside [0,1]");
  if (!(spec.stenosis_sigma_mm > 0.0))
    throw std::invalid_argument("phantom spec: stenosis sigma must be positive");
  if (!(spec.diameter_reduction >= 0.0 && spec.diameter_reduction < 1.0))
    throw std::invalid_argument("phantom spec: diameter reduction outside [0,1)");
  if (!(spec.noise_sigma_hu >= 0.0))
    throw std::invalid_argument("phantom spec: noise sigma must be non-negative");
  if (!(spec.curvature >= 0.0))
    throw std::invalid_argument("phantom spec: curvature must be non-negative");
  if (!std::isfinite(spec.lumen_hu) || !std::isfinite(spec.background_hu))
    throw std::invalid_argument("phantom spec: non-finite intensities");
}

// Lesion interval: stenosis center +- 3 sigma, clamped to the centerline.
void set_lesion_indices(LesionPlan& lesion, const Centerline& cl) {
  const double total = cl.length_mm();
  const double s0 = std::clamp(lesion.center_t, 0.0, 1.0) * total;
  const double half = 3.0 * lesion.sigma_mm;
  const int n = static_cast<int>(cl.points.size());
  int start = static_cast<int>(std::lround((s0 - half) / cl.step_mm));
  int end = static_cast<int>(std::lround((s0 + half) / cl.step_mm));
  start = std::clamp(start, 0, n - 2);
  end = std::clamp(end, start + 1, n - 1);
  lesion.start_idx = start;
  lesion.end_idx = end;
}

// Tube radius at arc position s: the healthy radius carved by one Gaussian
// dip per lesion.
double radius_at(const BranchPlan& branch, double s) {
  const double total = branch.centerline.length_mm();
  double reduction = 0.0;
  for (const auto& l : branch.lesions) {
    const double ds = s - std::clamp(l.center_t, 0.0, 1.0) * total;
    reduction += l.diameter_reduction * std::exp(-ds * ds / (2.0 * l.sigma_mm * l.sigma_mm));
  }
  return branch.healthy_radius_mm * (1.0 - reduction);
}

std::string patient_name(int i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "p%03d", i);
  return buf;
}

}  // namespace

BranchPhantom materialize_branch(const BranchPlan& branch, const PhantomSpec& base,
                                 const PhantomGeometry& geom, const std::string& patient_id) {
  check_spec(base, geom);
  validate_centerline(branch.centerline);

  const double sp = geom.spacing_mm;
  Volume3D vol = make_volume(geom.dims, {sp, sp, sp}, {0.0, 0.0, 0.0});
  std::fill(vol.voxels.begin(), vol.voxels.end(), base.background_hu);

  // The whole tube must stay inside the grid with a margin of two voxels.
  const double clearance = branch.healthy_radius_mm + 2.0 * sp;
  for (const auto& p : branch.centerline.points) {
    const double coords[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      const double hi = (geom.dims[a] - 1) * sp - clearance;
      if (!(coords[a] >= clearance && coords[a] <= hi))
        throw std::invalid_argument("phantom out of bounds");
    }
  }

  // Binary fill: stamp lumen balls densely along the centerline polyline.
  // The union of balls of the slowly varying radius is the varying-radius
  // tube; kFineStepMm keeps the stamping gap error far below a voxel.
  const auto& pts = branch.centerline.points;
  const double step = branch.centerline.step_mm;
  const double total = branch.centerline.length_mm();
  const int n_fine = std::max(1, static_cast<int>(std::ceil(total / kFineStepMm)));
  for (int f = 0; f <= n_fine; ++f) {
    const double s = total * (static_cast<double>(f) / n_fine);
    const size_t seg = std::min(static_cast<size_t>(s / step), pts.size() - 2);
    const double frac = s / step - static_cast<double>(seg);
    const PointMm c = pts[seg] + (pts[seg + 1] - pts[seg]) * frac;
    const double r = radius_at(branch, s);
    if (r <= 0.0) continue;
    const double r2 = r * r;
    const int ilo[3] = {std::max(0, static_cast<int>(std::ceil((c.x - r) / sp))),
                        std::max(0, static_cast<int>(std::ceil((c.y - r) / sp))),
                        std::max(0, static_cast<int>(std::ceil((c.z - r) / sp)))};
    const int ihi[3] = {std::min(geom.dims[0] - 1, static_cast<int>(std::floor((c.x + r) / sp))),
                        std::min(geom.dims[1] - 1, static_cast<int>(std::floor((c.y + r) / sp))),
                        std::min(geom.dims[2] - 1, static_cast<int>(std::floor((c.z + r) / sp)))};
    for (int k = ilo[2]; k <= ihi[2]; ++k) {
      const double dz = k * sp - c.z;
      for (int j = ilo[1]; j <= ihi[1]; ++j) {
        const double dy = j * sp - c.y;
        const double dyz2 = dy * dy + dz * dz;
        if (dyz2 > r2) continue;
        for (int i = ilo[0]; i <= ihi[0]; ++i) {
          const double dx = i * sp - c.x;
          if (dx * dx + dyz2 <= r2) vol.at(i, j, k) = base.lumen_hu;
        }
      }
    }
  }

  // Additive i.i.d. Gaussian noise in a fixed voxel order, then quantize to
  // float32 precision so the in-memory volume matches its on-disk round trip
  // bit for bit.
  Rng noise(branch.noise_seed);
  if (base.noise_sigma_hu > 0.0)
    for (auto& v : vol.voxels) v += base.noise_sigma_hu * noise.normal();
  for (auto& v : vol.voxels) v = static_cast<double>(static_cast<float>(v));

  BranchPhantom out;
  out.volume = std::move(vol);
  out.centerline = branch.centerline;
  out.lesions.reserve(branch.lesions.size());
  for (const auto& l : branch.lesions) {
    LesionRecord rec;
    rec.patient_id = patient_id;
    rec.branch_id = branch.branch_id;
    rec.lesion_id = l.lesion_id;
    rec.start_idx = l.start_idx;
    rec.end_idx = l.end_idx;
    rec.stenosis_grade = l.grade;
    rec.significant = binarize_stenosis(l.grade);
    rec.revascularised = l.revascularised;
    out.lesions.push_back(std::move(rec));
  }
  return out;
}

PhantomResult generate_phantom(const PhantomSpec& spec, uint64_t seed,
                               const PhantomGeometry& geom) {
  check_spec(spec, geom);

  const double sp = geom.spacing_mm;
  const PointMm center{(geom.dims[0] - 1) * sp * 0.5, (geom.dims[1] - 1) * sp * 0.5,
                       (geom.dims[2] - 1) * sp * 0.5};
  Rng arc_rng(seed_combine(seed, "arc"));

  BranchPlan branch;
  branch.branch_id = "b0";
  branch.noise_seed = seed_combine(seed, "noise");
  branch.healthy_radius_mm = spec.healthy_radius_mm;
  branch.curvature = spec.curvature;
  branch.centerline = make_centerline(center, 44.0, spec.curvature, arc_rng, geom.step_mm);

  LesionPlan lesion;
  lesion.lesion_id = "l0";
  lesion.center_t = spec.stenosis_center_t;
  lesion.sigma_mm = spec.stenosis_sigma_mm;
  lesion.diameter_reduction = spec.diameter_reduction;
  lesion.grade = 1.0 - (1.0 - spec.diameter_reduction) * (1.0 - spec.diameter_reduction);
  set_lesion_indices(lesion, branch.centerline);
  branch.lesions.push_back(std::move(lesion));

  BranchPhantom bp = materialize_branch(branch, spec, geom, "phantom");
  PhantomResult out;
  out.volume = std::move(bp.volume);
  out.centerline = std::move(bp.centerline);
  out.lesion = std::move(bp.lesions[0]);
  return out;
}

CohortPlan plan_cohort(int n_patients, int n_lesions, double grade_lo, double grade_hi,
                       uint64_t seed) {
  if (n_patients < 1) throw std::invalid_argument("cohort needs at least one patient");
  if (n_lesions < 1) throw std::invalid_argument("cohort needs at least one lesion");
  if (!(grade_lo >= 0.0 && grade_hi <= 0.95 && grade_lo <= grade_hi))
    throw std::invalid_argument("grade range must lie within [0, 0.95]");

  CohortPlan plan;
  check_spec(plan.base, plan.geometry);
  const double sp = plan.geometry.spacing_mm;
  const PointMm center{(plan.geometry.dims[0] - 1) * sp * 0.5,
                       (plan.geometry.dims[1] - 1) * sp * 0.5,
                       (plan.geometry.dims[2] - 1) * sp * 0.5};

  const int per_patient = n_lesions / n_patients;
  const int remainder = n_lesions % n_patients;
  for (int pi = 0; pi < n_patients; ++pi) {
    PatientPlan patient;
    patient.patient_id = patient_name(pi);
    const uint64_t patient_seed = seed_combine(seed, patient.patient_id);
    Rng rng(patient_seed);

    int remaining = per_patient + (pi < remainder ? 1 : 0);
    int branch_no = 0;
    while (remaining > 0) {
      const int size = static_cast<int>(
          std::min<uint64_t>(static_cast<uint64_t>(remaining), 1 + rng.uniform_int(3)));
      BranchPlan branch;
      branch.branch_id = patient.patient_id + "_b" + std::to_string(branch_no);
      branch.noise_seed = seed_combine(patient_seed, branch.branch_id);
      branch.healthy_radius_mm = rng.uniform(1.5, 3.0);
      branch.curvature = rng.uniform(0.1, 0.9);
      const double chord = rng.uniform(40.0, 50.0);
      branch.centerline =
          make_centerline(center, chord, branch.curvature, rng, plan.geometry.step_mm);

      for (int li = 0; li < size; ++li) {
        LesionPlan l;
        l.lesion_id = branch.branch_id + "_l" + std::to_string(li);
        l.grade = rng.uniform(grade_lo, grade_hi);
        l.diameter_reduction = 1.0 - std::sqrt(1.0 - l.grade);
        l.sigma_mm = rng.uniform(2.0, 3.5);
        l.center_t = (li + 1.0) / (size + 1.0) + rng.uniform(-0.04, 0.04);
        set_lesion_indices(l, branch.centerline);
        branch.lesions.push_back(std::move(l));
      }

      // Branch rule: the max-grade lesion (proximal tie-break) is
      // revascularised iff its grade crosses the threshold; rule-positive
      // branches are flipped off with kLabelFlipProb (label noise).
      size_t best = 0;
      for (size_t i = 1; i < branch.lesions.size(); ++i) {
        const auto& cand = branch.lesions[i];
        const auto& cur = branch.lesions[best];
        if (cand.grade > cur.grade ||
            (cand.grade == cur.grade && cand.start_idx < cur.start_idx))
          best = i;
      }
      if (branch.lesions[best].grade >= kRevascGradeThreshold)
        branch.revascularised = rng.uniform01() >= kLabelFlipProb;
      if (branch.revascularised) branch.lesions[best].revascularised = true;

      patient.branches.push_back(std::move(branch));
      remaining -= size;
      ++branch_no;
    }
    plan.patients.push_back(std::move(patient));
  }
  return plan;
}

DatasetManifest manifest_from_plan(const CohortPlan& plan) {
  DatasetManifest m;
  for (const auto& patient : plan.patients) {
    PatientEntry pe;
    pe.patient_id = patient.patient_id;
    for (const auto& branch : patient.branches) {
      BranchEntry be;
      be.branch_id = branch.branch_id;
      be.volume = "volumes/" + branch.branch_id + ".json";
      be.centerline = "centerlines/" + branch.branch_id + ".json";
      be.revascularised = branch.revascularised;
      for (const auto& l : branch.lesions) {
        LesionEntry le;
        le.lesion_id = l.lesion_id;
        le.start_idx = l.start_idx;
        le.end_idx = l.end_idx;
        le.stenosis_grade = l.grade;
        be.lesions.push_back(std::move(le));
      }
      pe.branches.push_back(std::move(be));
    }
    m.patients.push_back(std::move(pe));
  }
  return m;
}

DatasetManifest generate_cohort(int n_patients, int n_lesions, double grade_lo, double grade_hi,
                                uint64_t seed, const std::filesystem::path& out_dir,
                                unsigned jobs) {
  const CohortPlan plan = plan_cohort(n_patients, n_lesions, grade_lo, grade_hi, seed);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "volumes");
  fs::create_directories(out_dir / "centerlines");

  struct Job {
    const PatientPlan* patient;
    const BranchPlan* branch;
  };
  std::vector<Job> work;
  for (const auto& patient : plan.patients)
    for (const auto& branch : patient.branches) work.push_back({&patient, &branch});

  parallel_for(work.size(), jobs, [&](size_t i) {
    const Job& job = work[i];
    BranchPhantom bp =
        materialize_branch(*job.branch, plan.base, plan.geometry, job.patient->patient_id);
    store_volume(bp.volume, out_dir / "volumes" / (job.branch->branch_id + ".json"));
    store_centerline(bp.centerline, out_dir / "centerlines" / (job.branch->branch_id + ".json"));
  });

  DatasetManifest manifest = manifest_from_plan(plan);
  store_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace mprkit
