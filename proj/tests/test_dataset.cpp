#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mprkit/dataset.hpp"
#include "mprkit/labels.hpp"
#include "mprkit/phantom.hpp"
#include "mprkit/reformat.hpp"
#include "mprkit/shaping.hpp"
#include "test_support.hpp"

using mprkit::AssembleOptions;
using mprkit::BranchEntry;
using mprkit::CohortPlan;
using mprkit::CohortSummary;
using mprkit::DatasetManifest;
using mprkit::LabeledSample;
using mprkit::LesionEntry;
using mprkit::PaddingStrategy;
using mprkit::PatientEntry;
using mprkit::Pathway;
using mprkit::SamplePlanEntry;

namespace {

// Two patients, three branches, four lesions with hand-picked grades:
// p0/b0 carries {0.7 revascularised, 0.3}, p0/b1 carries {0.5}, p1/b2 {0.2}.
DatasetManifest tiny_manifest() {
  DatasetManifest m;
  PatientEntry p0;
  p0.patient_id = "p0";
  BranchEntry b0;
  b0.branch_id = "b0";
  b0.volume = "volumes/b0.json";
  b0.centerline = "centerlines/b0.json";
  b0.revascularised = true;
  b0.lesions.push_back({"q0", 10, 40, 0.7});
  b0.lesions.push_back({"q1", 50, 80, 0.3});
  BranchEntry b1;
  b1.branch_id = "b1";
  b1.volume = "volumes/b1.json";
  b1.centerline = "centerlines/b1.json";
  b1.lesions.push_back({"q2", 5, 30, 0.5});
  p0.branches = {b0, b1};

  PatientEntry p1;
  p1.patient_id = "p1";
  BranchEntry b2;
  b2.branch_id = "b2";
  b2.volume = "volumes/b2.json";
  b2.centerline = "centerlines/b2.json";
  b2.lesions.push_back({"q3", 12, 44, 0.2});
  p1.branches = {b2};

  m.patients = {p0, p1};
  return m;
}

struct IdTriple {
  std::string patient, branch, lesion;
};

// Lesion identities in manifest traversal order for a cohort plan.
std::vector<IdTriple> plan_lesion_order(const CohortPlan& plan) {
  std::vector<IdTriple> order;
  for (const auto& patient : plan.patients) {
    for (const auto& branch : patient.branches) {
      for (const auto& lesion : branch.lesions) {
        order.push_back({patient.patient_id, branch.branch_id, lesion.lesion_id});
      }
    }
  }
  return order;
}

}  // namespace

TEST_CASE("plan_samples enumerates lesion/view pairs in manifest order") {
  const DatasetManifest manifest = tiny_manifest();
  const std::vector<SamplePlanEntry> entries = mprkit::plan_samples(manifest, 3);
  REQUIRE(entries.size() == 4 * 3);

  const std::vector<std::string> lesion_order = {"q0", "q1", "q2", "q3"};
  for (size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].lesion_id == lesion_order[i / 3]);
    CHECK(entries[i].view_k == static_cast<int>(i % 3));
  }
  CHECK(entries[0].patient_id == "p0");
  CHECK(entries[0].branch_id == "b0");
  CHECK(entries[9].patient_id == "p1");
  CHECK(entries[9].branch_id == "b2");

  // Labels: grade >= 0.5 is significant; only the max-grade lesion of the
  // revascularised branch carries the revascularisation flag.
  CHECK(entries[0].significant);        // q0 at 0.7
  CHECK(entries[0].revascularised);     // max grade in revascularised b0
  CHECK_FALSE(entries[3].significant);  // q1 at 0.3
  CHECK_FALSE(entries[3].revascularised);
  CHECK(entries[6].significant);        // q2 at exactly 0.5
  CHECK_FALSE(entries[6].revascularised);
  CHECK_FALSE(entries[9].significant);  // q3 at 0.2

  CHECK_THROWS_WITH_AS(mprkit::plan_samples(manifest, 0), "need at least one view",
                       std::invalid_argument);
}

TEST_CASE("summarize_manifest counts lesions and labels without touching voxels") {
  const CohortSummary s = mprkit::summarize_manifest(tiny_manifest());
  CHECK(s.n_lesions == 4);
  CHECK(s.n_significant == 2);
  CHECK(s.n_revascularised == 1);
  CHECK(s.n_samples == 0);
}

TEST_CASE("a counts-matched manifest expands to lesions times views") {
  // Five lesions at three views each; the full-scale expansion rule is the
  // same multiplication.
  const DatasetManifest manifest = [&] {
    DatasetManifest m = tiny_manifest();
    m.patients[1].branches[0].lesions.push_back({"q4", 50, 70, 0.6});
    return m;
  }();
  CHECK(mprkit::plan_samples(manifest, 18).size() == 5 * 18);
  CHECK(mprkit::summarize_manifest(manifest).n_lesions == 5);
}

TEST_CASE("assembled samples follow manifest order with the documented shapes") {
  const CohortPlan plan = mprkit::plan_cohort(2, 3, 0.2, 0.8, 42);
  AssembleOptions opt;
  opt.n_views = 4;
  opt.jobs = 2;

  CohortSummary summary;
  const std::vector<LabeledSample> samples = mprkit::assemble_from_plan(plan, opt, &summary);

  const std::vector<IdTriple> order = plan_lesion_order(plan);
  REQUIRE(order.size() == 3);
  REQUIRE(samples.size() == order.size() * 4);
  CHECK(summary.n_lesions == 3);
  CHECK(summary.n_samples == samples.size());

  for (size_t i = 0; i < samples.size(); ++i) {
    const IdTriple& want = order[i / 4];
    CHECK(samples[i].patient_id == want.patient);
    CHECK(samples[i].branch_id == want.branch);
    CHECK(samples[i].lesion_id == want.lesion);
    CHECK(samples[i].view_k == static_cast<int>(i % 4));
    CHECK(samples[i].tensor.shape == std::vector<int>{2, 64, 32});
    CHECK(samples[i].tensor.data.size() == 2u * 64u * 32u);
  }

  // Same lesion, different views: identity fields repeat, tensors differ.
  CHECK(samples[0].lesion_id == samples[1].lesion_id);
  CHECK(samples[0].tensor.data != samples[1].tensor.data);
}

TEST_CASE("the assembly pipeline composes extraction, masking, rotation, padding, slicing") {
  const CohortPlan plan = mprkit::plan_cohort(1, 1, 0.4, 0.6, 7);
  REQUIRE(plan.patients.size() == 1);
  REQUIRE(plan.patients[0].branches.size() == 1);

  AssembleOptions opt;
  opt.n_views = 3;

  SUBCASE("two-slice pathway") {
    const std::vector<LabeledSample> samples = mprkit::assemble_from_plan(plan, opt);
    REQUIRE(samples.size() == 3);

    mprkit::BranchPhantom bp = mprkit::materialize_branch(
        plan.patients[0].branches[0], plan.base, plan.geometry, plan.patients[0].patient_id);
    REQUIRE(bp.lesions.size() == 1);
    const mprkit::FrameSequence frames = mprkit::build_frames(bp.centerline);
    const mprkit::MprStack masked = mprkit::cylinder_mask(mprkit::extract_mpr(
        bp.volume, bp.centerline, frames, bp.lesions[0], opt.slice_height,
        opt.in_plane_spacing_mm));

    for (int k = 0; k < 3; ++k) {
      const mprkit::MprStack padded =
          mprkit::apply_padding(mprkit::rotate_view(masked, k, 3), opt.padding);
      const mprkit::SlicePair pair = mprkit::slice_pair(padded);
      CHECK(samples[k].tensor.shape ==
            std::vector<int>{2, pair.length, pair.width});
      CHECK(samples[k].tensor.data == pair.pixels);
      CHECK(samples[k].significant == bp.lesions[0].significant);
      CHECK(samples[k].revascularised == bp.lesions[0].revascularised);
    }
  }

  SUBCASE("cube pathway") {
    AssembleOptions cubes = opt;
    cubes.pathway = Pathway::kCubes;
    const std::vector<LabeledSample> samples = mprkit::assemble_from_plan(plan, cubes);
    REQUIRE(samples.size() == 3);

    mprkit::BranchPhantom bp = mprkit::materialize_branch(
        plan.patients[0].branches[0], plan.base, plan.geometry, plan.patients[0].patient_id);
    const mprkit::FrameSequence frames = mprkit::build_frames(bp.centerline);
    const mprkit::MprStack masked = mprkit::cylinder_mask(mprkit::extract_mpr(
        bp.volume, bp.centerline, frames, bp.lesions[0], cubes.slice_height,
        cubes.in_plane_spacing_mm));

    for (int k = 0; k < 3; ++k) {
      const mprkit::MprStack padded =
          mprkit::apply_padding(mprkit::rotate_view(masked, k, 3), cubes.padding);
      const mprkit::CubeSequence seq =
          mprkit::cube_sequence(mprkit::downscale_inplane(padded, 25));
      // Intermediate padding emits 64 slices: windows at stride 5 -> 8 cubes.
      CHECK(seq.count == 8);
      CHECK(samples[k].tensor.shape == std::vector<int>{seq.count, 25, 25, 25});
      CHECK(samples[k].tensor.data == seq.data);
    }
  }
}

TEST_CASE("disk-backed assembly matches in-memory assembly bit for bit") {
  test_support::TempDir tmp("cohort");
  const DatasetManifest written = mprkit::generate_cohort(2, 3, 0.2, 0.8, 42, tmp.path(), 2);
  REQUIRE(written.patients.size() == 2);

  AssembleOptions opt;
  opt.n_views = 2;
  opt.jobs = 2;

  CohortSummary from_disk_summary;
  const std::vector<LabeledSample> from_disk =
      mprkit::assemble_dataset(tmp.path() / "manifest.json", opt, &from_disk_summary);
  CohortSummary in_memory_summary;
  const std::vector<LabeledSample> in_memory =
      mprkit::assemble_from_plan(mprkit::plan_cohort(2, 3, 0.2, 0.8, 42), opt, &in_memory_summary);

  REQUIRE(from_disk.size() == in_memory.size());
  CHECK(from_disk_summary.n_lesions == in_memory_summary.n_lesions);
  CHECK(from_disk_summary.n_samples == in_memory_summary.n_samples);
  CHECK(from_disk_summary.n_significant == in_memory_summary.n_significant);
  CHECK(from_disk_summary.n_revascularised == in_memory_summary.n_revascularised);
  for (size_t i = 0; i < from_disk.size(); ++i) {
    CHECK(from_disk[i].patient_id == in_memory[i].patient_id);
    CHECK(from_disk[i].branch_id == in_memory[i].branch_id);
    CHECK(from_disk[i].lesion_id == in_memory[i].lesion_id);
    CHECK(from_disk[i].view_k == in_memory[i].view_k);
    CHECK(from_disk[i].significant == in_memory[i].significant);
    CHECK(from_disk[i].revascularised == in_memory[i].revascularised);
    CHECK(from_disk[i].tensor.shape == in_memory[i].tensor.shape);
    // Voxels are float32-quantized at generation time, so the disk round
    // trip is lossless and the two pipelines agree exactly.
    CHECK(from_disk[i].tensor.data == in_memory[i].tensor.data);
  }

  SUBCASE("missing referenced files are reported") {
    const DatasetManifest manifest = mprkit::load_manifest(tmp.path() / "manifest.json");
    const std::filesystem::path victim =
        tmp.path() / manifest.patients[0].branches[0].volume;
    std::filesystem::remove(victim);
    CHECK_THROWS_WITH_AS(mprkit::assemble_dataset(tmp.path() / "manifest.json", opt),
                         doctest::Contains("broken manifest reference"), std::runtime_error);
  }
}

TEST_CASE("tensor caches round-trip through float32 files") {
  const CohortPlan plan = mprkit::plan_cohort(1, 2, 0.3, 0.7, 9);
  AssembleOptions opt;
  opt.n_views = 2;
  const std::vector<LabeledSample> samples = mprkit::assemble_from_plan(plan, opt);
  REQUIRE(samples.size() == 4);

  test_support::TempDir tmp("cache");
  mprkit::write_cache(samples, tmp.path());
  const std::vector<LabeledSample> loaded = mprkit::load_cache(tmp.path());
  REQUIRE(loaded.size() == samples.size());

  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(loaded[i].patient_id == samples[i].patient_id);
    CHECK(loaded[i].branch_id == samples[i].branch_id);
    CHECK(loaded[i].lesion_id == samples[i].lesion_id);
    CHECK(loaded[i].view_k == samples[i].view_k);
    CHECK(loaded[i].significant == samples[i].significant);
    CHECK(loaded[i].revascularised == samples[i].revascularised);
    REQUIRE(loaded[i].tensor.shape == samples[i].tensor.shape);
    REQUIRE(loaded[i].tensor.data.size() == samples[i].tensor.data.size());
    for (size_t j = 0; j < samples[i].tensor.data.size(); ++j) {
      CHECK(loaded[i].tensor.data[j] ==
            static_cast<double>(static_cast<float>(samples[i].tensor.data[j])));
    }
  }
}

TEST_CASE("cache loading rejects missing or corrupt entries") {
  test_support::TempDir tmp("cache_bad");
  CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                       doctest::Contains("cannot open cache index"), std::runtime_error);

  const CohortPlan plan = mprkit::plan_cohort(1, 1, 0.3, 0.7, 10);
  AssembleOptions opt;
  opt.n_views = 1;
  const std::vector<LabeledSample> samples = mprkit::assemble_from_plan(plan, opt);
  mprkit::write_cache(samples, tmp.path());

  SUBCASE("unparseable index") {
    std::ofstream(tmp.path() / "index.json", std::ios::trunc) << "{ nope";
    CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                         doctest::Contains("malformed cache index"), std::runtime_error);
  }
  SUBCASE("index missing required fields") {
    std::ofstream(tmp.path() / "index.json", std::ios::trunc) << "{\"samples\": [{}]}";
    CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                         doctest::Contains("malformed cache index"), std::runtime_error);
  }
  SUBCASE("missing tensor sidecar") {
    nlohmann::json index =
        nlohmann::json::parse(test_support::read_file(tmp.path() / "index.json"));
    const std::string sidecar = index["samples"][0]["tensor"].get<std::string>();
    std::filesystem::remove(tmp.path() / sidecar);
    CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                         doctest::Contains("broken cache reference"), std::runtime_error);
  }
  SUBCASE("corrupt tensor shape") {
    nlohmann::json index =
        nlohmann::json::parse(test_support::read_file(tmp.path() / "index.json"));
    const std::filesystem::path sidecar_path =
        tmp.path() / index["samples"][0]["tensor"].get<std::string>();
    nlohmann::json sidecar = nlohmann::json::parse(test_support::read_file(sidecar_path));
    sidecar["shape"] = {2, 0, 32};
    std::ofstream(sidecar_path, std::ios::trunc) << sidecar.dump();
    CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                         doctest::Contains("corrupt tensor shape"), std::runtime_error);
  }
  SUBCASE("truncated tensor payload") {
    nlohmann::json index =
        nlohmann::json::parse(test_support::read_file(tmp.path() / "index.json"));
    const std::filesystem::path sidecar_path =
        tmp.path() / index["samples"][0]["tensor"].get<std::string>();
    nlohmann::json sidecar = nlohmann::json::parse(test_support::read_file(sidecar_path));
    const std::filesystem::path raw_path =
        sidecar_path.parent_path() / sidecar["raw"].get<std::string>();
    std::filesystem::resize_file(raw_path, 12);
    CHECK_THROWS_WITH_AS(mprkit::load_cache(tmp.path()),
                         doctest::Contains("corrupt tensor"), std::runtime_error);
  }
}
