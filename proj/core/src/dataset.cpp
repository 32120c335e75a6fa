#include "mprkit/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "mprkit/parallel.hpp"
#include "mprkit/reformat.hpp"

namespace mprkit {

using nlohmann::json;

namespace {

// Per-lesion labels for one manifest branch, in branch order.
std::vector<LesionRecord> branch_lesion_records(const std::string& patient_id,
                                                const BranchEntry& branch) {
  const std::vector<bool> revasc = propagate_revascularisation(branch);
  std::vector<LesionRecord> records;
  records.reserve(branch.lesions.size());
  for (size_t i = 0; i < branch.lesions.size(); ++i) {
    const LesionEntry& l = branch.lesions[i];
    LesionRecord rec;
    rec.patient_id = patient_id;
    rec.branch_id = branch.branch_id;
    rec.lesion_id = l.lesion_id;
    rec.start_idx = l.start_idx;
    rec.end_idx = l.end_idx;
    rec.stenosis_grade = l.stenosis_grade;
    rec.significant = binarize_stenosis(l.stenosis_grade);
    rec.revascularised = revasc[i];
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<LabeledSample> process_branch(const Volume3D& vol, const Centerline& cl,
                                          const std::vector<LesionRecord>& lesions,
                                          const AssembleOptions& opt) {
  const FrameSequence frames = build_frames(cl);
  std::vector<LabeledSample> out;
  out.reserve(lesions.size() * static_cast<size_t>(opt.n_views));
  for (const LesionRecord& lesion : lesions) {
    const MprStack masked = cylinder_mask(
        extract_mpr(vol, cl, frames, lesion, opt.slice_height, opt.in_plane_spacing_mm));
    for (int k = 0; k < opt.n_views; ++k) {
      const MprStack padded = apply_padding(rotate_view(masked, k, opt.n_views), opt.padding);
      LabeledSample sample;
      sample.patient_id = lesion.patient_id;
      sample.branch_id = lesion.branch_id;
      sample.lesion_id = lesion.lesion_id;
      sample.significant = lesion.significant;
      sample.revascularised = lesion.revascularised;
      sample.view_k = k;
      if (opt.pathway == Pathway::k25D) {
        SlicePair pair = slice_pair(padded);
        sample.tensor.shape = {2, pair.length, pair.width};
        sample.tensor.data = std::move(pair.pixels);
      } else {
        CubeSequence cubes = cube_sequence(downscale_inplane(padded, 25));
        sample.tensor.shape = {cubes.count, cubes.cube, cubes.cube, cubes.cube};
        sample.tensor.data = std::move(cubes.data);
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

CohortSummary summarize_records(const std::vector<std::vector<LesionRecord>>& per_branch) {
  CohortSummary s;
  for (const auto& branch : per_branch) {
    for (const auto& rec : branch) {
      ++s.n_lesions;
      if (rec.significant) ++s.n_significant;
      if (rec.revascularised) ++s.n_revascularised;
    }
  }
  return s;
}

}  // namespace

std::vector<SamplePlanEntry> plan_samples(const DatasetManifest& manifest, int n_views) {
  if (n_views < 1) throw std::invalid_argument("need at least one view");
  validate_manifest(manifest);
  std::vector<SamplePlanEntry> out;
  for (const auto& patient : manifest.patients) {
    for (const auto& branch : patient.branches) {
      const std::vector<LesionRecord> records = branch_lesion_records(patient.patient_id, branch);
      for (const auto& rec : records) {
        for (int k = 0; k < n_views; ++k) {
          SamplePlanEntry e;
          e.patient_id = rec.patient_id;
          e.branch_id = rec.branch_id;
          e.lesion_id = rec.lesion_id;
          e.view_k = k;
          e.significant = rec.significant;
          e.revascularised = rec.revascularised;
          out.push_back(std::move(e));
        }
      }
    }
  }
  return out;
}

CohortSummary summarize_manifest(const DatasetManifest& manifest) {
  validate_manifest(manifest);
  std::vector<std::vector<LesionRecord>> per_branch;
  for (const auto& patient : manifest.patients)
    for (const auto& branch : patient.branches)
      per_branch.push_back(branch_lesion_records(patient.patient_id, branch));
  return summarize_records(per_branch);
}

std::vector<LabeledSample> assemble_dataset(const std::filesystem::path& manifest_path,
                                            const AssembleOptions& options,
                                            CohortSummary* summary) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();

  struct BranchJob {
    std::filesystem::path volume;
    std::filesystem::path centerline;
    std::vector<LesionRecord> lesions;
  };
  std::vector<BranchJob> jobs_list;
  for (const auto& patient : manifest.patients) {
    for (const auto& branch : patient.branches) {
      BranchJob job;
      job.volume = base / branch.volume;
      job.centerline = base / branch.centerline;
      job.lesions = branch_lesion_records(patient.patient_id, branch);
      if (!std::filesystem::exists(job.volume))
        throw std::runtime_error("broken manifest reference: " + job.volume.string());
      if (!std::filesystem::exists(job.centerline))
        throw std::runtime_error("broken manifest reference: " + job.centerline.string());
      jobs_list.push_back(std::move(job));
    }
  }

  std::vector<std::vector<LabeledSample>> per_branch(jobs_list.size());
  parallel_for(jobs_list.size(), options.jobs, [&](size_t i) {
    const BranchJob& job = jobs_list[i];
    const Volume3D vol = load_volume(job.volume);
    const Centerline cl = load_centerline(job.centerline);
    per_branch[i] = process_branch(vol, cl, job.lesions, options);
  });

  if (summary) {
    std::vector<std::vector<LesionRecord>> records;
    for (const auto& job : jobs_list) records.push_back(job.lesions);
    *summary = summarize_records(records);
  }

  std::vector<LabeledSample> out;
  for (auto& branch : per_branch)
    for (auto& sample : branch) {
      if (summary) ++summary->n_samples;
      out.push_back(std::move(sample));
    }
  return out;
}

std::vector<LabeledSample> assemble_from_plan(const CohortPlan& plan,
                                              const AssembleOptions& options,
                                              CohortSummary* summary) {
  struct BranchJob {
    const PatientPlan* patient;
    const BranchPlan* branch;
  };
  std::vector<BranchJob> jobs_list;
  for (const auto& patient : plan.patients)
    for (const auto& branch : patient.branches) jobs_list.push_back({&patient, &branch});

  std::vector<std::vector<LabeledSample>> per_branch(jobs_list.size());
  std::vector<std::vector<LesionRecord>> records(jobs_list.size());
  parallel_for(jobs_list.size(), options.jobs, [&](size_t i) {
    const BranchJob& job = jobs_list[i];
    BranchPhantom bp =
        materialize_branch(*job.branch, plan.base, plan.geometry, job.patient->patient_id);
    records[i] = bp.lesions;
    per_branch[i] = process_branch(bp.volume, bp.centerline, bp.lesions, options);
  });

  if (summary) *summary = summarize_records(records);

  std::vector<LabeledSample> out;
  for (auto& branch : per_branch)
    for (auto& sample : branch) {
      if (summary) ++summary->n_samples;
      out.push_back(std::move(sample));
    }
  return out;
}

void write_cache(const std::vector<LabeledSample>& samples,
                 const std::filesystem::path& cache_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(cache_dir / "tensors");

  json index_samples = json::array();
  for (const auto& sample : samples) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_v%02d", sample.view_k);
    const std::string stem = sample.lesion_id + suffix;
    const std::string sidecar_rel = "tensors/" + stem + ".json";
    const std::string raw_rel = stem + ".raw";

    std::vector<float> narrowed(sample.tensor.data.size());
    for (size_t i = 0; i < narrowed.size(); ++i)
      narrowed[i] = static_cast<float>(sample.tensor.data[i]);
    std::ofstream raw(cache_dir / "tensors" / raw_rel, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write tensor " + raw_rel);
    raw.write(reinterpret_cast<const char*>(narrowed.data()),
              static_cast<std::streamsize>(narrowed.size() * sizeof(float)));
    if (!raw) throw std::runtime_error("cannot write tensor " + raw_rel);

    json sidecar{{"shape", sample.tensor.shape}, {"raw", raw_rel}};
    std::ofstream side(cache_dir / sidecar_rel);
    if (!side) throw std::runtime_error("cannot write tensor sidecar " + sidecar_rel);
    side << sidecar.dump(2) << "\n";

    index_samples.push_back({{"lesion_id", sample.lesion_id},
                             {"view_k", sample.view_k},
                             {"significant", sample.significant},
                             {"revascularised", sample.revascularised},
                             {"patient_id", sample.patient_id},
                             {"branch_id", sample.branch_id},
                             {"tensor", sidecar_rel}});
  }

  json index{{"samples", std::move(index_samples)}};
  std::ofstream out(cache_dir / "index.json");
  if (!out) throw std::runtime_error("cannot write cache index");
  out << index.dump(2) << "\n";
}

std::vector<LabeledSample> load_cache(const std::filesystem::path& cache_dir) {
  std::ifstream in(cache_dir / "index.json");
  if (!in) throw std::runtime_error("cannot open cache index in " + cache_dir.string());
  json index;
  try {
    in >> index;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed cache index: " + std::string(e.what()));
  }

  std::vector<LabeledSample> samples;
  try {
    for (const auto& entry : index.at("samples")) {
      LabeledSample sample;
      sample.lesion_id = entry.at("lesion_id").get<std::string>();
      sample.view_k = entry.at("view_k").get<int>();
      sample.significant = entry.at("significant").get<bool>();
      sample.revascularised = entry.at("revascularised").get<bool>();
      sample.patient_id = entry.at("patient_id").get<std::string>();
      sample.branch_id = entry.at("branch_id").get<std::string>();

      const std::filesystem::path sidecar_path =
          cache_dir / entry.at("tensor").get<std::string>();
      std::ifstream side(sidecar_path);
      if (!side) throw std::runtime_error("broken cache reference: " + sidecar_path.string());
      json sidecar;
      side >> sidecar;
      sample.tensor.shape = sidecar.at("shape").get<std::vector<int>>();
      size_t count = 1;
      for (int d : sample.tensor.shape) {
        if (d < 1) throw std::runtime_error("corrupt tensor shape in " + sidecar_path.string());
        count *= static_cast<size_t>(d);
      }

      const std::filesystem::path raw_path =
          sidecar_path.parent_path() / sidecar.at("raw").get<std::string>();
      std::ifstream raw(raw_path, std::ios::binary);
      if (!raw) throw std::runtime_error("broken cache reference: " + raw_path.string());
      std::vector<float> narrowed(count);
      raw.read(reinterpret_cast<char*>(narrowed.data()),
               static_cast<std::streamsize>(count * sizeof(float)));
      if (raw.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw std::runtime_error("corrupt tensor " + raw_path.string());
      sample.tensor.data.assign(narrowed.begin(), narrowed.end());
      samples.push_back(std::move(sample));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed cache index: " + std::string(e.what()));
  }
  return samples;
}

}  // namespace mprkit
