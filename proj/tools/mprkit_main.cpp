// Command-line driver: synthetic cohorts, reformatted sample caches, single
// training runs, repeated cross-validation, and report rendering.
//
// Exit codes: 0 success, 1 usage error, 2 data/runtime error.

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mprkit/dataset.hpp"
#include "mprkit/eval/cross_validate.hpp"
#include "mprkit/eval/report.hpp"
#include "mprkit/eval/splits.hpp"
#include "mprkit/nn/checkpoint.hpp"
#include "mprkit/parallel.hpp"
#include "mprkit/phantom.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::uint64_t env_seed_or_zero() {
  const char* env = std::getenv("MPRKIT_SEED");
  if (env == nullptr || *env == '\0') return 0;
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0') {
    throw CLI::ValidationError("MPRKIT_SEED", "must be a decimal unsigned integer");
  }
  return value;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
  return seed_opt->count() > 0 ? flag_value : env_seed_or_zero();
}

void write_run_json(const fs::path& out_dir, const std::string& subcommand,
                    const nlohmann::json& config) {
  fs::create_directories(out_dir);
  nlohmann::json doc{
      {"tool", "mprkit"}, {"version", "0.1.0"}, {"subcommand", subcommand}, {"config", config}};
  std::ofstream out(out_dir / "run.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run.json under " + out_dir.string());
  out << doc.dump(2) << '\n';
}

mprkit::PaddingStrategy padding_from_name(const std::string& name) {
  if (name == "zero") return mprkit::PaddingStrategy::zero_pad();
  if (name == "stretch") return mprkit::PaddingStrategy::stretch_to_longest();
  return mprkit::PaddingStrategy::intermediate_resize();
}

std::vector<std::string> patient_ids_of(const std::vector<mprkit::LabeledSample>& samples) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const mprkit::LabeledSample& sample : samples) ids.push_back(sample.patient_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& warning : warnings) std::cerr << "warning: " << warning << '\n';
}

struct PhantomArgs {
  int patients = 0;
  int lesions = 0;
  double grade_min = 0.0;
  double grade_max = 0.9;
  std::uint64_t seed = 0;
  unsigned jobs = mprkit::default_jobs();
  std::string out;
};

struct ReformatArgs {
  std::string manifest;
  int views = 18;
  std::string padding = "intermediate";
  std::string pathway = "2.5d";
  int height = 32;
  double spacing = 0.5;
  unsigned jobs = mprkit::default_jobs();
  std::string out;
};

struct TrainArgs {
  std::string cache;
  std::string target = "significant";
  int epochs = 3;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int k = 5;
  int rep = 0;
  int fold = 0;
  double threshold = 0.5;
  std::string out = ".";
};

struct CvArgs {
  std::string cache;
  int k = 5;
  int reps = 5;
  bool tta = false;
  bool single = false;
  int epochs = 3;
  int batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  unsigned jobs = mprkit::default_jobs();
  std::string out = ".";
};

struct ReportArgs {
  std::string in = ".";
  std::string out;
};

void run_phantom(const PhantomArgs& args) {
  const mprkit::DatasetManifest manifest = mprkit::generate_cohort(
      args.patients, args.lesions, args.grade_min, args.grade_max, args.seed, args.out, args.jobs);
  write_run_json(args.out, "phantom",
                 {{"patients", args.patients},
                  {"lesions", args.lesions},
                  {"grade_min", args.grade_min},
                  {"grade_max", args.grade_max},
                  {"seed", args.seed},
                  {"jobs", args.jobs},
                  {"out", args.out}});
  std::cout << "phantom cohort: " << manifest.patients.size() << " patients, "
            << manifest.lesion_count() << " lesions -> " << args.out << '\n';
}

void run_reformat(const ReformatArgs& args) {
  mprkit::AssembleOptions options;
  options.n_views = args.views;
  options.padding = padding_from_name(args.padding);
  options.pathway = args.pathway == "cubes" ? mprkit::Pathway::kCubes : mprkit::Pathway::k25D;
  options.slice_height = args.height;
  options.in_plane_spacing_mm = args.spacing;
  options.jobs = args.jobs;

  mprkit::CohortSummary summary;
  const std::vector<mprkit::LabeledSample> samples =
      mprkit::assemble_dataset(args.manifest, options, &summary);
  mprkit::write_cache(samples, args.out);
  write_run_json(args.out, "reformat",
                 {{"manifest", args.manifest},
                  {"views", args.views},
                  {"padding", args.padding},
                  {"pathway", args.pathway},
                  {"height", args.height},
                  {"spacing", args.spacing},
                  {"jobs", args.jobs},
                  {"out", args.out}});
  std::cout << "reformatted cache: " << summary.n_lesions << " lesions, " << summary.n_samples
            << " samples (significant=" << summary.n_significant
            << ", revascularised=" << summary.n_revascularised << ") -> " << args.out << '\n';
}

void run_train(const TrainArgs& args) {
  if (args.fold >= args.k) throw CLI::ValidationError("--fold", "must be smaller than --k");
  const std::vector<mprkit::LabeledSample> samples = mprkit::load_cache(args.cache);
  const mprkit::eval::SplitPlan plan =
      mprkit::eval::make_splits(patient_ids_of(samples), args.k, args.rep + 1, args.seed);
  const mprkit::eval::Split& split = plan.splits[static_cast<size_t>(args.rep) * args.k + args.fold];

  mprkit::nn::TrainConfig cfg;
  cfg.learning_rate = args.lr;
  cfg.batch_size = args.batch;
  cfg.epochs = args.epochs;
  mprkit::eval::SingleSplitOutput output = mprkit::eval::train_single_split(
      samples, split, mprkit::nn::target_from_name(args.target), cfg, args.threshold);

  fs::create_directories(args.out);
  mprkit::nn::save_checkpoint(output.model, fs::path(args.out) / "model.ckpt");
  write_run_json(args.out, "train",
                 {{"cache", args.cache},
                  {"target", args.target},
                  {"epochs", args.epochs},
                  {"batch", args.batch},
                  {"lr", args.lr},
                  {"seed", args.seed},
                  {"k", args.k},
                  {"rep", args.rep},
                  {"fold", args.fold},
                  {"threshold", args.threshold},
                  {"out", args.out}});

  print_warnings(output.warnings);
  for (const mprkit::eval::SplitRow& row : output.rows) {
    std::cout << "target=" << row.target << " mode=" << (row.tta ? "tta" : "single") << " auc="
              << (row.metrics.auc_defined ? fmt6(row.metrics.auc) : std::string("undefined"))
              << " accuracy=" << fmt6(row.metrics.accuracy) << " f1=" << fmt6(row.metrics.f1)
              << " sensitivity=" << fmt6(row.metrics.sensitivity)
              << " specificity=" << fmt6(row.metrics.specificity)
              << " mcc=" << fmt6(row.metrics.mcc) << '\n';
  }
  std::cout << "checkpoint -> " << (fs::path(args.out) / "model.ckpt").string() << '\n';
}

void run_cv(const CvArgs& args) {
  const std::vector<mprkit::LabeledSample> samples = mprkit::load_cache(args.cache);
  const mprkit::eval::SplitPlan plan =
      mprkit::eval::make_splits(patient_ids_of(samples), args.k, args.reps, args.seed);

  mprkit::eval::CrossValidateConfig config;
  config.train.learning_rate = args.lr;
  config.train.batch_size = args.batch;
  config.train.epochs = args.epochs;
  config.threshold = args.threshold;
  config.with_tta = args.tta || !args.single;
  config.with_single = args.single || !args.tta;
  config.jobs = static_cast<int>(args.jobs);

  const mprkit::eval::ReportTable table = mprkit::eval::cross_validate_full(samples, plan, config);
  const std::vector<mprkit::eval::SummaryRow> summary = mprkit::eval::summarize(table.rows);

  fs::create_directories(args.out);
  mprkit::eval::write_rows_csv(table.rows, fs::path(args.out) / "rows.csv");
  mprkit::eval::write_summary_csv(summary, fs::path(args.out) / "summary.csv");
  mprkit::eval::write_predictions_csv(table.predictions, fs::path(args.out) / "predictions.csv");
  write_run_json(args.out, "cv",
                 {{"cache", args.cache},
                  {"k", args.k},
                  {"reps", args.reps},
                  {"tta", config.with_tta},
                  {"single", config.with_single},
                  {"epochs", args.epochs},
                  {"batch", args.batch},
                  {"lr", args.lr},
                  {"seed", args.seed},
                  {"threshold", args.threshold},
                  {"jobs", args.jobs},
                  {"out", args.out}});

  print_warnings(table.warnings);
  std::cout << mprkit::eval::render_summary_table(summary);
  std::cout << "report -> " << args.out << '\n';
}

void run_report(const ReportArgs& args) {
  const fs::path in_dir = args.in;
  const fs::path out_dir = args.out.empty() ? in_dir : fs::path(args.out);
  const std::vector<mprkit::eval::SplitRow> rows =
      mprkit::eval::load_rows_csv(in_dir / "rows.csv");
  const std::vector<mprkit::eval::SummaryRow> summary = mprkit::eval::summarize(rows);

  fs::create_directories(out_dir);
  mprkit::eval::write_summary_csv(summary, out_dir / "summary.csv");
  bool wrote_roc = false;
  if (fs::exists(in_dir / "predictions.csv")) {
    const std::vector<mprkit::eval::PredictionRow> predictions =
        mprkit::eval::load_predictions_csv(in_dir / "predictions.csv");
    std::ofstream svg(out_dir / "roc.svg", std::ios::binary | std::ios::trunc);
    if (!svg) throw std::runtime_error("cannot write roc.svg under " + out_dir.string());
    svg << mprkit::eval::render_roc_svg(predictions);
    wrote_roc = true;
  }
  write_run_json(out_dir, "report", {{"in", args.in}, {"out", out_dir.string()}});

  std::cout << mprkit::eval::render_summary_table(summary);
  std::cout << "summary -> " << (out_dir / "summary.csv").string() << '\n';
  if (wrote_roc) std::cout << "roc -> " << (out_dir / "roc.svg").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  // The matrix kernels pin their own thread count, but keep any external
  // BLAS/OpenMP pools from oversubscribing the worker threads too.
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  setenv("OMP_NUM_THREADS", "1", 0);

  CLI::App app{"Synthetic coronary-lesion pipeline: phantoms, reformatted stacks, training, CV"};
  app.require_subcommand(1);

  PhantomArgs phantom;
  CLI::App* phantom_cmd = app.add_subcommand("phantom", "Generate a synthetic vessel cohort");
  phantom_cmd->add_option("--patients", phantom.patients, "Number of patients")->required();
  phantom_cmd->add_option("--lesions", phantom.lesions, "Total number of lesions")->required();
  phantom_cmd->add_option("--grade-min", phantom.grade_min, "Lower area-grade bound")
      ->capture_default_str();
  phantom_cmd->add_option("--grade-max", phantom.grade_max, "Upper area-grade bound")
      ->capture_default_str();
  CLI::Option* phantom_seed =
      phantom_cmd->add_option("--seed", phantom.seed, "Master seed (default: $MPRKIT_SEED or 0)");
  phantom_cmd->add_option("--jobs", phantom.jobs, "Worker threads")->capture_default_str();
  phantom_cmd->add_option("--out", phantom.out, "Output directory")->required();

  ReformatArgs reformat;
  CLI::App* reformat_cmd =
      app.add_subcommand("reformat", "Build the shaped sample cache from a cohort manifest");
  reformat_cmd->add_option("--manifest", reformat.manifest, "Cohort manifest JSON")->required();
  reformat_cmd->add_option("--views", reformat.views, "Rotated views per lesion")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  reformat_cmd->add_option("--padding", reformat.padding, "Length alignment strategy")
      ->check(CLI::IsMember({"zero", "stretch", "intermediate"}))
      ->capture_default_str();
  reformat_cmd->add_option("--pathway", reformat.pathway, "Sample shaping pathway")
      ->check(CLI::IsMember({"2.5d", "cubes"}))
      ->capture_default_str();
  reformat_cmd->add_option("--height", reformat.height, "Stack cross-section (pixels)")
      ->capture_default_str();
  reformat_cmd->add_option("--spacing", reformat.spacing, "In-plane spacing (mm)")
      ->capture_default_str();
  reformat_cmd->add_option("--jobs", reformat.jobs, "Worker threads")->capture_default_str();
  reformat_cmd->add_option("--out", reformat.out, "Cache directory")->required();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model on one split");
  train_cmd->add_option("--cache", train.cache, "Sample cache directory")->required();
  train_cmd->add_option("--target", train.target, "Label to train against")
      ->check(CLI::IsMember({"significant", "revascularised"}))
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch", train.batch, "Batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Learning rate")->capture_default_str();
  CLI::Option* train_seed =
      train_cmd->add_option("--seed", train.seed, "Master seed (default: $MPRKIT_SEED or 0)");
  train_cmd->add_option("--k", train.k, "Folds per repetition")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  train_cmd->add_option("--rep", train.rep, "Repetition index")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--fold", train.fold, "Fold index (test fold)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train_cmd->add_option("--threshold", train.threshold, "Decision threshold")
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "Output directory")->capture_default_str();

  CvArgs cv;
  CLI::App* cv_cmd = app.add_subcommand("cv", "Repeated patient-wise cross-validation");
  cv_cmd->add_option("--cache", cv.cache, "Sample cache directory")->required();
  cv_cmd->add_option("--k", cv.k, "Folds per repetition")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  cv_cmd->add_option("--reps", cv.reps, "Shuffled repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv_cmd->add_flag("--tta", cv.tta, "Score with the mean over rotated views only");
  cv_cmd->add_flag("--single", cv.single, "Score with the unrotated view only");
  cv_cmd->add_option("--epochs", cv.epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cv_cmd->add_option("--batch", cv.batch, "Batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv_cmd->add_option("--lr", cv.lr, "Learning rate")->capture_default_str();
  CLI::Option* cv_seed =
      cv_cmd->add_option("--seed", cv.seed, "Master seed (default: $MPRKIT_SEED or 0)");
  cv_cmd->add_option("--threshold", cv.threshold, "Decision threshold")->capture_default_str();
  cv_cmd->add_option("--jobs", cv.jobs, "Worker threads (default: available cores)");
  cv_cmd->add_option("--out", cv.out, "Output directory")->capture_default_str();

  ReportArgs report;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Summarize CV row CSVs into a table and an ROC SVG");
  report_cmd->add_option("--in", report.in, "Directory holding rows.csv (and predictions.csv)")
      ->capture_default_str();
  report_cmd->add_option("--out", report.out, "Output directory (default: --in)");

  phantom_cmd->callback([&] {
    phantom.seed = resolve_seed(phantom_seed, phantom.seed);
    run_phantom(phantom);
  });
  reformat_cmd->callback([&] { run_reformat(reformat); });
  train_cmd->callback([&] {
    train.seed = resolve_seed(train_seed, train.seed);
    run_train(train);
  });
  cv_cmd->callback([&] {
    cv.seed = resolve_seed(cv_seed, cv.seed);
    run_cv(cv);
  });
  report_cmd->callback([&] { run_report(report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
