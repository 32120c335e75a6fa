// Microbenchmarks for the hot paths: volume sampling, stack extraction,
// view rotation, metric computation, and one network training step.
//
// Build with optimizations and run the binary directly; pass
// --benchmark_min_time=2.0 for steadier numbers.

#include <random>
#include <vector>

#include "benchmark/benchmark.h"

#include "mprkit/eval/metrics.hpp"
#include "mprkit/nn/model.hpp"
#include "mprkit/phantom.hpp"
#include "mprkit/reformat.hpp"
#include "mprkit/volume.hpp"

namespace {

const mprkit::PhantomResult& phantom_fixture() {
  static const mprkit::PhantomResult result = [] {
    mprkit::PhantomSpec spec;
    spec.diameter_reduction = 0.4;
    return mprkit::generate_phantom(spec, /*seed=*/7);
  }();
  return result;
}

mprkit::MprStack stack_fixture() {
  const mprkit::PhantomResult& phantom = phantom_fixture();
  const mprkit::FrameSequence frames = mprkit::build_frames(phantom.centerline);
  mprkit::LesionRecord lesion = phantom.lesion;
  return mprkit::extract_mpr(phantom.volume, phantom.centerline, frames, lesion);
}

}  // namespace

static void BM_TrilinearSample(benchmark::State& state) {
  const mprkit::Volume3D& volume = phantom_fixture().volume;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> coord(8.0, 56.0);
  std::vector<mprkit::PointMm> points(1024);
  for (auto& p : points) p = {coord(gen), coord(gen), coord(gen)};

  for (auto _ : state) {
    double sum = 0.0;
    for (const auto& p : points) sum += mprkit::sample_trilinear(volume, p);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(points.size()));
}
BENCHMARK(BM_TrilinearSample);

static void BM_ExtractMpr(benchmark::State& state) {
  const mprkit::PhantomResult& phantom = phantom_fixture();
  const mprkit::FrameSequence frames = mprkit::build_frames(phantom.centerline);

  for (auto _ : state) {
    mprkit::MprStack stack =
        mprkit::extract_mpr(phantom.volume, phantom.centerline, frames, phantom.lesion);
    benchmark::DoNotOptimize(stack.pixels.data());
  }
}
BENCHMARK(BM_ExtractMpr);

static void BM_RotateView(benchmark::State& state) {
  const mprkit::MprStack stack = stack_fixture();
  for (auto _ : state) {
    mprkit::MprStack rotated = mprkit::rotate_view(stack, 3, 18);
    benchmark::DoNotOptimize(rotated.pixels.data());
  }
}
BENCHMARK(BM_RotateView);

static void BM_RocAuc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::vector<int> labels(n);
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    scores[i] = score(gen);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(mprkit::eval::roc_auc(labels, scores));
  }
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(10000);

static void BM_TrainStep25D(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  mprkit::nn::Model model = mprkit::nn::build_25d_model(5);
  std::mt19937_64 gen(13);
  std::normal_distribution<double> pixel(0.0, 1.0);
  mprkit::nn::Tensor batch_tensor({batch, 2, 64, 32});
  for (double& v : batch_tensor.data) v = pixel(gen);
  std::vector<double> labels(batch);
  for (int i = 0; i < batch; ++i) labels[i] = i % 2 ? 1.0 : 0.0;

  mprkit::nn::Gradients grads;
  for (auto _ : state) {
    const double loss = mprkit::nn::loss_and_grads(model, batch_tensor, labels, grads);
    mprkit::nn::optimizer_step(model, grads, 1e-3);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep25D)->Arg(8)->Arg(32);

BENCHMARK_MAIN();
