#include <benchmark/benchmark.h>

#include <random>

#include "assoc/episodes.hpp"
#include "assoc/gradcheck_suite.hpp"
#include "assoc/losses.hpp"
#include "assoc/preset.hpp"
#include "assoc/related_base.hpp"
#include "assoc/training.hpp"

namespace {

using namespace assoc;

Tensor2 gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor2 t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

void BM_EncoderForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const std::size_t widths[] = {16, 32, 16};
  const MlpParams p = init_mlp(widths, Activation::kTanh, rng);
  const Tensor2 x = gaussian(batch, 16, rng);
  const Tensor2 up = gaussian(batch, 16, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder_forward(x, p));
    benchmark::DoNotOptimize(encoder_backward(x, p, up));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(batch));
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(64)->Arg(512);

void BM_ArcmaxLoss(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor2 z = gaussian(n, 16, rng);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 20);
  const ClassifierWeights w = normalize_columns({gaussian(16, 20, rng)});
  for (auto _ : state) benchmark::DoNotOptimize(arcmax_loss(z, y, w, {20.0, 0.1}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_ArcmaxLoss)->Arg(64)->Arg(512);

void BM_CriticLoss(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const MlpParams critic = init_critic(16, 5, hidden, Activation::kTanh, rng);
  const Tensor2 zn = gaussian(64, 16, rng), zr = gaussian(64, 16, rng);
  std::vector<int> y(64);
  for (std::size_t i = 0; i < 64; ++i) y[i] = static_cast<int>(i % 5);
  for (auto _ : state) benchmark::DoNotOptimize(critic_loss(zn, y, zr, y, 5, critic));
}
BENCHMARK(BM_CriticLoss)->Arg(64)->Arg(1024);

void BM_GradcheckSuite(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_gradcheck_suite({}));
}
BENCHMARK(BM_GradcheckSuite)->Unit(benchmark::kMillisecond);

// Pipeline stages on the synthetic preset, sharing one pre-trained model.
struct PresetFixture {
  Preset preset = synthetic_preset();
  SyntheticData data = generate_synthetic(preset.data);
  PretrainResult pre =
      pretrain(data.splits.base, data.splits.validation, preset.model, preset.train, preset.eval);
};

const PresetFixture& fixture() {
  static const PresetFixture f;
  return f;
}

void BM_ComputeSimilarity(benchmark::State& state) {
  const auto& f = fixture();
  std::mt19937_64 rng(4);
  const ClassifierWeights w = init_classifier(f.preset.model.embedding_dim, 5, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(compute_similarity(f.data.splits.base, f.pre.model.encoder, w));
}
BENCHMARK(BM_ComputeSimilarity)->Unit(benchmark::kMicrosecond);

void BM_Episode(benchmark::State& state) {
  const auto& f = fixture();
  const auto variant = static_cast<Variant>(state.range(0));
  auto rng = stream_rng(0, 0, 0);
  const Episode ep = sample_episode(f.data.splits.novel, f.preset.eval, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(f.pre.model, f.data.splits.base, ep, 0, variant,
                                         f.preset.model, f.preset.train));
  }
  state.SetLabel(std::string(to_string(variant)));
}
BENCHMARK(BM_Episode)
    ->Arg(static_cast<int>(Variant::kBaseline))
    ->Arg(static_cast<int>(Variant::kNoAlignment))
    ->Arg(static_cast<int>(Variant::kCentroid))
    ->Arg(static_cast<int>(Variant::kAdversarial))
    ->Unit(benchmark::kMillisecond);

void BM_Pretrain(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pretrain(f.data.splits.base, f.data.splits.validation,
                                      f.preset.model, f.preset.train, f.preset.eval));
  }
}
BENCHMARK(BM_Pretrain)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
