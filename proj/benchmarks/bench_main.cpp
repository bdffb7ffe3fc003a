#include <benchmark/benchmark.h>

#include <random>

#include "slowtrack/pfilter.hpp"
#include "slowtrack/pipeline.hpp"
#include "slowtrack/slowae.hpp"
#include "slowtrack/stack.hpp"

namespace st = slowtrack;

namespace {

Eigen::MatrixXd random_weights(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.1);
  Eigen::MatrixXd W(rows, cols);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = n(rng);
  return W;
}

st::stack::StackedModel random_model() {
  st::stack::StackedModel m;
  m.layer1.W = random_weights(64, 64, 1);
  m.layer1.edge = 8;
  m.layer2.W = random_weights(128, 128, 2);
  m.layer2.edge = 14;
  return m;
}

st::Image noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  st::Image img(w, h);
  for (double& v : img.data()) v = u(rng);
  return img;
}

void BM_SlowCostAndGradient(benchmark::State& state) {
  const int sessions = static_cast<int>(state.range(0));
  const auto data = st::pipeline::synthetic_sessions(8, sessions, 5, 1.5, 8.0, 3);
  st::slowae::SlowObjective objective(data, {});
  const Eigen::MatrixXd W = random_weights(64, 64, 4);
  Eigen::MatrixXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(W, &grad));
  state.SetItemsProcessed(state.iterations() * sessions * 5);
}
BENCHMARK(BM_SlowCostAndGradient)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrackingRepresentation(benchmark::State& state) {
  const auto model = random_model();
  const auto obs = noise_image(32, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(st::stack::tracking_representation(obs, model));
}
BENCHMARK(BM_TrackingRepresentation)->Unit(benchmark::kMicrosecond);

void BM_ScoreParticles(benchmark::State& state) {
  const auto model = random_model();
  const auto frame = noise_image(320, 240, 6);
  st::obsmodel::Classifier c;
  c.w = Eigen::VectorXd::Constant(model.representation_size(), 1e-3);
  c.mean = Eigen::VectorXd::Zero(c.w.size());
  c.invScale = Eigen::VectorXd::Ones(c.w.size());
  const st::obsmodel::Featurizer featurize = [&](const st::Image& f, const st::AffineState& s) {
    return st::stack::tracking_representation(st::crop_and_warp(f, s), model);
  };
  st::Rng rng(7);
  auto particles = st::pfilter::propagate(
      st::pfilter::ParticleSet::uniform({160, 120, 1.0, 1.0}, static_cast<int>(state.range(0))), {}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(st::pfilter::score(particles, frame, featurize, c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreParticles)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
