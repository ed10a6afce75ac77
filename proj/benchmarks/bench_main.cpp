#include <benchmark/benchmark.h>

#include <vector>

#include "genspring/designgen/printability.hpp"
#include "genspring/ego/acquisition.hpp"
#include "genspring/kriging/kriging.hpp"
#include "genspring/latent/vae.hpp"
#include "genspring/random.hpp"

using namespace genspring;

namespace {

kriging::SampleSet random_samples(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, 0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = x.row(i).squaredNorm() + 0.1 * standard_normal(rng);
  return kriging::SampleSet(x, y);
}

kriging::Hyperparameters hyper(std::size_t d) { return {std::vector<double>(d, 2.0), 1e-3}; }

void BM_NegLogLikelihood(benchmark::State& state) {
  const auto samples = random_samples(static_cast<std::size_t>(state.range(0)), 12, 1);
  const auto hp = hyper(12);
  for (auto _ : state) benchmark::DoNotOptimize(kriging::neg_log_likelihood(samples, hp));
}
BENCHMARK(BM_NegLogLikelihood)->Arg(36)->Arg(72);

void BM_ExpectedImprovement(benchmark::State& state) {
  const auto samples = random_samples(static_cast<std::size_t>(state.range(0)), 12, 2);
  const kriging::KrigingModel model(samples, hyper(12));
  const std::vector<double> x(12, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(ego::expected_improvement(model, x, 0.0));
}
BENCHMARK(BM_ExpectedImprovement)->Arg(36)->Arg(72);

void BM_FilterConnected(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> v(n * n);
  for (double& p : v) p = uniform(rng, 0.0, 1.0);
  const designgen::DesignBitmap bitmap(n, v);
  for (auto _ : state) benchmark::DoNotOptimize(designgen::filter_connected(bitmap));
}
BENCHMARK(BM_FilterConnected)->Arg(32)->Arg(150);

void BM_VaeDecode(benchmark::State& state) {
  const auto model = latent::VaeModel::create(32 * 32, 256, 12, 4);
  const latent::LatentVector z(std::vector<double>(12, 0.1));
  for (auto _ : state) benchmark::DoNotOptimize(model.decode(z));
}
BENCHMARK(BM_VaeDecode);

}  // namespace

BENCHMARK_MAIN();
