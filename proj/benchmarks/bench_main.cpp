#include <benchmark/benchmark.h>

#include <vector>

#include "rvae/biomarkers.hpp"
#include "rvae/cohort.hpp"
#include "rvae/forest.hpp"
#include "rvae/lasso.hpp"
#include "rvae/matrix.hpp"
#include "rvae/model.hpp"
#include "rvae/training.hpp"

using namespace rvae;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

struct Regression {
  Matrix x;
  std::vector<double> y;
};

Regression planted(std::size_t n) {
  Rng rng(7);
  Regression r{random_matrix(rng, n, kBiomarkerCount), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    r.y[i] = 130.0 + rng.normal(0.0, 5.0);
    for (std::size_t j = 0; j < kBiomarkerCount; j += 3) r.y[i] += 4.0 * r.x(i, j);
  }
  return r;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(rng, n, kBiomarkerCount), b = random_matrix(rng, kBiomarkerCount, 8);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(2160);

static void BM_LossAndGradient(benchmark::State& state) {
  Rng rng(2);
  RVaeModel m;
  m.initialize(rng);
  const auto n = static_cast<std::size_t>(state.range(0));
  Batch b;
  b.x = random_matrix(rng, n, kBiomarkerCount);
  b.y.assign(n, 130.0);
  b.dummy.assign(n, 0.0);
  std::vector<double> grad;
  for (auto _ : state) {
    const NoiseFrame noise = m.sample_noise(n, Mode::Train, rng);
    benchmark::DoNotOptimize(m.loss(b, noise, 0.3, 2.0, &grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_LossAndGradient)->Arg(32)->Arg(64);

static void BM_LassoFit(benchmark::State& state) {
  const Regression r = planted(2160);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_fit(r.x, r.y, 0.1));
}
BENCHMARK(BM_LassoFit)->Unit(benchmark::kMillisecond);

static void BM_ForestFit(benchmark::State& state) {
  const Regression r = planted(2160);
  ForestParams p;
  p.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forest_fit(r.x, r.y, p));
}
BENCHMARK(BM_ForestFit)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_ExtractBiomarkers(benchmark::State& state) {
  CurveShape shape;
  shape.frames = static_cast<std::size_t>(state.range(0));
  VolumeCurve lv = synthesize_curve(shape, Chamber::LV);
  lv.lv_mass_g = 120.0;
  const VolumeCurve rv = synthesize_curve(shape, Chamber::RV);
  const Anthropometrics a{70.0, 170.0, Gender::Female};
  for (auto _ : state) benchmark::DoNotOptimize(extract_biomarkers(lv, rv, a));
}
BENCHMARK(BM_ExtractBiomarkers)->Arg(50)->Arg(100);

static void BM_GenerateCohort(benchmark::State& state) {
  CohortSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(generate_synthetic(spec));
}
BENCHMARK(BM_GenerateCohort)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
