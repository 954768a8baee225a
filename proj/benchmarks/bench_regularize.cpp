#include <benchmark/benchmark.h>

#include <cmath>

#include "dtscr/regularize.hpp"
#include "dtscr/screening.hpp"
#include "dtscr/simulate.hpp"

namespace {

using namespace dtscr;

void BM_LassoPath(benchmark::State& state) {
  const Dataset data = sample_dataset(preset(14), 3, 1);
  const PenalizedProblem problem(data, 1);
  const auto grid = parse_grid("-8:-2.5:0.25");
  for (auto _ : state) {
    benchmark::DoNotOptimize(regularization_path(problem, grid, PenaltyKind::kLasso).size());
  }
}
BENCHMARK(BM_LassoPath)->Unit(benchmark::kMillisecond);

void BM_CrossValidation(benchmark::State& state) {
  const Dataset data = sample_dataset(preset(14), 3, 1);
  TuningGrid grid;
  grid.log_eta = parse_grid("-8:-2.5:0.5");
  grid.folds = 5;
  grid.seed = 3;
  CvConfig config;
  config.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(cv_select_eta(data, grid, config).rows.size());
}
BENCHMARK(BM_CrossValidation)->Unit(benchmark::kMillisecond);

void BM_Screening(benchmark::State& state) {
  SimulationConfig config = resize_covariates(preset(17), static_cast<int>(state.range(0)));
  const Dataset data = sample_dataset(config, 3, 1);
  SolverConfig solver;
  solver.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sis(data, 3, TieMethod::kBreslow, solver).threshold);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Screening)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
