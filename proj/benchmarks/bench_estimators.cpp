#include <benchmark/benchmark.h>

#include "dtscr/conditional_likelihood.hpp"
#include "dtscr/estimators.hpp"
#include "dtscr/simulate.hpp"

namespace {

using namespace dtscr;

Dataset timing_data(int d, int n) { return sample_dataset(timing_config(d, n), 17, 1); }

void BM_ConditionalLoglik(benchmark::State& state) {
  const auto ties = static_cast<TieMethod>(state.range(1));
  const Dataset data = timing_data(static_cast<int>(state.range(0)), 5000);
  const ExpandedData expanded(data);
  const ConditionalLikelihood likelihood(expanded, data.covariates(), 1, ties, 100000);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(data.p(), 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(likelihood.evaluate(beta, Derivatives::kHessian).value);
  }
  state.SetItemsProcessed(state.iterations() * expanded.record_count());
}
BENCHMARK(BM_ConditionalLoglik)
    ->ArgsProduct({{5, 20, 50}, {static_cast<int>(TieMethod::kBreslow), static_cast<int>(TieMethod::kExact)}})
    ->Unit(benchmark::kMillisecond);

void BM_TwoStep(benchmark::State& state) {
  const Dataset data = timing_data(static_cast<int>(state.range(0)), 20000);
  TwoStepConfig config;
  config.solver.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_two_step(data, config).beta_matrix());
}
BENCHMARK(BM_TwoStep)->Arg(5)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Collapsed(benchmark::State& state) {
  const Dataset data = timing_data(static_cast<int>(state.range(0)), 20000);
  SolverConfig solver;
  solver.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_collapsed_model(data, solver).beta_matrix());
}
BENCHMARK(BM_Collapsed)->Arg(5)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_Sample(benchmark::State& state) {
  SimulationConfig config = preset(3);
  for (auto _ : state) benchmark::DoNotOptimize(sample_dataset(config, 5, 1).n());
  state.SetItemsProcessed(state.iterations() * config.n);
}
BENCHMARK(BM_Sample)->Unit(benchmark::kMillisecond);

}  // namespace
