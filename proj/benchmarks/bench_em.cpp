#include <gpcca/em.hpp>
#include <gpcca/simgen.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace gpcca;

const SimOutput& sim(double missing) {
  static const SimOutput complete = [] {
    SimSpec s;
    s.seed = 11;
    return generate(s);
  }();
  static const SimOutput partial = [] {
    SimSpec s;
    s.seed = 11;
    s.missing_rate = 0.2;
    return generate(s);
  }();
  return missing > 0.0 ? partial : complete;
}

ModelParams warm_params(const ObservedDataset& data, Index d) {
  EmConfig cfg;
  cfg.max_iterations = 5;
  cfg.ridge_lambda = 2.0 / 3.0;
  return fit_auto(data, d, cfg).final_params;
}

void BM_EStep(benchmark::State& state) {
  const auto& data = sim(0.2).dataset;
  const ModelParams params = warm_params(data, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(e_step(data, params));
}
BENCHMARK(BM_EStep)->Arg(2)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EStepComplete(benchmark::State& state) {
  const auto& data = sim(0.0).dataset;
  const ModelParams params = warm_params(data, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(e_step_complete(data, params));
}
BENCHMARK(BM_EStepComplete)->Arg(2)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EStepGeneralOnComplete(benchmark::State& state) {
  const auto& data = sim(0.0).dataset;
  const ModelParams params = warm_params(data, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(e_step(data, params));
}
BENCHMARK(BM_EStepGeneralOnComplete)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_MStep(benchmark::State& state) {
  const auto& data = sim(0.2).dataset;
  const ModelParams params = warm_params(data, state.range(0));
  const EStepResult e = e_step(data, params);
  for (auto _ : state) benchmark::DoNotOptimize(m_step(data, e.buffers, params, 2.0 / 3.0));
}
BENCHMARK(BM_MStep)->Arg(2)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FitComplete(benchmark::State& state) {
  const auto& data = sim(0.0).dataset;
  EmConfig cfg;
  cfg.max_iterations = 20;
  cfg.rel_tolerance = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(fit_complete(data, 6, cfg));
}
BENCHMARK(BM_FitComplete)->Unit(benchmark::kMillisecond);

void BM_FitGeneralOnComplete(benchmark::State& state) {
  const auto& data = sim(0.0).dataset;
  EmConfig cfg;
  cfg.max_iterations = 20;
  cfg.rel_tolerance = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(fit(data, 6, cfg));
}
BENCHMARK(BM_FitGeneralOnComplete)->Unit(benchmark::kMillisecond);

}  // namespace
