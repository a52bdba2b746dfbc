#include <benchmark/benchmark.h>

#include "innoprod/oracle.hpp"
#include "innoprod/prodfn.hpp"

namespace {

innoprod::Panel panel_of(int firms) {
  innoprod::DgpConfig cfg;
  cfg.n_firms = firms;
  return innoprod::prepare_panel(innoprod::generate_panel(cfg));
}

void BM_EstimateAcf(benchmark::State& state) {
  const auto panel = panel_of(static_cast<int>(state.range(0)));
  innoprod::EstimationSpec spec;
  spec.variance = innoprod::VarianceMethod::kNone;
  spec.starts = 1;
  for (auto _ : state) {
    auto r = innoprod::estimate(panel, spec);
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK(BM_EstimateAcf)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AnalyticVariance(benchmark::State& state) {
  const auto panel = panel_of(1000);
  innoprod::EstimationSpec spec;
  spec.variance = innoprod::VarianceMethod::kNone;
  spec.starts = 1;
  const auto r = innoprod::estimate(panel, spec);
  for (auto _ : state) {
    auto v = innoprod::analytic_variance(panel, spec, r);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_AnalyticVariance)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  const auto panel = panel_of(500);
  innoprod::EstimationSpec spec;
  spec.variance = innoprod::VarianceMethod::kNone;
  spec.starts = 1;
  const auto r = innoprod::estimate(panel, spec);
  spec.bootstrap = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto b = innoprod::bootstrap(panel, spec, r);
    benchmark::DoNotOptimize(b.se.data());
  }
}
BENCHMARK(BM_Bootstrap)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
