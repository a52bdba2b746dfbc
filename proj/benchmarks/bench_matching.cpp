#include <benchmark/benchmark.h>

#include "innoprod/oracle.hpp"
#include "innoprod/treatment.hpp"

namespace {

struct Fixture {
  innoprod::Panel panel;
  innoprod::MatchSample sample;
};

Fixture fixture(int firms) {
  innoprod::DgpConfig cfg;
  cfg.n_firms = firms;
  Fixture f;
  f.panel = innoprod::prepare_panel(innoprod::generate_panel(cfg));
  innoprod::EstimationSpec spec;
  spec.variance = innoprod::VarianceMethod::kNone;
  spec.starts = 1;
  const auto r = innoprod::estimate(f.panel, spec);
  f.sample = innoprod::build_match_sample(innoprod::residual_tfp(f.panel, r), f.panel);
  return f;
}

void BM_MatchDelta(benchmark::State& state) {
  const auto f = fixture(static_cast<int>(state.range(0)));
  innoprod::MatchConfig cfg;
  for (auto _ : state) {
    auto a = innoprod::match_ate(f.sample, cfg);
    benchmark::DoNotOptimize(a.estimate);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.sample.size()));
}
BENCHMARK(BM_MatchDelta)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FourEffects(benchmark::State& state) {
  const auto f = fixture(1000);
  innoprod::MatchConfig cfg;
  for (auto _ : state) {
    auto e = innoprod::four_effects(f.sample, cfg);
    benchmark::DoNotOptimize(e.delta.estimate);
  }
}
BENCHMARK(BM_FourEffects)->Unit(benchmark::kMillisecond);

}  // namespace
