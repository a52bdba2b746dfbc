#include <benchmark/benchmark.h>

#include "innoprod/capital.hpp"
#include "innoprod/mcsim.hpp"

namespace {

void BM_BuildCapital(benchmark::State& state) {
  innoprod::DgpConfig cfg;
  cfg.n_firms = static_cast<int>(state.range(0));
  const auto sim = innoprod::generate_panel(cfg);
  for (auto _ : state) {
    auto res = innoprod::build_capital(sim.panel);
    benchmark::DoNotOptimize(res.panel.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(sim.panel.size()));
}
BENCHMARK(BM_BuildCapital)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
