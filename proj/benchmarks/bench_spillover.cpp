#include <benchmark/benchmark.h>

#include "innoprod/capital.hpp"
#include "innoprod/mcsim.hpp"
#include "innoprod/spillover.hpp"

namespace {

void BM_ComputeSpillovers(benchmark::State& state) {
  innoprod::DgpConfig cfg;
  cfg.n_firms = static_cast<int>(state.range(0));
  const auto sim = innoprod::generate_panel(cfg);
  const auto panel = innoprod::build_capital(sim.panel).panel;
  for (auto _ : state) {
    auto m = innoprod::compute_spillovers(panel, *sim.distances);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_ComputeSpillovers)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
