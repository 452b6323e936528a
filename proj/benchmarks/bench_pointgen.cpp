#include <benchmark/benchmark.h>

#include "qmamis/pointgen.hpp"

using namespace qmamis;

static void BM_ScrambledSobol(benchmark::State& state)
{
    const int m = static_cast<int>(state.range(0));
    const auto d = static_cast<std::size_t>(state.range(1));
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_sobol(m, d, seed++));
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << m) * state.range(1));
}
BENCHMARK(BM_ScrambledSobol)->Args({10, 2})->Args({12, 20})->Args({14, 21});

static void BM_Iid(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_iid(n, 20, seed++));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 20);
}
BENCHMARK(BM_Iid)->Arg(4096);

BENCHMARK_MAIN();
