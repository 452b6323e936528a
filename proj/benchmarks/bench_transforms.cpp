#include <benchmark/benchmark.h>

#include "qmamis/transforms.hpp"

using namespace qmamis;

static void BM_InvNormCdf(benchmark::State& state)
{
    double u = 0.0;
    for (auto _ : state) {
        u += 0.6180339887498949;
        if (u >= 1.0) u -= 1.0;
        benchmark::DoNotOptimize(inv_norm_cdf(u));
    }
}
BENCHMARK(BM_InvNormCdf);

static void BM_InvChi2Cdf(benchmark::State& state)
{
    const double nu = static_cast<double>(state.range(0));
    double u = 0.0;
    for (auto _ : state) {
        u += 0.6180339887498949;
        if (u >= 1.0) u -= 1.0;
        benchmark::DoNotOptimize(inv_chi2_cdf(u, nu));
    }
}
BENCHMARK(BM_InvChi2Cdf)->Arg(2)->Arg(5)->Arg(30);

BENCHMARK_MAIN();
