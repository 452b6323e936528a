#include <benchmark/benchmark.h>

#include <vector>

#include "qmamis/mamis.hpp"

using namespace qmamis;

namespace {

Trace toy_trace(std::size_t stages, std::size_t n)
{
    const Target t = make_shared_cov_gmm(20);
    const auto spec = FamilySpec::gaussian_fixed_cov(shared_cov_gmm_covariance(20));
    return run_mamis(t, spec, ProposalParam::from_theta(spec, Eigen::VectorXd::Constant(20, 0.1)),
                     std::vector<std::size_t>(stages, n), SamplerKind::ScrambledSobol, HStatistic::identity(20), 1);
}

} // namespace

static void BM_RecycleWeights(benchmark::State& state)
{
    const Trace base = toy_trace(static_cast<std::size_t>(state.range(0)), 1024);
    for (auto _ : state) benchmark::DoNotOptimize(recycle_weights(base));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0) * 1024);
}
BENCHMARK(BM_RecycleWeights)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_ToyMamisRun(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(toy_trace(16, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_ToyMamisRun)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
