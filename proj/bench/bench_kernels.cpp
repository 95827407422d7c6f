// Parallel (chunked OpenMP) vs serial reference kernels.
// Arg 0: 1 = parallel, 0 = serial.

#include <benchmark/benchmark.h>

#include <cmath>

#include "rscdma/kernels.hpp"
#include "rscdma/mc_sim.hpp"
#include "rscdma/state_evolution.hpp"

using namespace rscdma;

namespace
{

Scenario bench_scenario(Scheme scheme, const Prior &prior, std::size_t draws)
{
    Scenario s = Scenario::single_group(scheme, 1.5, 2, 2, prior, prior, 0.1, 0.1);
    s.channel_samples = draws;
    s.channel_law.sampler = ChannelLaw::Sampler::QuasiMonteCarlo;
    return s;
}

void run_rhs(benchmark::State &state, const Scenario &s, const Integrator &integ)
{
    const bool parallel = state.range(0) != 0;
    const ChannelPool pool = ChannelPool::draw(s);
    const HermMat a = HermMat::identity(2, 0.4), at = HermMat::identity(2, 0.4);
    for (auto _ : state)
        benchmark::DoNotOptimize(rhs(s, a, at, integ, pool, parallel));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * s.channel_samples));
}

void BM_RhsStsQpsk(benchmark::State &state)
{
    run_rhs(state, bench_scenario(Scheme::STS, qpsk(1.0), 2000), Integrator::gauss_hermite(40));
}

void BM_RhsTsGaussian(benchmark::State &state)
{
    run_rhs(state, bench_scenario(Scheme::TS, Prior::gaussian(1.0), 20000), Integrator::gauss_hermite(40));
}

void BM_RhsTsQpsk(benchmark::State &state)
{
    run_rhs(state, bench_scenario(Scheme::TS, qpsk(1.0), 16), Integrator::quasi_monte_carlo(1024, 1));
}

void BM_Reduce(benchmark::State &state)
{
    const bool parallel = state.range(0) != 0;
    const auto term = [](std::size_t i, double &acc) { acc += std::sin(1e-3 * static_cast<double>(i)); };
    for (auto _ : state)
        benchmark::DoNotOptimize(parallel ? kernels::parallel_reduce(std::size_t{1} << 20, 0.0, term)
                                          : kernels::serial_reduce(std::size_t{1} << 20, 0.0, term));
}

void BM_Trials(benchmark::State &state)
{
    SimParams p;
    p.K = 48;
    p.L = 32;
    p.true_prior = p.post_prior = VectorPrior::replicate(Prior::gaussian(1.0), 1);
    p.n0 = p.nt0 = 0.5;
    kernels::set_threads(state.range(0) != 0 ? 0 : 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(run_trials(p, Detector::LMMSE, 500));
    kernels::set_threads(0);
}

} // namespace

BENCHMARK(BM_RhsStsQpsk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RhsTsGaussian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RhsTsQpsk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reduce)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trials)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
