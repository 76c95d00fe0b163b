#include <benchmark/benchmark.h>

#include <random>

#include "ddisac/jcde.hpp"
#include "ddisac/rpe.hpp"
#include "ddisac/waveform.hpp"

using namespace ddisac;

namespace {

WaveformSpec afdm_for(const SystemConfig& sys)
{
    const AfdmChirp c = afdm_tuning(sys.N, sys.f_max);
    return WaveformSpec::afdm(sys.N, c.c1, c.c2);
}

CVector random_qpsk(int count, std::mt19937_64& rng)
{
    std::vector<std::uint8_t> bits(2 * static_cast<std::size_t>(count));
    std::uniform_int_distribution<int> coin(0, 1);
    for (auto& b : bits) b = static_cast<std::uint8_t>(coin(rng));
    return qpsk_map(bits, Constellation{});
}

void BM_EffectiveChannel(benchmark::State& state)
{
    std::mt19937_64 rng(1);
    SystemConfig sys;
    sys.N = static_cast<int>(state.range(0));
    const WaveformSpec spec = afdm_for(sys);
    const ChannelRealization real = sample_paths(sys, 4, 1.0, rng, TapDraw::distinct);
    for (auto _ : state) benchmark::DoNotOptimize(build_effective_channel(spec, real));
}
BENCHMARK(BM_EffectiveChannel)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PbigabpStep(benchmark::State& state)
{
    std::mt19937_64 rng(2);
    SystemConfig sys;
    sys.N = static_cast<int>(state.range(0));
    const WaveformSpec spec = afdm_for(sys);
    const ChannelRealization real = sample_paths(sys, 4, 1.0, rng, TapDraw::distinct);
    std::vector<CMatrix> ops;
    for (const ChannelPath& p : real.paths) ops.push_back(build_path_operator(spec, p.delay_tap, p.doppler));
    const FrameLayout layout = FrameLayout::block_pilots(sys.N, sys.N / 4);
    const CVector x = build_frame(layout, random_qpsk(layout.payload_count(), rng));
    const CVector y = build_effective_channel(spec, real) * x;
    JcdeConfig cfg;
    cfg.N0 = 0.1;
    cfg.num_paths = static_cast<int>(ops.size());
    PbigabpEngine eng(y, ops, layout, cfg);
    for (auto _ : state) eng.step();
}
BENCHMARK(BM_PbigabpStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PdaStep(benchmark::State& state)
{
    std::mt19937_64 rng(3);
    SystemConfig sys;
    sys.N = static_cast<int>(state.range(0));
    const WaveformSpec spec = afdm_for(sys);
    const DelayDopplerGrid grid = DelayDopplerGrid::uniform(sys.N / 8 - 1, sys.f_max, 16);
    const DelayDopplerDictionary dict = build_dictionary(spec, random_qpsk(sys.N, rng), grid);
    const CVector y = dict.E.col(grid.index(2, 11));
    PdaEm pda(y, dict.E, 0.01, 1, PdaConfig{});
    for (auto _ : state) pda.step();
}
BENCHMARK(BM_PdaStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SblStep(benchmark::State& state)
{
    std::mt19937_64 rng(4);
    SystemConfig sys;
    sys.N = static_cast<int>(state.range(0));
    const WaveformSpec spec = afdm_for(sys);
    const DelayDopplerGrid grid = DelayDopplerGrid::uniform(sys.N / 8 - 1, sys.f_max, 16);
    const DelayDopplerDictionary dict = build_dictionary(spec, random_qpsk(sys.N, rng), grid);
    const CVector y = dict.E.col(grid.index(2, 11));
    SblEm sbl(y, dict.E, 0.01 * CMatrix::Identity(dict.E.rows(), dict.E.rows()));
    for (auto _ : state) sbl.step();
}
BENCHMARK(BM_SblStep)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
