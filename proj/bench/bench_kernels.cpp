#include <benchmark/benchmark.h>

#include <map>

#include "ivdtr/dtr.hpp"
#include "ivdtr/sim.hpp"

namespace {

using namespace ivdtr;

struct StageFixture {
    Matrix h;
    NuisanceSet nuisance;
    Interval tail{0.0, 1.0};
};

const StageFixture& stage_fixture(std::size_t n) {
    static std::map<std::size_t, StageFixture> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    SimConfig cfg;
    Rng rng(7);
    const auto sample = generate(cfg, n, rng);
    StageFixture f;
    f.h = sample.data.histories(1);
    f.nuisance = fit_stage_nuisance(f.h, sample.data.instruments(1), sample.data.actions(1),
                                    sample.data.rewards(1), f.tail, true);
    return cache.emplace(n, std::move(f)).first->second;
}

void BM_StageIntervalsSerial(benchmark::State& state) {
    const auto& f = stage_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto iv = serial::stage_intervals(f.nuisance.propensity, f.nuisance.outcome, f.h, f.tail);
        benchmark::DoNotOptimize(iv.plus.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StageIntervalsParallel(benchmark::State& state) {
    const auto& f = stage_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto iv = stage_intervals(f.nuisance.propensity, f.nuisance.outcome, f.h, f.tail);
        benchmark::DoNotOptimize(iv.plus.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct EvalFixture {
    SimConfig cfg;
    Dtr policy;
    EvalPoints points;
};

const EvalFixture& eval_fixture(std::size_t n) {
    static std::map<std::size_t, EvalFixture> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    EvalFixture f;
    Rng rng(11);
    const auto sample = generate(f.cfg, 1000, rng);
    const auto fit = backward_induct(sample.data, sim_reward_bounds(), WeightSpec::minmax(2));
    f.policy = project_policy(fit.stages, sample.data, {}, WeightSpec::minmax(2));
    f.points = draw_eval_points(n, rng);
    return cache.emplace(n, std::move(f)).first->second;
}

void BM_EvaluateSerial(benchmark::State& state) {
    const auto& f = eval_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::evaluate_on(f.policy, f.cfg, f.points));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvaluateParallel(benchmark::State& state) {
    const auto& f = eval_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_on(f.policy, f.cfg, f.points));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_StageIntervalsSerial)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_StageIntervalsParallel)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvaluateSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
