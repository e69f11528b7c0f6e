#include <benchmark/benchmark.h>

#include "ctxcd/citest.hpp"
#include "ctxcd/discovery.hpp"
#include "ctxcd/scm.hpp"

using namespace ctxcd;

namespace {

MultiContextScm make_scm(std::uint64_t seed) {
    Rng rng(seed);
    return generate_scm(GeneratorConfig{}, rng);
}

void bm_sigma_separation(benchmark::State& state) {
    GeneratorConfig g;
    g.edits.cycles = CycleMode::Require;
    g.edits.ops = {EditOp::Add, EditOp::Flip};
    Rng rng(3);
    const auto truth = ground_truth(generate_scm(g, rng));
    const auto& u = truth.union_graph;
    const int n = static_cast<int>(u.num_nodes());
    for (auto _ : state)
        for (int x = 0; x < n; ++x)
            for (int y = x + 1; y < n; ++y) benchmark::DoNotOptimize(sigma_separated(u, {x, y, {}}));
}
BENCHMARK(bm_sigma_separation);

void bm_partial_correlation(benchmark::State& state) {
    const auto scm = make_scm(1);
    Rng rng(2);
    const auto data = sample(scm, static_cast<int>(state.range(0)), rng);
    const auto q = CiQuery::make(0, 1, {2, 3, 4});
    for (auto _ : state) benchmark::DoNotOptimize(partial_correlation_test(data, q));
}
BENCHMARK(bm_partial_correlation)->Arg(1000)->Arg(10000);

void bm_mixed_test(benchmark::State& state) {
    const auto scm = make_scm(1);
    Rng rng(2);
    const auto data = sample(scm, static_cast<int>(state.range(0)), rng);
    const auto q = CiQuery::make(0, scm.num_system(), {2, 3});
    for (auto _ : state) benchmark::DoNotOptimize(mixed_context_test(data, q));
}
BENCHMARK(bm_mixed_test)->Arg(1000)->Arg(10000);

void bm_pc_ac_oracle(benchmark::State& state) {
    const auto truth = ground_truth(make_scm(4));
    const auto cit = CiDispatcher::oracle({truth.descriptive, truth.union_graph},
                                          static_cast<int>(truth.union_graph.num_nodes()) - 1);
    for (auto _ : state) benchmark::DoNotOptimize(pc_ac(cit, DiscoveryConfig{}));
}
BENCHMARK(bm_pc_ac_oracle);

void bm_pc_ac_sample(benchmark::State& state) {
    const auto scm = make_scm(5);
    Rng rng(6);
    const auto data = sample(scm, 1000, rng);
    const auto cit = CiDispatcher::finite_sample(data);
    for (auto _ : state) benchmark::DoNotOptimize(pc_ac(cit, DiscoveryConfig{}));
}
BENCHMARK(bm_pc_ac_sample);

}  // namespace

BENCHMARK_MAIN();
