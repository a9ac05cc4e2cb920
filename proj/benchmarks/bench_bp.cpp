// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "bpx/bp.hpp"
#include "bpx/pipeline.hpp"
#include "bpx/synth.hpp"

namespace {

using namespace bpx;

PlantedData make(std::size_t q, std::size_t per_block, std::size_t labels, std::size_t d) {
    PlantedSpec spec;
    spec.q_true = q;
    spec.instances_per_block = per_block;
    spec.test_instances_per_block = 20;
    spec.labels_per_block = labels;
    spec.d = d;
    spec.seed = 1;
    return generate(spec);
}

// One label-selection plus instance-selection step.
void BM_AlternatingIteration(benchmark::State& state) {
    const auto q = static_cast<std::size_t>(state.range(0));
    const auto g = make(q, 2000 / q, 500 / q, 200);
    std::vector<std::uint32_t> assign = g.truth.instance_cluster_of;
    for (auto _ : state) {
        const auto labels = select_label_clusters(g.train.labels, assign, q, 1.0, 1);
        auto next = select_instance_clusters(g.train.labels, labels, assign);
        benchmark::DoNotOptimize(next.data());
    }
    state.counters["nnz"] = static_cast<double>(g.train.labels.nnz());
}
BENCHMARK(BM_AlternatingIteration)->Arg(2)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_KMeans(benchmark::State& state) {
    const auto q = static_cast<std::size_t>(state.range(0));
    const auto g = make(q, 1000 / q, 10, 200);
    for (auto _ : state) {
        auto a = init_instance_clusters(g.train.features, q, 0);
        benchmark::DoNotOptimize(a.data());
    }
}
BENCHMARK(BM_KMeans)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

struct Trained {
    PlantedData data;
    BpModel bp;
    LinearModel naive;
};

const Trained& trained() {
    static const Trained t = [] {
        auto g = make(10, 50, 30, 300);
        BpConfig cfg;
        cfg.q = 10;
        cfg.lambda = 0.1;
        auto bp = train_bp(g.train, cfg, TrainConfig{});
        auto naive = train_naive(g.train, TrainConfig{});
        return Trained{std::move(g), std::move(bp), std::move(naive)};
    }();
    return t;
}

void BM_PredictRouted(benchmark::State& state) {
    const auto& t = trained();
    for (auto _ : state) {
        auto r = predict_bp(t.bp, t.data.test.features, 5);
        benchmark::DoNotOptimize(r.mults_used.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.data.test.num_instances()));
}
BENCHMARK(BM_PredictRouted)->Unit(benchmark::kMicrosecond);

void BM_PredictNaive(benchmark::State& state) {
    const auto& t = trained();
    for (auto _ : state) {
        auto r = predict_naive(t.naive, t.data.test.features, 5);
        benchmark::DoNotOptimize(r.mults_used.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.data.test.num_instances()));
}
BENCHMARK(BM_PredictNaive)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
