#include <benchmark/benchmark.h>

#include "plangan/generator.hpp"
#include "plangan/gte.hpp"
#include "plangan/metrics.hpp"
#include "plangan/synth.hpp"

using namespace plangan;

namespace {

BubbleDiagram bench_diagram(int m) {
    Rng rng(42);
    LayoutSample s = sample_floorplan(rng, m);
    return s.diagram;
}

GeneratorConfig bench_gen_config() {
    GeneratorConfig cfg;
    cfg.channels = 8;
    cfg.gte_blocks = 2;
    cfg.cnn_hidden = 12;
    cfg.head_channels = {16, 8, 1};
    return cfg;
}

}  // namespace

static void BM_ShortestPaths(benchmark::State& state) {
    BubbleDiagram d = bench_diagram(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        WeightedAdjacency w = shortest_path_matrix(d);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BM_ShortestPaths)->Arg(4)->Arg(8)->Arg(16);

static void BM_SampleFloorplan(benchmark::State& state) {
    Rng rng(7);
    for (auto _ : state) {
        LayoutSample s = sample_floorplan(rng, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_SampleFloorplan)->Arg(4)->Arg(10)->Arg(16);

static void BM_NodeAttention(benchmark::State& state) {
    int m = static_cast<int>(state.range(0));
    BubbleDiagram d = bench_diagram(m);
    NodeSets sets = NodeSets::from(d);
    Rng rng(3);
    Tensor feats({m, 1024});
    for (int i = 0; i < feats.size(); ++i) feats[i] = rng.normal();
    Var scale = constant(Tensor::scalar(0.5));
    for (auto _ : state) {
        NoGradGuard ng;
        Var out = node_attention(constant(feats), sets.conn, scale);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_NodeAttention)->Arg(4)->Arg(8)->Arg(16);

static void BM_GeneratorForward(benchmark::State& state) {
    Generator g(bench_gen_config(), 1);
    BubbleDiagram d = bench_diagram(static_cast<int>(state.range(0)));
    Rng rng(5);
    for (auto _ : state) {
        Rng r = rng.fork(0);
        auto masks = g.generate(d, r);
        benchmark::DoNotOptimize(masks);
    }
}
BENCHMARK(BM_GeneratorForward)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_GeneratorBackward(benchmark::State& state) {
    Generator g(bench_gen_config(), 1);
    BubbleDiagram d = bench_diagram(4);
    Rng rng(5);
    Tensor inputs = build_node_inputs(d, rng, {128, 10});
    auto params = g.params().vars();
    for (auto _ : state) {
        Var loss = sum(g.forward(d, constant(inputs)));
        auto grads = grad(loss, params);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_GeneratorBackward)->Unit(benchmark::kMillisecond);

static void BM_Rasterize(benchmark::State& state) {
    Rng rng(9);
    LayoutSample s = sample_floorplan(rng, 8);
    for (auto _ : state) {
        RasterImage img = rasterize(s.rects, s.diagram.room_types);
        benchmark::DoNotOptimize(img);
    }
}
BENCHMARK(BM_Rasterize);

static void BM_ExtractDiagram(benchmark::State& state) {
    Rng rng(9);
    LayoutSample s = sample_floorplan(rng, 12);
    for (auto _ : state) {
        BubbleDiagram d = extract_bubble_diagram(s.rects, s.diagram.room_types);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(BM_ExtractDiagram);

static void BM_Frechet(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Rng rng(4);
    Tensor mu1({n}), mu2({n});
    Tensor b({n, n});
    for (int i = 0; i < b.size(); ++i) b[i] = rng.normal();
    Tensor c1({n, n}), c2({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += b.at(i, k) * b.at(j, k);
            c1.at(i, j) = s + (i == j ? 0.1 : 0.0);
            c2.at(i, j) = s * 0.5 + (i == j ? 0.2 : 0.0);
        }
    for (int i = 0; i < n; ++i) {
        mu1[i] = rng.normal();
        mu2[i] = rng.normal();
    }
    for (auto _ : state) {
        double v = frechet_distance(mu1, c1, mu2, c2);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_Frechet)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
