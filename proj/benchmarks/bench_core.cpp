#include <benchmark/benchmark.h>

#include <random>

#include "metassl/hetloss.hpp"
#include "metassl/metrics.hpp"
#include "metassl/model.hpp"
#include "metassl/synthdata.hpp"

using namespace metassl;

namespace {

Image bench_image(int hw) {
    SceneSpec spec;
    spec.height = hw;
    spec.width = hw;
    spec.seed = 1;
    return generate_dataset(spec, 1)[0].image;
}

void BM_forward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    const TinySegNet net = init_net(1, 1, 16, 3);
    const Image img = bench_image(hw);
    for (auto _ : state) {
        auto out = forward(net, img);
        benchmark::DoNotOptimize(out.first.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(hw) * hw);
}
BENCHMARK(BM_forward)->Arg(32)->Arg(64);

void BM_backward(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    const TinySegNet net = init_net(1, 1, 16, 3);
    const Image img = bench_image(hw);
    const auto [logits, cache] = forward(net, img);
    std::vector<float> d(logits.data.size(), 0.01f);
    for (auto _ : state) {
        NetGradients g = backward(net, cache, d);
        benchmark::DoNotOptimize(g.conv1_w.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(hw) * hw);
}
BENCHMARK(BM_backward)->Arg(32)->Arg(64);

void BM_het_ce(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    const TinySegNet net = init_net(1, 1, 16, 3);
    const Image img = bench_image(hw);
    const ProbMap p = softmax(forward_logits(net, img));
    LabelMap y(hw, hw, 1);
    RegionMap m(hw, hw, Region::US);
    const WeightSchedule w =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.3, Ordering::Unlabeled);
    for (auto _ : state) {
        LossOutput out = het_ce(p, y, m, w);
        benchmark::DoNotOptimize(out.value);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(hw) * hw);
}
BENCHMARK(BM_het_ce)->Arg(64);

void BM_het_dice(benchmark::State& state) {
    const int hw = static_cast<int>(state.range(0));
    const TinySegNet net = init_net(1, 1, 16, 3);
    const Image img = bench_image(hw);
    const ProbMap p = softmax(forward_logits(net, img));
    const ProbMap y = one_hot(LabelMap(hw, hw, 1), 3);
    RegionMap m(hw, hw, Region::US);
    const WeightSchedule w =
        make_schedule({DecayKind::GeneralizedGaussian, 3.0}, 0.6, Ordering::Labeled);
    for (auto _ : state) {
        LossOutput out = het_dice(p, y, m, w);
        benchmark::DoNotOptimize(out.value);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(hw) * hw);
}
BENCHMARK(BM_het_dice)->Arg(64);

void BM_hd95(benchmark::State& state) {
    SceneSpec spec;
    spec.seed = 2;
    const auto data = generate_dataset(spec, 2);
    for (auto _ : state) {
        auto h = hd95(data[0].labels, data[1].labels, 1);
        benchmark::DoNotOptimize(h);
    }
}
BENCHMARK(BM_hd95);

}  // namespace

BENCHMARK_MAIN();
