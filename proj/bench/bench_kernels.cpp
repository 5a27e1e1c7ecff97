// Serial reference vs OpenMP kernels, and whole-network passes on each backend.
//
//   slr_bench --benchmark_filter=Dense
//   OMP_NUM_THREADS=4 slr_bench

#include <benchmark/benchmark.h>

#include <random>

#include "slr/evaluation.hpp"
#include "slr/kernels.hpp"
#include "slr/network.hpp"
#include "slr/synthetic.hpp"

using namespace slr;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (float& x : v) x = u(rng);
    return v;
}

kernels::Backend backend(const benchmark::State& st) {
    return st.range(0) ? kernels::Backend::OpenMP : kernels::Backend::Serial;
}

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "omp" : "serial"); }

// Shapes of the default model: the widest branch input and the head.
const kernels::DenseShape kShapes[] = {{64, 210, 128}, {64, 448, 512}, {64, 512, 343}};

void BM_DenseForward(benchmark::State& st) {
    const kernels::DenseShape s = kShapes[st.range(1)];
    const auto x = random_vec(s.batch * s.in, 1), w = random_vec(s.in * s.out, 2), b = random_vec(s.out, 3);
    std::vector<float> y(s.batch * s.out);
    for (auto _ : st) {
        kernels::dense_forward<float>(backend(st), s, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.batch * s.in * s.out));
    label(st);
}

void BM_DenseBackwardParams(benchmark::State& st) {
    const kernels::DenseShape s = kShapes[st.range(1)];
    const auto x = random_vec(s.batch * s.in, 1), dy = random_vec(s.batch * s.out, 2);
    std::vector<float> dw(s.in * s.out), db(s.out);
    for (auto _ : st) {
        kernels::dense_backward_params<float>(backend(st), s, x, dy, dw, db);
        benchmark::DoNotOptimize(dw.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.batch * s.in * s.out));
    label(st);
}

void BM_DenseBackwardInput(benchmark::State& st) {
    const kernels::DenseShape s = kShapes[st.range(1)];
    const auto dy = random_vec(s.batch * s.out, 1), w = random_vec(s.in * s.out, 2);
    std::vector<float> dx(s.batch * s.in);
    for (auto _ : st) {
        kernels::dense_backward_input<float>(backend(st), s, dy, w, dx);
        benchmark::DoNotOptimize(dx.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.batch * s.in * s.out));
    label(st);
}

void BM_NetworkForward(benchmark::State& st) {
    const Network<float> net = Network<float>::initialise(ModelConfig::defaults());
    const auto batch = static_cast<std::size_t>(st.range(1));
    const auto x = random_vec(batch * kFeatureSize, 4);
    for (auto _ : st) benchmark::DoNotOptimize(net.forward(x, batch, false, nullptr, backend(st)));
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * batch));
    label(st);
}

void BM_TrainingStep(benchmark::State& st) {
    const ModelConfig cfg = ModelConfig::defaults(20);
    Network<float> net = Network<float>::initialise(cfg);
    AdamState<float> adam(cfg);
    const TrainingConfig tc;
    const std::size_t batch = 64;
    const auto x = random_vec(batch * kFeatureSize, 5);
    std::vector<int> y(batch);
    for (std::size_t i = 0; i < batch; ++i) y[i] = static_cast<int>(i % 20);
    std::uint64_t seed = 0;
    for (auto _ : st) {
        const auto g = gradients(net, std::span<const float>(x), std::span<const int>(y), true, ++seed, backend(st));
        adam_step(net, g, adam, tc);
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * batch));
    label(st);
}

void BM_EncodeForwardLatency(benchmark::State& st) {
    Model m;
    m.net = Network<float>::initialise(ModelConfig::defaults());
    const LandmarkWindow w = synthetic_window();
    for (auto _ : st) benchmark::DoNotOptimize(m.predict(encode_window(fill_missing(w)), kernels::Backend::Serial));
}

}  // namespace

BENCHMARK(BM_DenseForward)->ArgsProduct({{0, 1}, {0, 1, 2}});
BENCHMARK(BM_DenseBackwardParams)->ArgsProduct({{0, 1}, {0, 1, 2}});
BENCHMARK(BM_DenseBackwardInput)->ArgsProduct({{0, 1}, {0, 1, 2}});
BENCHMARK(BM_NetworkForward)->ArgsProduct({{0, 1}, {1, 64, 512}});
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1);
BENCHMARK(BM_EncodeForwardLatency)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
