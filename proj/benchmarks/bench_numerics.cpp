#include <benchmark/benchmark.h>

#include <random>

#include "celltrack/numerics/layers.hpp"
#include "celltrack/numerics/ops.hpp"

using namespace celltrack::numerics;

namespace {

Tensor<float> random_input(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(c * h * w);
  for (auto& x : v) x = u(rng);
  return Tensor<float>::constant({c, h, w}, std::move(v));
}

// args: in, out, k, height, width
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const auto in = static_cast<std::size_t>(state.range(0)), out = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto h = static_cast<std::size_t>(state.range(3)), w = static_cast<std::size_t>(state.range(4));
  auto layer = LayerParams<float>::create("bench", out, in, k, rng);
  const auto x = random_input(in, h, w, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, layer, Activation::Sigmoid));
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(in * out * k * k * h * w),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv2dForward)->Args({16, 16, 5, 48, 64})->Args({16, 16, 5, 96, 128})->Args({17, 64, 3, 48, 64});

void BM_Conv2dForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const auto in = static_cast<std::size_t>(state.range(0)), out = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto h = static_cast<std::size_t>(state.range(3)), w = static_cast<std::size_t>(state.range(4));
  auto layer = LayerParams<float>::create("bench", out, in, k, rng);
  std::vector<float> xv(in * h * w, 0.5f);
  auto x = Tensor<float>::parameter({in, h, w}, xv);
  for (auto _ : state) {
    auto loss = sum(conv2d(x, layer, Activation::Sigmoid));
    backward(loss);
    layer.kernel.zero_grad();
    layer.bias.zero_grad();
    x.zero_grad();
  }
  state.counters["MAC/s"] = benchmark::Counter(3.0 * static_cast<double>(in * out * k * k * h * w),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({16, 16, 5, 48, 64})->Args({16, 16, 5, 96, 128})->Args({17, 64, 3, 48, 64});

// args: hidden, height, width, steps
void BM_ConvLstmUnroll(benchmark::State& state) {
  Rng rng(2);
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto h = static_cast<std::size_t>(state.range(1)), w = static_cast<std::size_t>(state.range(2));
  const auto steps = static_cast<std::size_t>(state.range(3));
  auto params = ConvLSTMParams<float>::create("lstm", 1, hidden, 3, rng);
  std::vector<Tensor<float>> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_input(1, h, w, rng));
  for (auto _ : state) {
    auto s = ConvLSTMState<float>::zeros(hidden, h, w);
    std::vector<Tensor<float>> terms;
    for (const auto& x : xs) {
      s = convlstm_step(x, s, params);
      terms.push_back(mean(s.hidden));
    }
    backward(sum_scalars(terms));
    params.gates.kernel.zero_grad();
    params.gates.bias.zero_grad();
  }
}
BENCHMARK(BM_ConvLstmUnroll)->Args({16, 48, 64, 8})->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  retain_heap_memory();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
