#include <benchmark/benchmark.h>

#include "harpnet/codec.hpp"
#include "harpnet/huffman.hpp"
#include "harpnet/model.hpp"
#include "harpnet/random.hpp"
#include "harpnet/synthetic.hpp"
#include "harpnet/training.hpp"

using namespace harpnet;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(-1, 1));
  return t;
}

ModelConfig toy(std::size_t m) {
  ModelConfig c;
  c.filters = 8;
  c.kernel_size = 9;
  c.skip_filters = 8;
  c.skip_aes = m;
  return c;
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor x = random_tensor({channels, 1024}, rng);
  Tensor w = random_tensor({channels, channels, 15}, rng);
  Tensor b = random_tensor({channels}, rng);
  for (auto _ : state) {
    Tape tape;
    Var y = conv1d_same(tape.param(x), tape.param(w), tape.param(b));
    tape.backward(sum(y));
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(channels * channels * 15 * 1024));
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(8)->Arg(24);

void BM_HuffmanEncode(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> p(32);
  for (double& v : p) v = rng.uniform() * rng.uniform();
  const HuffmanCodebook cb = build_codebook(p);
  std::vector<CodeIndex> seq(1 << 16);
  for (auto& s : seq) s = static_cast<CodeIndex>(rng.below(32));
  for (auto _ : state) benchmark::DoNotOptimize(huffman_encode(seq, cb));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.size()));
}
BENCHMARK(BM_HuffmanEncode);

void BM_HuffmanDecode(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> p(32);
  for (double& v : p) v = rng.uniform() * rng.uniform();
  const HuffmanCodebook cb = build_codebook(p);
  std::vector<CodeIndex> seq(1 << 16);
  for (auto& s : seq) s = static_cast<CodeIndex>(rng.below(32));
  const BitBuffer bits = huffman_encode(seq, cb);
  for (auto _ : state) benchmark::DoNotOptimize(huffman_decode(bits, cb, seq.size()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq.size()));
}
BENCHMARK(BM_HuffmanDecode);

void BM_TrainStep(benchmark::State& state) {
  HarpNetModel model = build_model(toy(static_cast<std::size_t>(state.range(0))));
  Rng rng(4);
  const Tensor frame = random_tensor({1, 1024}, rng);
  Adam opt(1e-4);
  const auto params = model.parameters();
  for (auto _ : state) {
    Tape tape;
    Var x = tape.constant(frame);
    ForwardPass pass = forward(model, tape, x, QuantMode::kSoft);
    tape.backward(composite_loss(x, pass.reconstruction, pass.entropies, 1));
    opt.step(params);
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_EncodeDecodeSecond(benchmark::State& state) {
  HarpNetModel model = build_model(toy(2));
  const auto clip = synthetic_clip(SyntheticKind::kSines, 16000, 16000, 5);
  fit_codebooks(model, residual_frames(clip, model.config));
  for (auto _ : state) {
    const auto bytes = write_stream(encode_signal(model, clip, 16000));
    benchmark::DoNotOptimize(decode_signal(model, read_stream(bytes)));
  }
}
BENCHMARK(BM_EncodeDecodeSecond)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
