#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "harpnet/error.hpp"
#include "harpnet/huffman.hpp"
#include "harpnet/random.hpp"
#include "harpnet/training.hpp"
#include "test_util.hpp"

using namespace harpnet;

namespace {

ModelConfig tiny(std::size_t m) {
  ModelConfig c;
  c.encoder_layers = 4;
  c.filters = 3;
  c.kernel_size = 5;
  c.skip_aes = m;
  c.skip_filters = 2;
  c.skip_hidden_layers = 2;
  c.bins = 8;
  c.framing = {64, 32, 16000};
  c.lpc.order = 4;
  return c;
}

std::vector<std::vector<Real>> frames(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<Real>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(test::random_vector(64, rng, -1, 1));
  return out;
}

TrainConfig quick() {
  TrainConfig t;
  t.warmup_epochs = 2;
  t.total_epochs = 4;
  t.target_entropy = 2;
  t.lambda_gain = 1;
  t.learning_rate = 1e-3;
  return t;
}

}  // namespace

TEST(CompositeLoss, SseOnlyWithoutLambda) {
  Tape tape;
  Var x = tape.constant(Tensor({1, 3}, {1, 2, 3}));
  Var y = tape.constant(Tensor({1, 3}, {1, 0, 0}));
  Var h = tape.constant(Tensor::scalar(1.5));
  EXPECT_DOUBLE_EQ(composite_loss(x, y, std::vector<Var>{h}, 0).value().item(), 13.0);
  EXPECT_DOUBLE_EQ(composite_loss(x, y, std::vector<Var>{h, h}, 2).value().item(), 13.0 + 2 * 3.0);
  EXPECT_DOUBLE_EQ(composite_loss(x, y, {}, 2).value().item(), 13.0);
}

TEST(TrainConfig, Validation) {
  TrainConfig t = quick();
  EXPECT_NO_THROW(t.validate(2, 32));
  t.target_entropy = 11;
  EXPECT_THROW(t.validate(2, 32), Error);
  t = quick();
  t.warmup_epochs = 4;
  EXPECT_THROW(t.validate(1, 32), Error);
  t = quick();
  t.batch_size = 0;
  EXPECT_THROW(t.validate(1, 32), Error);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p({2}, {1.0, -1.0});
  p.grad()[0] = 3;
  p.grad()[1] = -0.5;
  Adam opt(0.1);
  std::vector<Tensor*> params{&p};
  opt.step(params);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -0.9, 1e-6);
  EXPECT_EQ(p.grad()[0], 0);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor p({1}, {5.0});
  Adam opt(0.05);
  std::vector<Tensor*> params{&p};
  for (int i = 0; i < 2000; ++i) {
    p.grad()[0] = 2 * (p[0] - 1.5);
    opt.step(params);
  }
  EXPECT_NEAR(p[0], 1.5, 1e-3);
}

TEST(Train, WarmupBypassThenQuantizedWithAnnealing) {
  HarpNetModel m = build_model(tiny(1));
  TrainConfig t = quick();
  t.anneal_rate = 0.5;
  const TrainReport r = train(m, frames(8, 1), t);
  ASSERT_EQ(r.epochs.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(r.epochs[e].quantized, e >= 2);
    EXPECT_EQ(r.epochs[e].soft_entropy.size(), 2u);
    EXPECT_TRUE(std::isfinite(r.epochs[e].loss));
  }
  EXPECT_EQ(r.epochs[0].lambda, 0);
  EXPECT_EQ(r.epochs[1].lambda, 0);
  EXPECT_DOUBLE_EQ(r.epochs[1].alpha, 1.0);
  EXPECT_DOUBLE_EQ(r.epochs[2].alpha, 1.0);
  EXPECT_DOUBLE_EQ(r.epochs[3].alpha, 1.5);
  EXPECT_DOUBLE_EQ(m.main_quantizer.alpha, 2.0);
  EXPECT_DOUBLE_EQ(m.skips[0].quantizer.alpha, 2.0);
  // Controller: lambda moves by gain * (measured - target) after each quantized epoch.
  const Real expected = std::max<Real>(0, r.epochs[2].total_soft_entropy() - 2);
  EXPECT_NEAR(r.epochs[3].lambda, expected, 1e-12);
  for (const auto& e : r.epochs)
    for (Real h : e.hard_entropy) EXPECT_LE(h, 3.0 + 1e-12);
}

TEST(Train, IsDeterministic) {
  auto run = [] {
    HarpNetModel m = build_model(tiny(1));
    const TrainReport r = train(m, frames(10, 2), quick(), frames(2, 9));
    std::ostringstream tsv;
    r.write_tsv(tsv);
    return std::pair(serialize_model(m), tsv.str());
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, ReducesReconstructionErrorDuringWarmup) {
  HarpNetModel m = build_model(tiny(0));
  TrainConfig t = quick();
  t.warmup_epochs = 30;
  t.total_epochs = 31;
  t.learning_rate = 3e-3;
  const TrainReport r = train(m, frames(16, 3), t);
  EXPECT_LT(r.epochs[29].sse, 0.5 * r.epochs[0].sse);
}

TEST(Train, FramesPerEpochSubsamples) {
  HarpNetModel m = build_model(tiny(0));
  TrainConfig t = quick();
  t.frames_per_epoch = 3;
  t.batch_size = 2;
  std::size_t calls = 0;
  train(m, frames(10, 4), t, {}, [&](const EpochRecord&) { ++calls; });
  EXPECT_EQ(calls, 4u);
}

TEST(Train, ErrorsAreTyped) {
  HarpNetModel m = build_model(tiny(0));
  auto code_of = [&](const std::vector<std::vector<Real>>& data) {
    try {
      train(m, data, quick());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of({}), ErrorCode::kMissingData);
  EXPECT_EQ(code_of({std::vector<Real>(10, 0.0)}), ErrorCode::kShape);
  auto bad = frames(4, 5);
  bad[0][3] = std::numeric_limits<Real>::infinity();
  auto all_bad = bad;
  for (auto& f : all_bad) f[0] = std::numeric_limits<Real>::quiet_NaN();
  EXPECT_EQ(code_of(all_bad), ErrorCode::kDivergence);
}

TEST(Train, ReportFormats) {
  HarpNetModel m = build_model(tiny(1));
  const TrainReport r = train(m, frames(4, 6), quick());
  std::ostringstream table, tsv;
  r.write_table(table);
  r.write_tsv(tsv);
  EXPECT_NE(table.str().find("lambda"), std::string::npos);
  std::istringstream lines(tsv.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("epoch\tquantized", 0), 0u);
  EXPECT_NE(header.find("H_hard_1"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 4u);
}

TEST(Codebooks, FittedFromHardHistograms) {
  HarpNetModel m = build_model(tiny(1));
  const auto data = frames(6, 7);
  fit_codebooks(m, data);
  ASSERT_EQ(m.codebooks.size(), 2u);
  const auto h = hard_entropies(m, data);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(m.codebooks[l].size(), 9u);
    EXPECT_GE(h[l], 0);
    EXPECT_LE(h[l], 3.0);
    EXPECT_NO_THROW(HuffmanCodebook::from_lengths(m.codebooks[l]));
  }
  EXPECT_THROW(fit_codebooks(m, {}), Error);
}

TEST(Snr, Examples) {
  const std::vector<Real> ref{1, 1}, half{1, 0}, same{1, 1}, silent{0, 0};
  EXPECT_NEAR(snr_db(ref, half), 10 * std::log10(2.0), 1e-12);
  EXPECT_EQ(snr_db(ref, same), kSnrCap);
  EXPECT_THROW(snr_db(silent, same), Error);
  EXPECT_THROW(snr_db(ref, std::vector<Real>{1}), Error);
  const std::vector<Real> scaled{0.9, 0.9};
  EXPECT_NEAR(snr_db(ref, scaled), 20.0, 1e-9);
}
