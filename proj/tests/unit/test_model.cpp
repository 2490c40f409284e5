#include <gtest/gtest.h>

#include <cmath>

#include "harpnet/bytes.hpp"
#include "harpnet/error.hpp"
#include "harpnet/model.hpp"
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

ModelConfig toy(std::size_t m) {
  ModelConfig c;
  c.filters = 8;
  c.kernel_size = 9;
  c.skip_filters = 8;
  c.skip_aes = m;
  return c;
}

std::vector<Real> random_frame(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return test::random_vector(n, rng, -2, 2);
}

Tensor as_row(const std::vector<Real>& v) { return Tensor({1, v.size()}, v); }

}  // namespace

TEST(BuildModel, BaselineDegeneratesToOneCode) {
  const HarpNetModel m = build_model(tiny(0));
  EXPECT_EQ(m.code_layers(), 1u);
  EXPECT_EQ(encode(m, random_frame(64, 1)).size(), 1u);
}

TEST(BuildModel, SkipTapsAndCodeOrder) {
  ModelConfig c = toy(3);
  const HarpNetModel m = build_model(c);
  ASSERT_EQ(m.skips.size(), 3u);
  EXPECT_EQ(m.skips[0].tap, 5u);
  EXPECT_EQ(m.skips[1].tap, 4u);
  EXPECT_EQ(m.skips[2].tap, 3u);
  EXPECT_EQ(m.code_layers(), 4u);
  // Tapped decoder layers take the concatenation.
  for (std::size_t l = 1; l <= 6; ++l) {
    const std::size_t base = l == 6 ? 1 : 8;
    EXPECT_EQ(m.decoder[l - 1].spec.in_channels, m.is_tap(l) ? 2 * base : base) << "layer " << l;
  }
  EXPECT_EQ(m.encoder.back().spec.out_channels, 1u);
  EXPECT_EQ(m.encoder.back().spec.activation, Activation::kTanh);
  for (const auto& s : m.skips) {
    EXPECT_EQ(s.encoder.back().spec.out_channels, 1u);
    EXPECT_EQ(s.encoder.back().spec.activation, Activation::kTanh);
    EXPECT_EQ(s.encoder.size(), 4u);
    EXPECT_EQ(s.decoder.back().spec.out_channels, 8u);
  }
}

TEST(BuildModel, RejectsTooManySkips) {
  EXPECT_THROW(build_model(toy(6)), Error);
  EXPECT_NO_THROW(build_model(toy(5)));
}

TEST(BuildModel, LengthPreservation) {
  const HarpNetModel m = build_model(toy(2));
  for (std::size_t n : {16u, 1024u}) {
    Tape tape;
    const ForwardPass pass = forward(m, tape, tape.constant(as_row(random_frame(n, n))), QuantMode::kSoft);
    EXPECT_EQ(pass.reconstruction.shape(), (Shape{1, n}));
    for (Var b : pass.bottlenecks) EXPECT_EQ(b.shape(), (Shape{1, n}));
  }
}

TEST(ParamCount, ClosedFormLayers) {
  EXPECT_EQ(conv_param_count(24, 24, 15), 8664u);
  EXPECT_EQ(conv_param_count(24, 1, 15), 361u);
}

TEST(ParamCount, CountsMatchAllocatedTensors) {
  for (std::size_t m = 0; m <= 3; ++m) {
    EXPECT_EQ(count_params(build_model(toy(m))), count_params(toy(m)));
    EXPECT_EQ(count_params(build_model(tiny(m))), count_params(tiny(m)));
  }
}

TEST(ParamCount, FullScaleThreeSkipsNearTable) {
  ModelConfig full;
  full.skip_aes = 3;
  const double n = static_cast<double>(count_params(full));
  EXPECT_NEAR(n, 298000.0, 0.15 * 298000.0);
}

TEST(Baseline, WithinThreePercentAndNotSmaller) {
  for (std::size_t m = 1; m <= 3; ++m) {
    const std::size_t budget = count_params(toy(m));
    const ModelConfig b = baseline_config(budget, toy(m));
    EXPECT_EQ(b.skip_aes, 0u);
    const double n = static_cast<double>(count_params(b));
    EXPECT_LE(std::abs(n - budget), 0.03 * budget);
    EXPECT_GE(n, static_cast<double>(budget));
    EXPECT_EQ(build_baseline(budget, toy(m)).code_layers(), 1u);
  }
  EXPECT_THROW(baseline_config(10, toy(1)), Error);
}

TEST(Baseline, MatchesSkipFreeModelExactly) {
  const ModelConfig plain = toy(0);
  const ModelConfig b = baseline_config(count_params(plain), plain);
  EXPECT_EQ(b.encoder_layers, plain.encoder_layers);
  EXPECT_EQ(b.filters, plain.filters);
  const HarpNetModel x = build_model(plain), y = build_model(b);
  EXPECT_EQ(count_params(x), count_params(y));
  const auto frame = random_frame(256, 3);
  Tape t1, t2;
  const auto a = forward(x, t1, t1.constant(as_row(frame)), QuantMode::kSoft).reconstruction.value();
  const auto c = forward(y, t2, t2.constant(as_row(frame)), QuantMode::kSoft).reconstruction.value();
  EXPECT_EQ(std::vector<Real>(a.data().begin(), a.data().end()), std::vector<Real>(c.data().begin(), c.data().end()));
}

TEST(Forward, ZeroInputGivesZeroOutput) {
  const HarpNetModel m = build_model(toy(2));
  Tape tape;
  const auto pass = forward(m, tape, tape.constant(Tensor({1, 128})), QuantMode::kSoft);
  for (Real v : pass.reconstruction.value().data()) EXPECT_NEAR(v, 0, 1e-9);
}

TEST(Forward, BottlenecksAreTanhBounded) {
  const HarpNetModel m = build_model(toy(3));
  Tape tape;
  Tensor big({1, 512});
  Rng rng(5);
  for (Real& v : big.data()) v = static_cast<Real>(100 * rng.normal());
  const auto pass = forward(m, tape, tape.constant(big), QuantMode::kHard);
  for (Var b : pass.bottlenecks)
    for (Real v : b.value().data()) EXPECT_LE(std::abs(v), 1.0);
  for (const auto& codes : pass.codes)
    for (CodeIndex c : codes) EXPECT_LT(c, 32);
}

TEST(Forward, BypassLeavesBottleneckUntouched) {
  const HarpNetModel m = build_model(toy(1));
  Tape tape;
  const auto pass = forward(m, tape, tape.constant(as_row(random_frame(128, 4))), QuantMode::kBypass);
  EXPECT_FALSE(pass.quantization_active);
  for (std::size_t l = 0; l < pass.bottlenecks.size(); ++l) EXPECT_EQ(pass.quantized[l].id, pass.bottlenecks[l].id);
  Tape tape2;
  EXPECT_TRUE(forward(m, tape2, tape2.constant(as_row(random_frame(128, 4))), QuantMode::kSoft).quantization_active);
}

TEST(Forward, EveryParameterReceivesGradient) {
  HarpNetModel m = build_model(tiny(2));
  for (SoftQuantizer* q : m.quantizers()) q->alpha = 0.2;
  Tape tape;
  Var x = tape.constant(as_row(random_frame(64, 6)));
  ForwardPass pass = forward(m, tape, x, QuantMode::kSoft);
  tape.backward(composite_loss(x, pass.reconstruction, pass.entropies, 0.5));
  std::size_t index = 0;
  for (const Tensor* p : m.parameters()) {
    ASSERT_TRUE(p->has_grad()) << "tensor " << index;
    for (std::size_t i = 0; i < p->numel(); ++i) EXPECT_NE(p->grad()[i], 0) << "tensor " << index << " element " << i;
    ++index;
  }
}

TEST(Forward, FullLossMatchesFiniteDifferences) {
  HarpNetModel m = build_model(tiny(2));
  for (SoftQuantizer* q : m.quantizers()) q->alpha = 0.5;
  Rng frame_rng(7);
  const auto frame = test::random_vector(64, frame_rng, -0.5, 0.5);
  auto run = [&](std::vector<std::uint8_t>* sig) {
    Tape tape;
    Var x = tape.constant(as_row(frame));
    ForwardPass pass = forward(m, tape, x, QuantMode::kSoft);
    Var loss = composite_loss(x, pass.reconstruction, pass.entropies, 0.3);
    if (sig != nullptr) *sig = tape.kink_signature();
    return loss.value().item();
  };
  {
    Tape tape;
    Var x = tape.constant(as_row(frame));
    ForwardPass pass = forward(m, tape, x, QuantMode::kSoft);
    tape.backward(composite_loss(x, pass.reconstruction, pass.entropies, 0.3));
  }
  Rng rng(8);
  for (Tensor* p : m.parameters()) {
    const std::vector<Real> analytic(p->grad().begin(), p->grad().end());
    std::vector<std::size_t> coords;
    for (int i = 0; i < 4; ++i) coords.push_back(rng.below(p->numel()));
    const auto r = compare_gradients(p->data(), analytic, run, 1e-5, coords);
    EXPECT_LT(r.max_relative_error, 1e-5);
  }
}

TEST(EncodeDecode, DeterministicAndBounded) {
  const HarpNetModel m = build_model(toy(2));
  const auto frame = random_frame(1024, 9);
  const LayerCodes a = encode(m, frame), b = encode(m, frame);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  for (const auto& layer : a) {
    EXPECT_EQ(layer.size(), 1024u);
    for (CodeIndex c : layer) EXPECT_LT(c, 32);
  }
  const auto y1 = decode(m, a), y2 = decode(m, a);
  EXPECT_EQ(y1, y2);
  EXPECT_EQ(y1.size(), 1024u);
}

TEST(EncodeDecode, HardForwardMatchesEncodeDecode) {
  const HarpNetModel m = build_model(toy(1));
  const auto frame = random_frame(300, 10);
  Tape tape;
  const auto pass = forward(m, tape, tape.constant(as_row(frame)), QuantMode::kHard);
  EXPECT_EQ(pass.codes, encode(m, frame));
  const auto y = decode(m, pass.codes);
  const auto r = pass.reconstruction.value().data();
  EXPECT_EQ(y, std::vector<Real>(r.begin(), r.end()));
}

TEST(EncodeDecode, MismatchedCodesRejected) {
  const HarpNetModel m = build_model(toy(2));
  LayerCodes codes = encode(m, random_frame(64, 11));
  LayerCodes fewer(codes.begin(), codes.end() - 1);
  try {
    decode(m, fewer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kModelMismatch);
  }
  codes[1][5] = 32;
  try {
    decode(m, codes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptStream);
  }
}

TEST(ModelFile, RoundTripIsByteExact) {
  HarpNetModel m = build_model(tiny(2));
  m.main_quantizer.alpha = 3.7;
  m.codebooks.assign(3, std::vector<std::uint8_t>(9, 0));
  for (auto& cb : m.codebooks) cb[0] = cb[8] = 1;
  const auto bytes = serialize_model(m);
  const HarpNetModel back = deserialize_model(bytes);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_EQ(back.main_quantizer.alpha, 3.7);
  EXPECT_EQ(back.codebooks, m.codebooks);
  EXPECT_EQ(back.config.framing.frame_size, 64u);
}

TEST(ModelFile, CorruptionIsDetected) {
  const auto bytes = serialize_model(build_model(tiny(1)));
  auto code_of = [](std::vector<std::uint8_t> b) {
    try {
      deserialize_model(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_EQ(code_of(flipped), ErrorCode::kChecksumMismatch);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of(magic), ErrorCode::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  const std::uint32_t crc = crc32(std::span(version).subspan(4, version.size() - 8));
  for (int i = 0; i < 4; ++i) version[version.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
  EXPECT_EQ(code_of(version), ErrorCode::kVersionMismatch);
  EXPECT_EQ(code_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20)), ErrorCode::kChecksumMismatch);
}
