#include "harpnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <string>
#include <type_traits>

#include "harpnet/error.hpp"
#include "harpnet/random.hpp"

namespace harpnet {

std::size_t conv_param_count(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size) {
  return kernel_size * in_channels * out_channels + out_channels;
}

void ModelConfig::validate() const {
  if (encoder_layers < 1) fail(ErrorCode::kInvalidArgument, "the encoder needs at least one layer");
  if (filters < 1 || skip_filters < 1) fail(ErrorCode::kInvalidArgument, "filter counts must be positive");
  if (kernel_size % 2 == 0) fail(ErrorCode::kInvalidArgument, "kernel size must be odd");
  if (skip_aes > encoder_layers - 1) {
    fail(ErrorCode::kInvalidArgument, "M = " + std::to_string(skip_aes) + " skip autoencoders exceeds encoder depth - 1 = " +
                                          std::to_string(encoder_layers - 1));
  }
  if (skip_aes > 0 && skip_hidden_layers < 1) fail(ErrorCode::kInvalidArgument, "skip autoencoders need a hidden layer");
  if (bins < 2 || bins > 65535) fail(ErrorCode::kInvalidArgument, "bin count must be in [2, 65535]");
  if (!(alpha_init > 0)) fail(ErrorCode::kInvalidArgument, "alpha must be positive");
  lpc.validate();
  framing.validate(lpc.order);
  if (framing.frame_size < kernel_size / 2 + 1) fail(ErrorCode::kInvalidArgument, "frame shorter than the kernel span");
}

std::vector<SoftQuantizer*> HarpNetModel::quantizers() {
  std::vector<SoftQuantizer*> out{&main_quantizer};
  for (auto& s : skips) out.push_back(&s.quantizer);
  return out;
}

std::vector<const SoftQuantizer*> HarpNetModel::quantizers() const {
  std::vector<const SoftQuantizer*> out{&main_quantizer};
  for (const auto& s : skips) out.push_back(&s.quantizer);
  return out;
}

std::vector<Tensor*> HarpNetModel::parameters() {
  std::vector<Tensor*> out;
  auto add_layers = [&out](std::vector<ConvLayer>& layers) {
    for (auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
  };
  add_layers(encoder);
  add_layers(decoder);
  for (auto& s : skips) {
    add_layers(s.encoder);
    add_layers(s.decoder);
  }
  for (SoftQuantizer* q : quantizers()) out.push_back(&q->centers);
  return out;
}

std::vector<const Tensor*> HarpNetModel::parameters() const {
  auto mut = const_cast<HarpNetModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

bool HarpNetModel::is_tap(std::size_t layer) const noexcept {
  const std::size_t depth = encoder.size();
  return layer < depth && layer + skips.size() >= depth;
}

namespace {

ConvLayer make_layer(const LayerSpec& spec, Rng& rng) {
  ConvLayer layer;
  layer.spec = spec;
  layer.weight = Tensor({spec.out_channels, spec.in_channels, spec.kernel_size});
  layer.bias = Tensor({spec.out_channels});
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_channels * spec.kernel_size));
  for (Real& w : layer.weight.data()) w = static_cast<Real>(rng.uniform(-bound, bound));
  return layer;
}

SkipAutoencoder make_skip(const ModelConfig& cfg, std::size_t tap, Rng& rng) {
  SkipAutoencoder s;
  s.tap = tap;
  const std::size_t k = cfg.kernel_size, f = cfg.filters, sf = cfg.skip_filters;
  s.encoder.push_back(make_layer({f, sf, k, Activation::kLeakyRelu}, rng));
  for (std::size_t i = 1; i < cfg.skip_hidden_layers; ++i)
    s.encoder.push_back(make_layer({sf, sf, k, Activation::kLeakyRelu}, rng));
  s.encoder.push_back(make_layer({sf, 1, k, Activation::kTanh}, rng));
  s.decoder.push_back(make_layer({1, sf, k, Activation::kLeakyRelu}, rng));
  for (std::size_t i = 1; i < cfg.skip_hidden_layers; ++i)
    s.decoder.push_back(make_layer({sf, sf, k, Activation::kLeakyRelu}, rng));
  s.decoder.push_back(make_layer({sf, f, k, Activation::kLinear}, rng));
  s.quantizer = SoftQuantizer::uniform(cfg.bins, -1, 1, cfg.alpha_init);
  return s;
}

// Layer shapes for a config, without allocating weights.
struct Topology {
  std::vector<LayerSpec> encoder, decoder;
};

Topology topology(const ModelConfig& cfg) {
  Topology t;
  const std::size_t depth = cfg.encoder_layers, f = cfg.filters, k = cfg.kernel_size, m = cfg.skip_aes;
  for (std::size_t l = 1; l <= depth; ++l) {
    const std::size_t in = l == 1 ? 1 : f;
    const std::size_t out = l == depth ? 1 : f;
    t.encoder.push_back({in, out, k, l == depth ? Activation::kTanh : Activation::kLeakyRelu});
  }
  for (std::size_t l = 1; l <= depth; ++l) {
    const bool tapped = l < depth && l + m >= depth;
    const std::size_t base_in = l == depth ? 1 : f;
    const std::size_t out = l == 1 ? 1 : f;
    t.decoder.push_back({tapped ? 2 * base_in : base_in, out, k, l == 1 ? Activation::kLinear : Activation::kLeakyRelu});
  }
  return t;
}

std::size_t skip_param_count(const ModelConfig& cfg) {
  const std::size_t k = cfg.kernel_size, f = cfg.filters, sf = cfg.skip_filters, h = cfg.skip_hidden_layers;
  std::size_t n = conv_param_count(f, sf, k) + (h - 1) * conv_param_count(sf, sf, k) + conv_param_count(sf, 1, k);
  n += conv_param_count(1, sf, k) + (h - 1) * conv_param_count(sf, sf, k) + conv_param_count(sf, f, k);
  return n + cfg.bins;
}

}  // namespace

HarpNetModel build_model(const ModelConfig& config) {
  config.validate();
  HarpNetModel model;
  model.config = config;
  Rng rng(config.seed);
  const Topology topo = topology(config);
  for (const auto& spec : topo.encoder) model.encoder.push_back(make_layer(spec, rng));
  for (const auto& spec : topo.decoder) model.decoder.push_back(make_layer(spec, rng));
  for (std::size_t m = 1; m <= config.skip_aes; ++m)
    model.skips.push_back(make_skip(config, config.encoder_layers - m, rng));
  model.main_quantizer = SoftQuantizer::uniform(config.bins, -1, 1, config.alpha_init);
  return model;
}

std::size_t count_params(const HarpNetModel& model) {
  std::size_t n = 0;
  for (const Tensor* t : model.parameters()) n += t->numel();
  return n;
}

std::size_t count_params(const ModelConfig& config) {
  const Topology topo = topology(config);
  std::size_t n = config.bins;
  for (const auto& s : topo.encoder) n += conv_param_count(s.in_channels, s.out_channels, s.kernel_size);
  for (const auto& s : topo.decoder) n += conv_param_count(s.in_channels, s.out_channels, s.kernel_size);
  if (config.skip_aes > 0) n += config.skip_aes * skip_param_count(config);
  return n;
}

ModelConfig baseline_config(std::size_t budget, const ModelConfig& reference, Real tolerance) {
  ModelConfig base = reference;
  base.skip_aes = 0;
  base.encoder_layers = 1;
  base.filters = 1;
  if (budget <= count_params(base)) {
    fail(ErrorCode::kInvalidArgument, "parameter budget " + std::to_string(budget) + " is below the smallest baseline");
  }
  bool found = false;
  ModelConfig best = base;
  auto rank = [&](const ModelConfig& c) {
    const auto n = static_cast<double>(count_params(c));
    const double diff = std::abs(n - static_cast<double>(budget));
    const bool under = n < static_cast<double>(budget);
    const double depth_gap = std::abs(static_cast<double>(c.encoder_layers) - static_cast<double>(reference.encoder_layers));
    return std::tuple{under, diff, depth_gap, c.filters};
  };
  for (std::size_t depth = 2; depth <= 16; ++depth) {
    for (std::size_t filters = 1; filters <= 256; ++filters) {
      ModelConfig c = base;
      c.encoder_layers = depth;
      c.filters = filters;
      const auto n = static_cast<double>(count_params(c));
      if (std::abs(n - static_cast<double>(budget)) > static_cast<double>(tolerance) * static_cast<double>(budget)) continue;
      if (!found || rank(c) < rank(best)) {
        best = c;
        found = true;
      }
    }
  }
  if (!found) {
    fail(ErrorCode::kInvalidArgument, "no baseline within " + std::to_string(tolerance * 100) + "% of " +
                                          std::to_string(budget) + " parameters");
  }
  return best;
}

HarpNetModel build_baseline(std::size_t budget, const ModelConfig& reference, Real tolerance) {
  return build_model(baseline_config(budget, reference, tolerance));
}

// ---- forward passes ----------------------------------------------------------

namespace {

template <class Model>
Var bind(Tape& tape, Model& model, std::conditional_t<std::is_const_v<Model>, const Tensor, Tensor>& t) {
  (void)model;
  if constexpr (std::is_const_v<Model>) {
    return tape.constant(t);
  } else {
    return tape.param(t);
  }
}

template <class Model, class Layer>
Var apply_layer(Tape& tape, Model& model, Layer& layer, Var x) {
  Var y = conv1d_same(x, bind(tape, model, layer.weight), bind(tape, model, layer.bias));
  switch (layer.spec.activation) {
    case Activation::kTanh: return tanh_act(y);
    case Activation::kLeakyRelu: return leaky_relu(y, model.config.leaky_slope);
    case Activation::kLinear: break;
  }
  return y;
}

template <class Model, class Layers>
Var apply_stack(Tape& tape, Model& model, Layers& layers, Var x) {
  for (auto& layer : layers) x = apply_layer(tape, model, layer, x);
  return x;
}

// Encoder side: returns the bottleneck of every code layer in code order.
template <class Model>
std::vector<Var> run_encoders(Tape& tape, Model& model, Var frame) {
  const std::size_t depth = model.encoder.size();
  std::vector<Var> outputs{frame};
  for (auto& layer : model.encoder) outputs.push_back(apply_layer(tape, model, layer, outputs.back()));
  std::vector<Var> codes{outputs[depth]};
  for (auto& skip : model.skips) codes.push_back(apply_stack(tape, model, skip.encoder, outputs[skip.tap]));
  return codes;
}

// Decoder side from the (de)quantized code of every layer.
template <class Model>
Var run_decoders(Tape& tape, Model& model, const std::vector<Var>& quantized) {
  const std::size_t depth = model.decoder.size();
  std::vector<Var> bridged(depth + 1);
  for (std::size_t m = 0; m < model.skips.size(); ++m)
    bridged[model.skips[m].tap] = apply_stack(tape, model, model.skips[m].decoder, quantized[m + 1]);
  Var h = quantized[0];
  for (std::size_t l = depth; l >= 1; --l) {
    if (model.is_tap(l)) h = concat_channels(bridged[l], h);
    h = apply_layer(tape, model, model.decoder[l - 1], h);
  }
  return h;
}

template <class Model>
ForwardPass forward_impl(Model& model, Tape& tape, Var frame, QuantMode mode) {
  const Tensor& fv = frame.value();
  if (fv.rank() != 2 || fv.dim(0) != 1) {
    fail(ErrorCode::kShape, "model input must be [1 x T], got " + shape_string(fv.shape()));
  }
  ForwardPass pass;
  pass.bottlenecks = run_encoders(tape, model, frame);
  auto quantizers = model.quantizers();
  for (std::size_t c = 0; c < pass.bottlenecks.size(); ++c) {
    auto& q = *quantizers[c];
    Var code = pass.bottlenecks[c];
    switch (mode) {
      case QuantMode::kBypass:
      case QuantMode::kSoft: {
        Var centers = bind(tape, model, q.centers);
        SoftQuantized sq = soft_quantize(code, centers, q.effective_alpha());
        Var usage = column_mean(sq.assignments);
        pass.usage.push_back(usage);
        pass.entropies.push_back(entropy_bits(usage));
        pass.quantized.push_back(mode == QuantMode::kSoft ? sq.values : code);
        break;
      }
      case QuantMode::kHard: {
        const auto centers = q.centers.data();
        pass.codes.push_back(hard_assign(code.value().data(), centers));
        Tensor deq(code.shape(), hard_dequantize(pass.codes.back(), centers));
        pass.quantized.push_back(tape.constant(std::move(deq)));
        break;
      }
    }
  }
  pass.quantization_active = mode != QuantMode::kBypass;
  pass.reconstruction = run_decoders(tape, model, pass.quantized);
  return pass;
}

Tensor frame_tensor(std::span<const Real> frame) {
  return Tensor({1, frame.size()}, std::vector<Real>(frame.begin(), frame.end()));
}

}  // namespace

ForwardPass forward(HarpNetModel& model, Tape& tape, Var frame, QuantMode mode) {
  return forward_impl(model, tape, frame, mode);
}

ForwardPass forward(const HarpNetModel& model, Tape& tape, Var frame, QuantMode mode) {
  return forward_impl(model, tape, frame, mode);
}

ForwardPass forward_train(HarpNetModel& model, Tape& tape, Var frame) {
  return forward_impl(model, tape, frame, QuantMode::kSoft);
}

LayerCodes encode(const HarpNetModel& model, std::span<const Real> frame) {
  Tape tape;
  const std::vector<Var> codes = run_encoders(tape, model, tape.constant(frame_tensor(frame)));
  const auto quantizers = model.quantizers();
  LayerCodes out;
  for (std::size_t c = 0; c < codes.size(); ++c)
    out.push_back(hard_assign(codes[c].value().data(), quantizers[c]->centers.data()));
  return out;
}

std::vector<Real> decode(const HarpNetModel& model, const LayerCodes& codes) {
  if (codes.size() != model.code_layers()) {
    fail(ErrorCode::kModelMismatch, "stream carries " + std::to_string(codes.size()) + " code layers, model expects " +
                                        std::to_string(model.code_layers()));
  }
  const std::size_t length = codes[0].size();
  if (length == 0) fail(ErrorCode::kCorruptStream, "empty code layer");
  Tape tape;
  const auto quantizers = model.quantizers();
  std::vector<Var> quantized;
  for (std::size_t c = 0; c < codes.size(); ++c) {
    if (codes[c].size() != length) fail(ErrorCode::kModelMismatch, "code layers differ in length");
    quantized.push_back(tape.constant(Tensor({1, length}, hard_dequantize(codes[c], quantizers[c]->centers.data()))));
  }
  const Var out = run_decoders(tape, model, quantized);
  const auto data = out.value().data();
  return {data.begin(), data.end()};
}

}  // namespace harpnet
