#pragma once

// The mirrored convolutional autoencoder with skip autoencoders bridging
// encoder/decoder layer pairs. M = 0 is the plain baseline autoencoder.
//
// Layer numbering follows the encoder: encoder layer l maps x^(l-1) to
// x^(l), l = 1..L, and x^(L) is the main bottleneck. Decoder layer l maps
// x_bar^(l) back to x_bar^(l-1). Skip autoencoder m (1-based) taps x^(L-m)
// and its reconstruction is concatenated onto the input of decoder layer L-m.
// Code layers are ordered z^(L), z^(L-1), ..., z^(L-M).

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "harpnet/lpc.hpp"
#include "harpnet/quantizer.hpp"
#include "harpnet/tensor.hpp"

namespace harpnet {

enum class Activation : std::uint8_t { kLinear, kTanh, kLeakyRelu };

struct LayerSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 15;
  Activation activation = Activation::kLinear;
};

struct ConvLayer {
  LayerSpec spec;
  Tensor weight;  // [out x in x K]
  Tensor bias;    // [out]

  std::size_t param_count() const { return weight.numel() + bias.numel(); }
};

// Closed-form parameter count of one layer: K * in * out + out.
std::size_t conv_param_count(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size);

struct SkipAutoencoder {
  std::size_t tap = 0;              // encoder layer whose output is compressed
  std::vector<ConvLayer> encoder;   // hidden convs, then a tanh channel collapse
  std::vector<ConvLayer> decoder;   // mirror, linear output with the tap's channels
  SoftQuantizer quantizer;
};

struct ModelConfig {
  std::size_t encoder_layers = 6;  // L; the decoder mirrors it
  std::size_t filters = 24;
  std::size_t kernel_size = 15;
  std::size_t skip_aes = 0;        // M
  std::size_t skip_filters = 24;
  std::size_t skip_hidden_layers = 3;
  std::size_t bins = 32;           // J
  Real leaky_slope = Real(0.2);
  Real alpha_init = 1;
  std::uint64_t seed = 1;

  // Codec geometry travelling with the weights.
  FramingConfig framing{1024, 512, 16000};
  LpcConfig lpc;

  void validate() const;
};

class HarpNetModel {
 public:
  ModelConfig config;
  std::vector<ConvLayer> encoder;   // encoder[l - 1] is layer l
  std::vector<ConvLayer> decoder;   // decoder[l - 1] is layer l (runs L..1)
  std::vector<SkipAutoencoder> skips;  // skips[m - 1] taps layer L - m
  SoftQuantizer main_quantizer;
  // Canonical Huffman code lengths per code layer (J symbols + escape);
  // empty until fitted.
  std::vector<std::vector<std::uint8_t>> codebooks;

  std::size_t code_layers() const noexcept { return skips.size() + 1; }
  // Quantizer of each code layer in code order.
  std::vector<SoftQuantizer*> quantizers();
  std::vector<const SoftQuantizer*> quantizers() const;
  // Every trainable tensor: conv weights and biases, then all bin centers.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  // True when decoder layer l concatenates a skip reconstruction.
  bool is_tap(std::size_t layer) const noexcept;
};

// Builds the model with fan-in scaled uniform weights, zero biases and
// uniform-grid bin centers over [-1, 1]. Throws kInvalidArgument when
// M > L - 1.
HarpNetModel build_model(const ModelConfig& config);

// Conv weights, biases and quantizer centers.
std::size_t count_params(const HarpNetModel& model);
std::size_t count_params(const ModelConfig& config);

// Skip-free model whose encoder depth and width are searched so its
// parameter count lands within `tolerance` of `budget`, preferring counts at
// or above the budget. Other settings are copied from `reference`.
ModelConfig baseline_config(std::size_t budget, const ModelConfig& reference, Real tolerance = Real(0.03));
HarpNetModel build_baseline(std::size_t budget, const ModelConfig& reference, Real tolerance = Real(0.03));

enum class QuantMode : std::uint8_t {
  kBypass,  // identity at every bottleneck (warmup)
  kSoft,    // soft-to-hard relaxation
  kHard,    // nearest-center indices
};

// Hard indices per code layer, code order.
using LayerCodes = std::vector<std::vector<CodeIndex>>;

struct ForwardPass {
  Var reconstruction;              // [1 x T]
  std::vector<Var> bottlenecks;    // tanh codes before quantization, code order
  std::vector<Var> quantized;      // what the decoders consumed
  std::vector<Var> usage;          // per-layer mean soft assignment p [J]
  std::vector<Var> entropies;      // per-layer soft entropy of this frame, bits
  LayerCodes codes;                // filled in hard mode
  bool quantization_active = false;
};

// Training-graph forward pass; parameters are bound on the tape so that
// backward() populates their gradients. `frame` must be [1 x T].
ForwardPass forward(HarpNetModel& model, Tape& tape, Var frame, QuantMode mode);
// Same computation with the weights as constants.
ForwardPass forward(const HarpNetModel& model, Tape& tape, Var frame, QuantMode mode);

// Soft forward pass; returns the reconstruction and the per-layer soft
// entropies of this frame.
ForwardPass forward_train(HarpNetModel& model, Tape& tape, Var frame);

LayerCodes encode(const HarpNetModel& model, std::span<const Real> frame);
// Throws kModelMismatch for the wrong number of code layers or lengths and
// kCorruptStream for an index outside the codebook.
std::vector<Real> decode(const HarpNetModel& model, const LayerCodes& codes);

// ---- model file ------------------------------------------------------------

std::vector<std::uint8_t> serialize_model(const HarpNetModel& model);
HarpNetModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const HarpNetModel& model, const std::filesystem::path& path);
HarpNetModel load_model(const std::filesystem::path& path);

}  // namespace harpnet
