#pragma once

// Two-stage training: a quantizer-free warmup, then soft-to-hard
// quantization with per-epoch alpha annealing and an entropy controller
// that steers lambda toward the target total entropy.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "harpnet/model.hpp"

namespace harpnet {

struct TrainConfig {
  std::size_t warmup_epochs = 8;
  std::size_t total_epochs = 60;
  Real anneal_rate = Real(0.3);
  Real target_entropy = 2;  // bits per sample, summed over code layers
  Real lambda_init = 0;
  Real lambda_gain = Real(0.01);
  std::size_t batch_size = 4;
  Real learning_rate = Real(1e-4);
  std::uint64_t seed = 1;
  std::size_t frames_per_epoch = 0;  // 0 = every training frame

  // Throws kConfig for inconsistent settings.
  void validate(std::size_t code_layers, std::size_t bins) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  bool quantized = false;
  Real loss = 0;             // mean batch loss
  Real sse = 0;              // mean per-frame squared error
  // Per code layer, code order. Soft: entropy of the epoch-mean soft
  // assignment. Hard: entropy of the epoch histogram of hard indices.
  std::vector<Real> soft_entropy;
  std::vector<Real> hard_entropy;
  Real lambda = 0;           // value used during the epoch
  Real alpha = 0;            // main quantizer hardness used during the epoch
  Real validation_snr = 0;   // dB, hard quantization, residual domain; 0 without validation data

  Real total_soft_entropy() const;
  Real total_hard_entropy() const;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;

  // Aligned text table for humans.
  void write_table(std::ostream& out) const;
  // Tab-separated rows with a header line, for plotting.
  void write_tsv(std::ostream& out) const;
  bool operator==(const TrainReport&) const = default;
};

class Adam {
 public:
  explicit Adam(Real learning_rate, Real beta1 = Real(0.9), Real beta2 = Real(0.999), Real eps = Real(1e-8));
  // Applies one update from each tensor's grad, then clears the grads.
  void step(std::span<Tensor* const> params);

 private:
  Real lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

// SSE(x, x_hat) + lambda * sum of entropies.
Var composite_loss(Var x, Var x_hat, std::span<const Var> entropies, Real lambda);

using EpochCallback = std::function<void(const EpochRecord&)>;

// `frames` are scaled LPC residual frames of the model's frame size.
// Deterministic for a fixed config and seed. Throws kMissingData for an
// empty dataset and kDivergence when the loss stops being finite.
TrainReport train(HarpNetModel& model, const std::vector<std::vector<Real>>& frames, const TrainConfig& cfg,
                  const std::vector<std::vector<Real>>& validation = {}, const EpochCallback& on_epoch = {});

// Builds the deployment Huffman codebooks from hard-assignment histograms.
void fit_codebooks(HarpNetModel& model, const std::vector<std::vector<Real>>& frames);

// Hard-assignment histogram entropy per code layer over `frames`.
std::vector<Real> hard_entropies(const HarpNetModel& model, const std::vector<std::vector<Real>>& frames);

inline constexpr double kSnrCap = 99.0;

// 10 log10(sum x^2 / sum (x - x_hat)^2), capped at kSnrCap. Throws
// kInvalidArgument for mismatched lengths or a silent reference.
double snr_db(std::span<const Real> reference, std::span<const Real> estimate);

struct SnrSummary {
  std::vector<double> per_clip;  // NaN for skipped silent clips
  double mean = 0;
  std::size_t skipped = 0;
};

// Mean SNR over clips, each coded through the full pipeline (LPC, hard
// quantization, Huffman, stream round trip). Silent clips are skipped with
// a warning on stderr.
SnrSummary evaluate_snr(const HarpNetModel& model, const std::vector<std::vector<Real>>& clips,
                        std::uint32_t sample_rate, unsigned jobs = 1);

}  // namespace harpnet
