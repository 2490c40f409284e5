#pragma once

// LPC front-end: framing with cross-faded overlap-add, autocorrelation,
// Levinson-Durbin, analysis/synthesis filters, reflection-coefficient
// quantization and residual scaling.

#include <cstdint>
#include <span>
#include <vector>

#include "harpnet/tensor.hpp"

namespace harpnet {

struct FramingConfig {
  std::size_t frame_size = 1024;
  std::size_t hop_size = 512;
  std::uint32_t sample_rate = 16000;

  // Throws kInvalidArgument unless 1 <= hop <= frame and frame > lpc_order.
  void validate(std::size_t lpc_order = 0) const;
};

// Number of frames needed to cover `length` samples (at least one).
std::size_t frame_count(std::size_t length, const FramingConfig& cfg);

// Frames of cfg.frame_size taken every cfg.hop_size samples; the tail is
// zero padded.
std::vector<std::vector<Real>> frame_signal(std::span<const Real> signal, const FramingConfig& cfg);

// Trapezoidal cross-fade window: linear ramps over the overlap region.
std::vector<Real> crossfade_window(std::size_t frame_size, std::size_t hop_size);

// Weighted overlap-add normalized by the summed window, truncated to
// `length` samples. Unprocessed frames reconstruct the signal exactly.
std::vector<Real> overlap_add(const std::vector<std::vector<Real>>& frames, const FramingConfig& cfg,
                              std::size_t length);

enum class AnalysisWindow : std::uint8_t { kRectangular, kHann };

// r[tau] = sum_n x[n] x[n - tau] for tau = 0..order.
std::vector<Real> autocorrelation(std::span<const Real> frame, std::size_t order,
                                  AnalysisWindow window = AnalysisWindow::kRectangular);

struct LevinsonResult {
  std::vector<Real> a;  // prediction coefficients a[1..p], stored 0-based
  std::vector<Real> k;  // reflection coefficients
  Real error = 0;       // final prediction error power
  std::vector<Real> error_trace;  // error after each recursion step, starting with r[0]
};

// Solves the Toeplitz normal equations. Throws kDegenerateFrame if r[0] <= 0.
LevinsonResult levinson_durbin(std::span<const Real> r);

// e[n] = x[n] - sum_i a_i x[n - i] with zero initial state.
std::vector<Real> lpc_analysis(std::span<const Real> frame, std::span<const Real> a);

// x[n] = e[n] + sum_i a_i x[n - i] with zero initial state. Throws
// kUnstableFilter when `a` has a reflection coefficient with |k| >= 1.
std::vector<Real> lpc_synthesis(std::span<const Real> residual, std::span<const Real> a);

std::vector<Real> reflection_to_lpc(std::span<const Real> k);
// Step-down recursion. Throws kUnstableFilter if any |k| >= 1.
std::vector<Real> lpc_to_reflection(std::span<const Real> a);

// Uniform scalar quantizer over (-1, 1) with 2^bits bins; dequantized values
// are bin centers and therefore strictly inside (-1, 1).
std::vector<std::uint16_t> quantize_reflection(std::span<const Real> k, unsigned bits);
std::vector<Real> dequantize_reflection(std::span<const std::uint16_t> indices, unsigned bits);
Real reflection_step(unsigned bits);

std::vector<Real> scale_residual(std::span<const Real> residual, Real factor = 100);
std::vector<Real> unscale_residual(std::span<const Real> scaled, Real factor = 100);

struct LpcConfig {
  std::size_t order = 16;
  unsigned bits_per_coeff = 6;
  Real residual_scale = 100;
  AnalysisWindow window = AnalysisWindow::kRectangular;

  void validate() const;
};

struct LpcFrame {
  std::vector<Real> coeffs;      // dequantized prediction coefficients used by both filters
  std::vector<Real> reflection;  // dequantized reflection coefficients
  std::vector<std::uint16_t> quantized_indices;
  std::vector<Real> residual;    // scaled residual
  Real scale = 100;
  bool degenerate = false;       // silent frame coded as a = 0 passthrough
};

// Full per-frame analysis: estimate, quantize, filter with the quantized
// coefficients and scale, so the decoder inverts the filter exactly.
LpcFrame analyze_frame(std::span<const Real> frame, const LpcConfig& cfg);

// Inverse of analyze_frame given side info and a (possibly lossy) scaled residual.
std::vector<Real> synthesize_frame(std::span<const std::uint16_t> indices, bool degenerate,
                                   std::span<const Real> scaled_residual, const LpcConfig& cfg);

}  // namespace harpnet
