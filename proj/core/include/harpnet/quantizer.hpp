#pragma once

// Soft-to-hard scalar quantization with learnable bin centers, entropy
// estimation and the entropy-targeting lambda controller.

#include <cstdint>
#include <span>
#include <vector>

#include "harpnet/tensor.hpp"

namespace harpnet {

using CodeIndex = std::uint16_t;

struct SoftQuantizer {
  Tensor centers;  // [J] learnable bin centers
  // Annealed hardness. The softmax logits are alpha * hardness_scale * S.
  Real alpha = 1;
  // Fixed unit of the similarity: 1 / (initial center spacing) for a uniform
  // grid, so alpha = 1 means neighbouring bins differ by one logit.
  Real hardness_scale = 1;

  std::size_t bins() const noexcept { return centers.numel(); }
  Real effective_alpha() const noexcept { return alpha * hardness_scale; }
  // ceil(log2 J)
  unsigned index_bits() const;

  // J centers evenly spaced over [lo, hi], hardness_scale = (J - 1) / (hi - lo).
  static SoftQuantizer uniform(std::size_t bins, Real lo = -1, Real hi = 1, Real alpha = 1);
};

// P = softmax(alpha * S), row-wise.
Var soft_assign(Var similarity_matrix, Real alpha);

struct SoftQuantized {
  Var values;       // x~ = P mu, reshaped to the input's shape
  Var assignments;  // P [N x J]
};

// Differentiable path: x~_i = sum_j P_ij mu_j with P = softmax(alpha * S(x, mu)).
SoftQuantized soft_quantize(Var x, Var centers, Real alpha);

// Argmax per row of S, ties to the lowest index.
std::vector<CodeIndex> hard_assign(const Tensor& similarity_matrix);
// Same decision computed directly from values and centers.
std::vector<CodeIndex> hard_assign(std::span<const Real> x, std::span<const Real> centers);

// x_bar_i = mu[index_i]. Throws kCorruptStream for an index >= J.
std::vector<Real> hard_dequantize(std::span<const CodeIndex> indices, std::span<const Real> centers);

struct EntropyEstimate {
  std::vector<Real> p;
  Real bits = 0;
};

Real entropy_of(std::span<const Real> p);
// p_j = mean over rows of P[:, j]; H = -sum p_j log2 p_j.
EntropyEstimate estimate_entropy(const Tensor& assignments);
// Empirical entropy of hard indices.
EntropyEstimate histogram_entropy(std::span<const CodeIndex> indices, std::size_t bins);
std::vector<std::uint64_t> histogram(std::span<const CodeIndex> indices, std::size_t bins);

// alpha += rate; returns the new alpha.
Real anneal(SoftQuantizer& quantizer, Real rate);

struct LambdaController {
  Real lambda = 0;
  Real target_entropy = 0;  // bits per sample, summed over code layers
  Real gain = Real(0.01);
  std::vector<Real> history;

  // lambda <- max(0, lambda + gain * (measured - target)).
  Real update(Real measured_entropy);
};

}  // namespace harpnet
