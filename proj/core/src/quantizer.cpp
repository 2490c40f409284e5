#include "harpnet/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "harpnet/error.hpp"

namespace harpnet {

unsigned SoftQuantizer::index_bits() const {
  unsigned bits = 0;
  while ((std::size_t{1} << bits) < bins()) ++bits;
  return bits;
}

SoftQuantizer SoftQuantizer::uniform(std::size_t bins, Real lo, Real hi, Real alpha) {
  if (bins < 2) fail(ErrorCode::kInvalidArgument, "a quantizer needs at least two bins");
  if (!(hi > lo)) fail(ErrorCode::kInvalidArgument, "quantizer range is empty");
  if (!(alpha > 0)) fail(ErrorCode::kInvalidArgument, "alpha must be positive");
  SoftQuantizer q;
  q.centers = Tensor({bins});
  const Real step = (hi - lo) / static_cast<Real>(bins - 1);
  for (std::size_t j = 0; j < bins; ++j) q.centers[j] = lo + step * static_cast<Real>(j);
  q.alpha = alpha;
  q.hardness_scale = Real(1) / step;
  return q;
}

Var soft_assign(Var similarity_matrix, Real alpha) {
  if (!(alpha > 0)) fail(ErrorCode::kInvalidArgument, "soft_assign: alpha must be positive");
  return softmax_rows(scale(similarity_matrix, alpha));
}

SoftQuantized soft_quantize(Var x, Var centers, Real alpha) {
  Var p = soft_assign(similarity(x, centers), alpha);
  Var mixed = matvec(p, centers);
  return SoftQuantized{reshape(mixed, x.shape()), p};
}

std::vector<CodeIndex> hard_assign(const Tensor& similarity_matrix) {
  if (similarity_matrix.rank() != 2) fail(ErrorCode::kShape, "hard_assign: expected [N x J]");
  const std::size_t rows = similarity_matrix.dim(0), cols = similarity_matrix.dim(1);
  std::vector<CodeIndex> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const Real* row = similarity_matrix.data().data() + i * cols;
    std::size_t best = 0;
    for (std::size_t j = 1; j < cols; ++j)
      if (row[j] > row[best]) best = j;
    out[i] = static_cast<CodeIndex>(best);
  }
  return out;
}

std::vector<CodeIndex> hard_assign(std::span<const Real> x, std::span<const Real> centers) {
  if (centers.empty()) fail(ErrorCode::kInvalidArgument, "hard_assign: no centers");
  std::vector<CodeIndex> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t best = 0;
    Real best_s = -std::abs(x[i] - centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
      const Real s = -std::abs(x[i] - centers[j]);
      if (s > best_s) {
        best_s = s;
        best = j;
      }
    }
    out[i] = static_cast<CodeIndex>(best);
  }
  return out;
}

std::vector<Real> hard_dequantize(std::span<const CodeIndex> indices, std::span<const Real> centers) {
  std::vector<Real> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= centers.size()) {
      fail(ErrorCode::kCorruptStream, "code index " + std::to_string(indices[i]) + " outside codebook of " +
                                          std::to_string(centers.size()) + " bins");
    }
    out[i] = centers[indices[i]];
  }
  return out;
}

Real entropy_of(std::span<const Real> p) {
  Real h = 0;
  for (Real v : p)
    if (v > 0) h -= v * std::log2(v);
  return h;
}

EntropyEstimate estimate_entropy(const Tensor& assignments) {
  if (assignments.rank() != 2 || assignments.dim(0) == 0) {
    fail(ErrorCode::kShape, "estimate_entropy: expected non-empty [N x J]");
  }
  const std::size_t rows = assignments.dim(0), cols = assignments.dim(1);
  EntropyEstimate est;
  est.p.assign(cols, Real(0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) est.p[j] += assignments.data()[i * cols + j];
  for (Real& v : est.p) v /= static_cast<Real>(rows);
  est.bits = entropy_of(est.p);
  return est;
}

std::vector<std::uint64_t> histogram(std::span<const CodeIndex> indices, std::size_t bins) {
  std::vector<std::uint64_t> counts(bins, 0);
  for (CodeIndex i : indices) {
    if (i >= bins) fail(ErrorCode::kCorruptStream, "histogram: index out of range");
    ++counts[i];
  }
  return counts;
}

EntropyEstimate histogram_entropy(std::span<const CodeIndex> indices, std::size_t bins) {
  EntropyEstimate est;
  est.p.assign(bins, Real(0));
  if (indices.empty()) return est;
  const auto counts = histogram(indices, bins);
  for (std::size_t j = 0; j < bins; ++j) est.p[j] = static_cast<Real>(counts[j]) / static_cast<Real>(indices.size());
  est.bits = entropy_of(est.p);
  return est;
}

Real anneal(SoftQuantizer& quantizer, Real rate) {
  quantizer.alpha += rate;
  return quantizer.alpha;
}

Real LambdaController::update(Real measured_entropy) {
  history.push_back(measured_entropy);
  lambda = std::max(Real(0), lambda + gain * (measured_entropy - target_entropy));
  return lambda;
}

}  // namespace harpnet
