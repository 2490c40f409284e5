#include "harpnet/lpc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "harpnet/error.hpp"

namespace harpnet {

void FramingConfig::validate(std::size_t lpc_order) const {
  if (hop_size == 0) fail(ErrorCode::kInvalidArgument, "hop size must be at least 1");
  if (hop_size > frame_size) fail(ErrorCode::kInvalidArgument, "hop size exceeds frame size");
  if (frame_size < lpc_order + 1) fail(ErrorCode::kInvalidArgument, "frame size must exceed the LPC order");
  if (sample_rate == 0) fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
}

std::size_t frame_count(std::size_t length, const FramingConfig& cfg) {
  if (cfg.hop_size == 0) fail(ErrorCode::kInvalidArgument, "hop size must be at least 1");
  if (length <= cfg.frame_size) return 1;
  return (length - cfg.frame_size + cfg.hop_size - 1) / cfg.hop_size + 1;
}

std::vector<std::vector<Real>> frame_signal(std::span<const Real> signal, const FramingConfig& cfg) {
  cfg.validate();
  if (signal.empty()) fail(ErrorCode::kInvalidArgument, "cannot frame an empty signal");
  const std::size_t count = frame_count(signal.size(), cfg);
  std::vector<std::vector<Real>> frames(count, std::vector<Real>(cfg.frame_size, Real(0)));
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t start = f * cfg.hop_size;
    const std::size_t n = std::min(cfg.frame_size, signal.size() - start);
    std::copy_n(signal.begin() + static_cast<std::ptrdiff_t>(start), n, frames[f].begin());
  }
  return frames;
}

std::vector<Real> crossfade_window(std::size_t frame_size, std::size_t hop_size) {
  const std::size_t overlap = frame_size - std::min(hop_size, frame_size);
  std::vector<Real> w(frame_size, Real(1));
  if (overlap == 0) return w;
  const Real denom = static_cast<Real>(overlap + 1);
  for (std::size_t m = 0; m < frame_size; ++m) {
    const Real rise = static_cast<Real>(m + 1) / denom;
    const Real fall = static_cast<Real>(frame_size - m) / denom;
    w[m] = std::min({Real(1), rise, fall});
  }
  return w;
}

std::vector<Real> overlap_add(const std::vector<std::vector<Real>>& frames, const FramingConfig& cfg,
                              std::size_t length) {
  cfg.validate();
  const std::vector<Real> w = crossfade_window(cfg.frame_size, cfg.hop_size);
  const std::size_t span = frames.empty() ? 0 : (frames.size() - 1) * cfg.hop_size + cfg.frame_size;
  std::vector<Real> acc(std::max(span, length), Real(0));
  std::vector<Real> norm(acc.size(), Real(0));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() != cfg.frame_size) fail(ErrorCode::kShape, "overlap_add: frame has wrong length");
    const std::size_t start = f * cfg.hop_size;
    for (std::size_t m = 0; m < cfg.frame_size; ++m) {
      acc[start + m] += w[m] * frames[f][m];
      norm[start + m] += w[m];
    }
  }
  std::vector<Real> out(length, Real(0));
  for (std::size_t n = 0; n < length; ++n)
    if (norm[n] > 0) out[n] = acc[n] / norm[n];
  return out;
}

std::vector<Real> autocorrelation(std::span<const Real> frame, std::size_t order, AnalysisWindow window) {
  if (frame.size() <= order) fail(ErrorCode::kInvalidArgument, "autocorrelation: frame shorter than order + 1");
  std::vector<Real> x(frame.begin(), frame.end());
  if (window == AnalysisWindow::kHann && x.size() > 1) {
    const Real n = static_cast<Real>(x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] *= Real(0.5) - Real(0.5) * std::cos(2 * std::numbers::pi_v<Real> * static_cast<Real>(i) / n);
  }
  std::vector<Real> r(order + 1, Real(0));
  for (std::size_t lag = 0; lag <= order; ++lag) {
    Real s = 0;
    for (std::size_t i = lag; i < x.size(); ++i) s += x[i] * x[i - lag];
    r[lag] = s;
  }
  return r;
}

LevinsonResult levinson_durbin(std::span<const Real> r) {
  if (r.empty() || !(r[0] > 0)) fail(ErrorCode::kDegenerateFrame, "levinson_durbin: r[0] must be positive");
  const std::size_t p = r.size() - 1;
  LevinsonResult out;
  out.a.assign(p, Real(0));
  out.k.assign(p, Real(0));
  out.error = r[0];
  out.error_trace.push_back(out.error);
  std::vector<Real> prev(p, Real(0));
  for (std::size_t i = 1; i <= p; ++i) {
    if (!(out.error > 0)) {
      // Perfectly predicted so far: remaining stages contribute nothing.
      out.error_trace.push_back(out.error);
      continue;
    }
    Real acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc -= out.a[j - 1] * r[i - j];
    Real k = acc / out.error;
    k = std::clamp(k, Real(-1), Real(1));
    prev = out.a;
    out.a[i - 1] = k;
    for (std::size_t j = 1; j < i; ++j) out.a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
    out.k[i - 1] = k;
    out.error *= (Real(1) - k * k);
    out.error_trace.push_back(out.error);
  }
  return out;
}

std::vector<Real> lpc_analysis(std::span<const Real> frame, std::span<const Real> a) {
  std::vector<Real> e(frame.size());
  for (std::size_t n = 0; n < frame.size(); ++n) {
    Real pred = 0;
    const std::size_t taps = std::min(a.size(), n);
    for (std::size_t i = 1; i <= taps; ++i) pred += a[i - 1] * frame[n - i];
    e[n] = frame[n] - pred;
  }
  return e;
}

std::vector<Real> lpc_synthesis(std::span<const Real> residual, std::span<const Real> a) {
  lpc_to_reflection(a);  // stability check
  std::vector<Real> x(residual.size());
  for (std::size_t n = 0; n < residual.size(); ++n) {
    Real pred = 0;
    const std::size_t taps = std::min(a.size(), n);
    for (std::size_t i = 1; i <= taps; ++i) pred += a[i - 1] * x[n - i];
    x[n] = residual[n] + pred;
  }
  return x;
}

std::vector<Real> reflection_to_lpc(std::span<const Real> k) {
  const std::size_t p = k.size();
  std::vector<Real> a(p, Real(0)), prev(p, Real(0));
  for (std::size_t i = 1; i <= p; ++i) {
    prev = a;
    a[i - 1] = k[i - 1];
    for (std::size_t j = 1; j < i; ++j) a[j - 1] = prev[j - 1] - k[i - 1] * prev[i - j - 1];
  }
  return a;
}

std::vector<Real> lpc_to_reflection(std::span<const Real> a) {
  const std::size_t p = a.size();
  std::vector<Real> cur(a.begin(), a.end()), k(p, Real(0));
  for (std::size_t i = p; i >= 1; --i) {
    const Real ki = cur[i - 1];
    if (!(std::abs(ki) < 1)) {
      fail(ErrorCode::kUnstableFilter, "synthesis filter is unstable (|k_" + std::to_string(i) + "| >= 1)");
    }
    k[i - 1] = ki;
    const Real denom = Real(1) - ki * ki;
    std::vector<Real> next(i - 1);
    for (std::size_t j = 1; j < i; ++j) next[j - 1] = (cur[j - 1] + ki * cur[i - j - 1]) / denom;
    std::copy(next.begin(), next.end(), cur.begin());
  }
  return k;
}

Real reflection_step(unsigned bits) {
  if (bits == 0 || bits > 15) fail(ErrorCode::kInvalidArgument, "reflection quantizer needs 1..15 bits");
  return Real(2) / static_cast<Real>(1u << bits);
}

std::vector<std::uint16_t> quantize_reflection(std::span<const Real> k, unsigned bits) {
  const Real step = reflection_step(bits);
  const long top = static_cast<long>((1u << bits) - 1);
  std::vector<std::uint16_t> idx(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const long q = static_cast<long>(std::floor((k[i] + Real(1)) / step));
    idx[i] = static_cast<std::uint16_t>(std::clamp(q, 0L, top));
  }
  return idx;
}

std::vector<Real> dequantize_reflection(std::span<const std::uint16_t> indices, unsigned bits) {
  const Real step = reflection_step(bits);
  const std::uint32_t levels = 1u << bits;
  std::vector<Real> k(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= levels) fail(ErrorCode::kCorruptStream, "reflection index out of range");
    k[i] = Real(-1) + step * (static_cast<Real>(indices[i]) + Real(0.5));
  }
  return k;
}

std::vector<Real> scale_residual(std::span<const Real> residual, Real factor) {
  std::vector<Real> out(residual.begin(), residual.end());
  for (Real& v : out) v *= factor;
  return out;
}

std::vector<Real> unscale_residual(std::span<const Real> scaled, Real factor) {
  std::vector<Real> out(scaled.begin(), scaled.end());
  for (Real& v : out) v /= factor;
  return out;
}

void LpcConfig::validate() const {
  if (order < 2 || order > 32) fail(ErrorCode::kInvalidArgument, "LPC order must be in [2, 32]");
  reflection_step(bits_per_coeff);
  if (!(residual_scale > 0)) fail(ErrorCode::kInvalidArgument, "residual scale must be positive");
}

LpcFrame analyze_frame(std::span<const Real> frame, const LpcConfig& cfg) {
  LpcFrame out;
  out.scale = cfg.residual_scale;
  std::vector<Real> r = autocorrelation(frame, cfg.order, cfg.window);
  // Frames with negligible energy carry no useful spectral envelope.
  if (!(r[0] > Real(1e-20) * static_cast<Real>(frame.size()))) {
    out.degenerate = true;
    out.coeffs.assign(cfg.order, Real(0));
    out.reflection.assign(cfg.order, Real(0));
    out.residual = scale_residual(frame, cfg.residual_scale);
    return out;
  }
  // Slight white-noise correction keeps the recursion away from |k| = 1.
  r[0] *= Real(1) + Real(1e-9);
  const LevinsonResult lev = levinson_durbin(r);
  out.quantized_indices = quantize_reflection(lev.k, cfg.bits_per_coeff);
  out.reflection = dequantize_reflection(out.quantized_indices, cfg.bits_per_coeff);
  out.coeffs = reflection_to_lpc(out.reflection);
  out.residual = scale_residual(lpc_analysis(frame, out.coeffs), cfg.residual_scale);
  return out;
}

std::vector<Real> synthesize_frame(std::span<const std::uint16_t> indices, bool degenerate,
                                   std::span<const Real> scaled_residual, const LpcConfig& cfg) {
  const std::vector<Real> residual = unscale_residual(scaled_residual, cfg.residual_scale);
  if (degenerate) return residual;
  if (indices.size() != cfg.order) fail(ErrorCode::kCorruptStream, "LPC side info has the wrong order");
  const std::vector<Real> a = reflection_to_lpc(dequantize_reflection(indices, cfg.bits_per_coeff));
  return lpc_synthesis(residual, a);
}

}  // namespace harpnet
