#include "harpnet/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "harpnet/random.hpp"

namespace harpnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNoiseFloor = 1e-3;

std::vector<Real> sines(Rng& rng, std::size_t n, double rate) {
  std::vector<double> x(n, 0.0);
  const std::size_t partials = 2 + rng.below(3);
  for (std::size_t p = 0; p < partials; ++p) {
    const double f = rng.uniform(80.0, 2000.0);
    const double amp = rng.uniform(0.05, 0.25);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double trem = rng.uniform(0.5, 4.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double s = static_cast<double>(t) / rate;
      x[t] += amp * (0.8 + 0.2 * std::sin(kTwoPi * trem * s)) * std::sin(kTwoPi * f * s + phase);
    }
  }
  return {x.begin(), x.end()};
}

std::vector<Real> saw_sweep(Rng& rng, std::size_t n, double rate) {
  const double f0 = rng.uniform(60.0, 300.0);
  const double f1 = rng.uniform(300.0, 1200.0);
  const double amp = rng.uniform(0.1, 0.3);
  std::vector<Real> x(n);
  double phase = rng.uniform();
  for (std::size_t t = 0; t < n; ++t) {
    const double frac = n > 1 ? static_cast<double>(t) / static_cast<double>(n - 1) : 0.0;
    const double f = f0 * std::pow(f1 / f0, frac);
    x[t] = static_cast<Real>(amp * (2.0 * phase - 1.0));
    phase += f / rate;
    phase -= std::floor(phase);
  }
  return x;
}

std::vector<Real> filtered_noise(Rng& rng, std::size_t n, double rate) {
  // Two-pole resonator driven by white noise.
  const double fc = rng.uniform(200.0, 3000.0);
  const double radius = rng.uniform(0.9, 0.99);
  const double a1 = 2.0 * radius * std::cos(kTwoPi * fc / rate);
  const double a2 = -radius * radius;
  std::vector<double> y(n);
  double y1 = 0, y2 = 0, energy = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double v = rng.normal() + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = v;
    y[t] = v;
    energy += v * v;
  }
  const double rms = std::sqrt(energy / static_cast<double>(std::max<std::size_t>(n, 1)));
  const double gain = rms > 0 ? rng.uniform(0.05, 0.2) / rms : 0.0;
  std::vector<Real> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = static_cast<Real>(gain * y[t]);
  return x;
}

}  // namespace

std::vector<Real> synthetic_clip(SyntheticKind kind, std::size_t samples, std::uint32_t sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  const double rate = sample_rate;
  std::vector<Real> x;
  switch (kind) {
    case SyntheticKind::kSines: x = sines(rng, samples, rate); break;
    case SyntheticKind::kSawSweep: x = saw_sweep(rng, samples, rate); break;
    case SyntheticKind::kFilteredNoise: x = filtered_noise(rng, samples, rate); break;
  }
  for (Real& v : x) v += static_cast<Real>(kNoiseFloor * rng.normal());
  return x;
}

std::vector<std::vector<Real>> synthetic_set(std::size_t clips, std::size_t samples, std::uint32_t sample_rate,
                                             std::uint64_t seed) {
  std::vector<std::vector<Real>> out;
  for (std::size_t i = 0; i < clips; ++i) {
    const auto kind = static_cast<SyntheticKind>(i % 3);
    out.push_back(synthetic_clip(kind, samples, sample_rate, seed * 0x9E3779B97F4A7C15ull + i));
  }
  return out;
}

}  // namespace harpnet
