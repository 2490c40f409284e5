#include <algorithm>
#include <cmath>
#include <numeric>

#include "harpnet/error.hpp"
#include "harpnet/tensor.hpp"

namespace harpnet {

GradCheckResult compare_gradients(std::span<Real> values, std::span<const Real> analytic,
                                  const LossProbe& loss, Real eps, std::span<const std::size_t> coords) {
  if (values.size() != analytic.size()) {
    fail(ErrorCode::kShape, "compare_gradients: value and gradient buffers differ in length");
  }
  if (!(eps > 0)) fail(ErrorCode::kInvalidArgument, "compare_gradients: eps must be positive");

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(values.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }

  std::vector<std::uint8_t> base_sig, sig;
  const Real floor = std::max(kGradFloor, kGradLossFloor * std::abs(loss(&base_sig)));

  GradCheckResult result;
  for (std::size_t i : coords) {
    if (i >= values.size()) fail(ErrorCode::kInvalidArgument, "compare_gradients: coordinate out of range");
    const Real saved = values[i];
    values[i] = saved + eps;
    const Real plus = loss(&sig);
    bool smooth = sig == base_sig;
    values[i] = saved - eps;
    const Real minus = loss(&sig);
    smooth = smooth && sig == base_sig;
    values[i] = saved;
    if (!smooth) {
      ++result.skipped;
      continue;
    }
    const Real numeric = (plus - minus) / (Real(2) * eps);
    const Real scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const Real err = std::abs(analytic[i] - numeric) / scale;
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.checked;
  }
  return result;
}

GradCheckResult finite_diff_check(const ScalarGraphFn& f, const Tensor& point, Real eps,
                                  std::span<const std::size_t> coords) {
  Tensor x = point;
  x.zero_grad();
  {
    Tape tape;
    Var loss = f(tape, x);
    tape.backward(loss);
  }
  const std::vector<Real> analytic(x.grad().begin(), x.grad().end());

  const LossProbe probe = [&](std::vector<std::uint8_t>* signature) {
    Tape tape;
    Var loss = f(tape, x);
    if (signature != nullptr) *signature = tape.kink_signature();
    return loss.value().item();
  };
  return compare_gradients(x.data(), analytic, probe, eps, coords);
}

}  // namespace harpnet
