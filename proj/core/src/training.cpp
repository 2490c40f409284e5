#include "harpnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "harpnet/codec.hpp"
#include "harpnet/error.hpp"
#include "harpnet/huffman.hpp"
#include "harpnet/random.hpp"

namespace harpnet {

void TrainConfig::validate(std::size_t code_layers, std::size_t bins) const {
  if (total_epochs == 0) fail(ErrorCode::kConfig, "total_epochs must be positive");
  if (warmup_epochs >= total_epochs) fail(ErrorCode::kConfig, "warmup_epochs must be below total_epochs");
  const Real ceiling = static_cast<Real>(code_layers) * std::log2(static_cast<Real>(bins));
  if (!(target_entropy > 0) || target_entropy > ceiling) {
    std::ostringstream msg;
    msg << "target_entropy must lie in (0, " << ceiling << "] bits for " << code_layers << " code layers";
    fail(ErrorCode::kConfig, msg.str());
  }
  if (!(anneal_rate >= 0)) fail(ErrorCode::kConfig, "anneal_rate must be non-negative");
  if (!(lambda_init >= 0) || !(lambda_gain >= 0)) fail(ErrorCode::kConfig, "lambda settings must be non-negative");
  if (batch_size == 0) fail(ErrorCode::kConfig, "batch_size must be positive");
  if (!(learning_rate > 0)) fail(ErrorCode::kConfig, "learning_rate must be positive");
}

Real EpochRecord::total_soft_entropy() const { return std::accumulate(soft_entropy.begin(), soft_entropy.end(), Real(0)); }
Real EpochRecord::total_hard_entropy() const { return std::accumulate(hard_entropy.begin(), hard_entropy.end(), Real(0)); }

void TrainReport::write_table(std::ostream& out) const {
  out << std::setw(5) << "epoch" << std::setw(7) << "quant" << std::setw(14) << "loss" << std::setw(14) << "sse"
      << std::setw(10) << "H_soft" << std::setw(10) << "H_hard" << std::setw(12) << "lambda" << std::setw(8) << "alpha"
      << std::setw(10) << "val_snr" << '\n';
  out << std::fixed;
  for (const EpochRecord& e : epochs) {
    out << std::setw(5) << e.epoch << std::setw(7) << (e.quantized ? "yes" : "no") << std::setprecision(4)
        << std::setw(14) << e.loss << std::setw(14) << e.sse << std::setw(10) << e.total_soft_entropy()
        << std::setw(10) << e.total_hard_entropy() << std::setprecision(5) << std::setw(12) << e.lambda
        << std::setprecision(2) << std::setw(8) << e.alpha << std::setw(10) << e.validation_snr << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void TrainReport::write_tsv(std::ostream& out) const {
  const std::size_t layers = epochs.empty() ? 0 : epochs.front().soft_entropy.size();
  out << "epoch\tquantized\tloss\tsse\tlambda\talpha\tval_snr_db\tH_soft_total\tH_hard_total";
  for (std::size_t l = 0; l < layers; ++l) out << "\tH_soft_" << l << "\tH_hard_" << l;
  out << '\n' << std::setprecision(17);
  for (const EpochRecord& e : epochs) {
    out << e.epoch << '\t' << int{e.quantized} << '\t' << e.loss << '\t' << e.sse << '\t' << e.lambda << '\t' << e.alpha
        << '\t' << e.validation_snr << '\t' << e.total_soft_entropy() << '\t' << e.total_hard_entropy();
    for (std::size_t l = 0; l < layers; ++l) out << '\t' << e.soft_entropy[l] << '\t' << e.hard_entropy[l];
    out << '\n';
  }
}

Adam::Adam(Real learning_rate, Real beta1, Real beta2, Real eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<Tensor* const> params) {
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->numel(), Real(0));
      v_.emplace_back(p->numel(), Real(0));
    }
  }
  if (m_.size() != params.size()) fail(ErrorCode::kInvalidArgument, "Adam: parameter list changed between steps");
  ++t_;
  const Real c1 = Real(1) - std::pow(beta1_, static_cast<Real>(t_));
  const Real c2 = Real(1) - std::pow(beta2_, static_cast<Real>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    auto data = p.data();
    const auto grad = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = beta1_ * m[j] + (1 - beta1_) * grad[j];
      v[j] = beta2_ * v[j] + (1 - beta2_) * grad[j] * grad[j];
      data[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
    p.zero_grad();
  }
}

Var composite_loss(Var x, Var x_hat, std::span<const Var> entropies, Real lambda) {
  Var loss = sum_squared_error(x_hat, x);
  if (entropies.empty() || lambda == 0) return loss;
  Var total = entropies[0];
  for (std::size_t i = 1; i < entropies.size(); ++i) total = add(total, entropies[i]);
  return add(loss, scale(total, lambda));
}

namespace {

Tensor row(const std::vector<Real>& frame) { return Tensor({1, frame.size()}, frame); }

Real residual_snr(const HarpNetModel& model, const std::vector<std::vector<Real>>& frames) {
  double signal = 0, noise = 0;
  for (const auto& f : frames) {
    const auto y = decode(model, encode(model, f));
    for (std::size_t i = 0; i < f.size(); ++i) {
      signal += double(f[i]) * f[i];
      noise += (double(f[i]) - y[i]) * (double(f[i]) - y[i]);
    }
  }
  if (signal <= 0) return 0;
  if (noise <= 0) return static_cast<Real>(kSnrCap);
  return static_cast<Real>(std::min(kSnrCap, 10.0 * std::log10(signal / noise)));
}

}  // namespace

TrainReport train(HarpNetModel& model, const std::vector<std::vector<Real>>& frames, const TrainConfig& cfg,
                  const std::vector<std::vector<Real>>& validation, const EpochCallback& on_epoch) {
  if (frames.empty()) fail(ErrorCode::kMissingData, "training set is empty");
  const std::size_t frame_size = model.config.framing.frame_size;
  for (const auto& f : frames)
    if (f.size() != frame_size) fail(ErrorCode::kShape, "training frame length differs from the model frame size");
  const std::size_t layers = model.code_layers();
  const std::size_t bins = model.config.bins;
  cfg.validate(layers, bins);

  Rng rng(cfg.seed);
  Adam opt(cfg.learning_rate);
  LambdaController ctrl;
  ctrl.lambda = cfg.lambda_init;
  ctrl.target_entropy = cfg.target_entropy;
  ctrl.gain = cfg.lambda_gain;
  for (SoftQuantizer* q : model.quantizers()) q->alpha = model.config.alpha_init;
  std::vector<Tensor*> params = model.parameters();
  for (Tensor* p : params) p->zero_grad();

  std::vector<std::size_t> order(frames.size());
  TrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.total_epochs; ++epoch) {
    const bool quantized = epoch >= cfg.warmup_epochs;
    const Real lambda = quantized ? ctrl.lambda : Real(0);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::size_t count = cfg.frames_per_epoch == 0 ? frames.size() : std::min(cfg.frames_per_epoch, frames.size());

    EpochRecord rec;
    rec.epoch = epoch;
    rec.quantized = quantized;
    rec.lambda = lambda;
    rec.alpha = model.main_quantizer.alpha;
    std::vector<std::vector<double>> epoch_usage(layers, std::vector<double>(bins, 0.0));
    std::vector<std::vector<std::uint64_t>> counts(layers, std::vector<std::uint64_t>(bins, 0));
    std::size_t batches = 0;
    double loss_total = 0, sse_total = 0;

    for (std::size_t start = 0; start < count; start += cfg.batch_size) {
      const std::size_t end = std::min(count, start + cfg.batch_size);
      const Real inv_batch = Real(1) / static_cast<Real>(end - start);
      Tape tape;
      Var sse;
      std::vector<Var> usage(layers);
      for (std::size_t i = start; i < end; ++i) {
        Var x = tape.constant(row(frames[order[i]]));
        ForwardPass pass = forward(model, tape, x, quantized ? QuantMode::kSoft : QuantMode::kBypass);
        Var err = sum_squared_error(pass.reconstruction, x);
        sse = i == start ? err : add(sse, err);
        for (std::size_t l = 0; l < layers; ++l) {
          usage[l] = i == start ? pass.usage[l] : add(usage[l], pass.usage[l]);
          const auto codes = hard_assign(pass.bottlenecks[l].value().data(), model.quantizers()[l]->centers.data());
          for (CodeIndex c : codes) ++counts[l][c];
        }
      }
      Var loss = scale(sse, inv_batch);
      std::vector<Var> entropies;
      for (std::size_t l = 0; l < layers; ++l) {
        Var p = scale(usage[l], inv_batch);
        entropies.push_back(entropy_bits(p));
        const auto pv = p.value().data();
        for (std::size_t j = 0; j < bins; ++j) epoch_usage[l][j] += pv[j] * static_cast<double>(end - start);
      }
      if (lambda > 0) {
        Var h = entropies[0];
        for (std::size_t l = 1; l < layers; ++l) h = add(h, entropies[l]);
        loss = add(loss, scale(h, lambda));
      }
      const Real value = loss.value().item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "loss became " << value << " at epoch " << epoch << ", batch " << batches << " (lambda " << lambda
            << ", alpha " << model.main_quantizer.alpha << ", learning rate " << cfg.learning_rate << ")";
        fail(ErrorCode::kDivergence, msg.str());
      }
      tape.backward(loss);
      opt.step(params);
      loss_total += value;
      sse_total += tape.value(sse.id).item() * inv_batch;
      ++batches;
    }

    rec.loss = static_cast<Real>(loss_total / static_cast<double>(batches));
    rec.sse = static_cast<Real>(sse_total / static_cast<double>(batches));
    for (std::size_t l = 0; l < layers; ++l) {
      std::vector<Real> p(bins);
      for (std::size_t j = 0; j < bins; ++j) p[j] = static_cast<Real>(epoch_usage[l][j] / static_cast<double>(count));
      rec.soft_entropy.push_back(entropy_of(p));
      std::uint64_t n = std::accumulate(counts[l].begin(), counts[l].end(), std::uint64_t{0});
      for (std::size_t j = 0; j < bins; ++j) p[j] = static_cast<Real>(counts[l][j]) / static_cast<Real>(n);
      rec.hard_entropy.push_back(entropy_of(p));
    }
    if (!validation.empty()) rec.validation_snr = residual_snr(model, validation);

    if (quantized) {
      ctrl.update(rec.total_soft_entropy());
      for (SoftQuantizer* q : model.quantizers()) anneal(*q, cfg.anneal_rate);
    }
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(report.epochs.back());
  }
  return report;
}

void fit_codebooks(HarpNetModel& model, const std::vector<std::vector<Real>>& frames) {
  if (frames.empty()) fail(ErrorCode::kMissingData, "no frames to fit codebooks on");
  const std::size_t layers = model.code_layers();
  std::vector<std::vector<std::uint64_t>> counts(layers, std::vector<std::uint64_t>(model.config.bins, 0));
  for (const auto& f : frames) {
    const LayerCodes codes = encode(model, f);
    for (std::size_t l = 0; l < layers; ++l)
      for (CodeIndex c : codes[l]) ++counts[l][c];
  }
  model.codebooks.clear();
  for (const auto& c : counts) model.codebooks.push_back(build_codebook(c).lengths());
}

std::vector<Real> hard_entropies(const HarpNetModel& model, const std::vector<std::vector<Real>>& frames) {
  const std::size_t layers = model.code_layers();
  std::vector<std::vector<CodeIndex>> all(layers);
  for (const auto& f : frames) {
    const LayerCodes codes = encode(model, f);
    for (std::size_t l = 0; l < layers; ++l) all[l].insert(all[l].end(), codes[l].begin(), codes[l].end());
  }
  std::vector<Real> out;
  for (const auto& a : all) out.push_back(histogram_entropy(a, model.config.bins).bits);
  return out;
}

double snr_db(std::span<const Real> reference, std::span<const Real> estimate) {
  if (reference.size() != estimate.size()) fail(ErrorCode::kInvalidArgument, "SNR inputs differ in length");
  double signal = 0, noise = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = double(reference[i]) - double(estimate[i]);
    signal += double(reference[i]) * double(reference[i]);
    noise += d * d;
  }
  if (!(signal > 0)) fail(ErrorCode::kInvalidArgument, "reference signal is silent");
  if (!(noise > 0)) return kSnrCap;
  return std::min(kSnrCap, 10.0 * std::log10(signal / noise));
}

SnrSummary evaluate_snr(const HarpNetModel& model, const std::vector<std::vector<Real>>& clips,
                        std::uint32_t sample_rate, unsigned jobs) {
  SnrSummary out;
  double total = 0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const auto& clip = clips[c];
    const bool silent = std::all_of(clip.begin(), clip.end(), [](Real v) { return v == 0; });
    if (silent) {
      std::cerr << "warning: clip " << c << " is silent; skipped\n";
      out.per_clip.push_back(std::numeric_limits<double>::quiet_NaN());
      ++out.skipped;
      continue;
    }
    const auto bytes = write_stream(encode_signal(model, clip, sample_rate, jobs));
    const auto decoded = decode_signal(model, read_stream(bytes), jobs);
    const double snr = snr_db(clip, decoded);
    out.per_clip.push_back(snr);
    total += snr;
    ++used;
  }
  out.mean = used == 0 ? 0.0 : total / static_cast<double>(used);
  return out;
}

}  // namespace harpnet
