// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "harpnet/codec.hpp"
#include "harpnet/error.hpp"
#include "harpnet/huffman.hpp"
#include "harpnet/lpc.hpp"
#include "harpnet/model.hpp"
#include "harpnet/quantizer.hpp"
#include "harpnet/random.hpp"
#include "harpnet/stream.hpp"
#include "harpnet/synthetic.hpp"
#include "harpnet/training.hpp"
#include "harpnet/wav.hpp"

using namespace harpnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(lo, hi));
  return t;
}

// ---- shared toy experiment -----------------------------------------------------

constexpr std::uint32_t kRate = 16000;
constexpr double kTarget = 2.0;

ModelConfig toy_model(std::size_t m, std::uint64_t seed) {
  ModelConfig c;
  c.encoder_layers = 6;
  c.filters = 8;
  c.kernel_size = 9;
  c.skip_aes = m;
  c.skip_filters = 8;
  c.skip_hidden_layers = 3;
  c.seed = seed;
  return c;
}

TrainConfig toy_train(double target, std::uint64_t seed) {
  TrainConfig t;
  t.warmup_epochs = 8;
  t.total_epochs = 60;
  t.anneal_rate = 0.3;
  t.target_entropy = static_cast<Real>(target);
  t.lambda_gain = 60;
  t.learning_rate = 1e-3;
  t.batch_size = 4;
  t.frames_per_epoch = 32;
  t.seed = seed;
  return t;
}

struct Data {
  std::vector<std::vector<Real>> train_frames;
  std::vector<std::vector<Real>> test_clips;
};

const Data& data() {
  static const Data d = [] {
    Data out;
    for (const auto& clip : synthetic_set(24, kRate, kRate, 7))
      for (auto& f : residual_frames(clip, toy_model(0, 1))) out.train_frames.push_back(std::move(f));
    out.test_clips = synthetic_set(6, kRate, kRate, 99);
    return out;
  }();
  return d;
}

struct Run {
  HarpNetModel model;
  TrainReport report;
  std::size_t params = 0;
  double test_snr = 0;
  double total_kbps = 0;
  std::vector<Real> final_soft;  // per layer, full training set
  std::vector<Real> final_hard;
};

// Entropy of the mean soft assignment over every training frame.
std::vector<Real> soft_entropies(const HarpNetModel& model, const std::vector<std::vector<Real>>& frames) {
  std::vector<std::vector<double>> usage(model.code_layers(), std::vector<double>(model.config.bins, 0.0));
  for (const auto& f : frames) {
    Tape tape;
    const ForwardPass pass = forward(model, tape, tape.constant(Tensor({1, f.size()}, f)), QuantMode::kSoft);
    for (std::size_t l = 0; l < usage.size(); ++l) {
      const auto p = pass.usage[l].value().data();
      for (std::size_t j = 0; j < p.size(); ++j) usage[l][j] += p[j];
    }
  }
  std::vector<Real> out;
  for (const auto& u : usage) {
    std::vector<Real> p(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) p[j] = static_cast<Real>(u[j] / static_cast<double>(frames.size()));
    out.push_back(entropy_of(p));
  }
  return out;
}

Run train_run(const ModelConfig& mc, const TrainConfig& tc) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r{build_model(mc), {}, 0, 0, 0, {}, {}};
  r.params = count_params(r.model);
  r.report = train(r.model, data().train_frames, tc);
  fit_codebooks(r.model, data().train_frames);
  r.test_snr = evaluate_snr(r.model, data().test_clips, kRate).mean;
  std::uint64_t bits = 0;
  double seconds = 0;
  for (const auto& clip : data().test_clips) {
    bits += 8 * write_stream(encode_signal(r.model, clip, kRate)).size();
    seconds += static_cast<double>(clip.size()) / kRate;
  }
  r.total_kbps = static_cast<double>(bits) / seconds / 1000.0;
  r.final_soft = soft_entropies(r.model, data().train_frames);
  r.final_hard = hard_entropies(r.model, data().train_frames);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "  trained M=" << mc.skip_aes << " L=" << mc.encoder_layers << " F=" << mc.filters << " seed " << tc.seed
            << " target " << tc.target_entropy << ": snr " << r.test_snr << " dB, " << r.total_kbps << " kbps, "
            << secs << " s\n";
  return r;
}

// Every trained model, keyed by a description; the criteria share runs.
std::map<std::string, Run>& runs() {
  static std::map<std::string, Run> r;
  return r;
}

const Run& harp_run(std::uint64_t seed) {
  const std::string key = "harp M=2 seed " + std::to_string(seed);
  auto it = runs().find(key);
  if (it == runs().end()) it = runs().emplace(key, train_run(toy_model(2, seed), toy_train(kTarget, seed))).first;
  return it->second;
}

const Run& baseline_run(std::uint64_t seed) {
  const std::string key = "baseline seed " + std::to_string(seed);
  auto it = runs().find(key);
  if (it == runs().end()) {
    const ModelConfig ref = toy_model(2, seed);
    it = runs().emplace(key, train_run(baseline_config(count_params(ref), ref), toy_train(kTarget, seed))).first;
  }
  return it->second;
}

const Run& scaling_run(std::size_t m) {
  if (m == 2) return harp_run(1);
  const std::string key = "scaling M=" + std::to_string(m);
  auto it = runs().find(key);
  if (it == runs().end()) {
    const double target = kTarget / 3.0 * static_cast<double>(m + 1);
    it = runs().emplace(key, train_run(toy_model(m, 1), toy_train(target, 1))).first;
  }
  return it->second;
}

// ---- criteria ------------------------------------------------------------------

Outcome gradient_correctness() {
  constexpr int kPoints = 20;
  double worst = 0;
  std::size_t checked = 0, skipped = 0;
  auto note = [&](const GradCheckResult& r) {
    worst = std::max(worst, static_cast<double>(r.max_relative_error));
    checked += r.checked;
    skipped += r.skipped;
  };
  for (int point = 0; point < kPoints; ++point) {
    Rng rng(1000 + static_cast<std::uint64_t>(point));
    const Tensor x = random_tensor({2, 11}, rng);
    const Tensor w = random_tensor({3, 2, 5}, rng);
    const Tensor b = random_tensor({3}, rng);
    const Tensor mu = random_tensor({7}, rng);
    const Tensor logits = random_tensor({4, 7}, rng, -2, 2);
    const Tensor pos = random_tensor({7}, rng, 0.05, 1);
    const Tensor target3 = random_tensor({3, 11}, rng);
    const Tensor target2 = random_tensor({2, 11}, rng);
    const Tensor target4 = random_tensor({4, 11}, rng);
    const Tensor vec4 = random_tensor({4}, rng);
    const Real alpha = static_cast<Real>(rng.uniform(0.5, 6));
    auto sse = [](Var v, const Tensor& t) { return sum_squared_error(v, v.tape->constant(t)); };
    const std::vector<std::pair<ScalarGraphFn, const Tensor*>> ops = {
        {[&](Tape& t, Tensor& p) { return sse(conv1d_same(t.param(p), t.constant(w), t.constant(b)), target3); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(conv1d_same(t.constant(x), t.param(p), t.constant(b)), target3); }, &w},
        {[&](Tape& t, Tensor& p) { return sse(conv1d_same(t.constant(x), t.constant(w), t.param(p)), target3); }, &b},
        {[&](Tape& t, Tensor& p) { return sse(tanh_act(t.param(p)), target2); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(leaky_relu(t.param(p), 0.2), target2); }, &x},
        {[&](Tape& t, Tensor& p) { return sum(matvec(softmax_rows(t.param(p)), t.constant(mu))); }, &logits},
        {[&](Tape& t, Tensor& p) { return sum(matvec(softmax_rows(similarity(t.param(p), t.constant(mu))), t.constant(mu))); }, &x},
        {[&](Tape& t, Tensor& p) { return sum(matvec(softmax_rows(similarity(t.constant(x), t.param(p))), t.constant(mu))); }, &mu},
        {[&](Tape& t, Tensor& p) { return sse(scale(t.param(p), -1.7), target2); }, &x},
        {[&](Tape& t, Tensor& p) { return sum(matvec(t.param(p), t.constant(mu))); }, &logits},
        {[&](Tape& t, Tensor& p) { return sse(column_mean(t.param(p)), mu); }, &logits},
        {[&](Tape& t, Tensor& p) { return sse(add(t.param(p), tanh_act(t.param(p))), target2); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(t.param(p), target2); }, &x},
        {[&](Tape& t, Tensor& p) { return entropy_bits(t.param(p)); }, &pos},
        {[&](Tape& t, Tensor& p) { return sse(concat_channels(t.param(p), tanh_act(t.param(p))), target4); }, &x},
        {[&](Tape& t, Tensor& p) { return sum(matvec(reshape(t.param(p), {11, 2}), t.constant(Tensor({2}, {0.3, -1.2})))); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(soft_quantize(t.param(p), t.constant(mu), alpha).values, target2); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(soft_quantize(t.constant(x), t.param(p), alpha).values, target2); }, &mu},
        {[&](Tape& t, Tensor& p) { return entropy_bits(column_mean(soft_quantize(t.param(p), t.constant(mu), alpha).assignments)); }, &x},
        {[&](Tape& t, Tensor& p) { return sse(matvec(t.constant(logits), t.param(p)), vec4); }, &mu},
    };
    for (const auto& [fn, at] : ops) note(finite_diff_check(fn, *at, 1e-6));

    // Full training loss of a small HARP-Net (M = 2) on a 64-sample frame.
    ModelConfig mc;
    mc.encoder_layers = 4;
    mc.filters = 3;
    mc.kernel_size = 5;
    mc.skip_aes = 2;
    mc.skip_filters = 2;
    mc.skip_hidden_layers = 2;
    mc.bins = 8;
    mc.framing = {64, 32, kRate};
    mc.lpc.order = 4;
    mc.seed = 50 + static_cast<std::uint64_t>(point);
    HarpNetModel model = build_model(mc);
    for (SoftQuantizer* q : model.quantizers()) q->alpha = alpha / 4;
    const Tensor frame = random_tensor({1, 64}, rng, -2, 2);
    const Real lambda = static_cast<Real>(rng.uniform(0.1, 1));
    auto loss = [&](std::vector<std::uint8_t>* sig) {
      Tape tape;
      Var xv = tape.constant(frame);
      ForwardPass pass = forward(model, tape, xv, QuantMode::kSoft);
      Var l = composite_loss(xv, pass.reconstruction, pass.entropies, lambda);
      if (sig != nullptr) *sig = tape.kink_signature();
      return l.value().item();
    };
    {
      Tape tape;
      Var xv = tape.constant(frame);
      ForwardPass pass = forward(model, tape, xv, QuantMode::kSoft);
      tape.backward(composite_loss(xv, pass.reconstruction, pass.entropies, lambda));
    }
    for (Tensor* p : model.parameters()) {
      const std::vector<Real> analytic(p->grad().begin(), p->grad().end());
      std::vector<std::size_t> coords;
      for (int i = 0; i < 3; ++i) coords.push_back(rng.below(p->numel()));
      note(compare_gradients(p->data(), analytic, loss, 1e-6, coords));
    }
  }
  return {worst < 1e-4 && checked > 0,
          fmt("max relative error %.2e over %zu coordinates (%zu kink-crossing skipped), 20 ops + full loss at %d points",
              worst, checked, skipped, kPoints)};
}

Outcome quantizer_limit() {
  const SoftQuantizer q = SoftQuantizer::uniform(32);
  const auto mu = q.centers.data();
  Rng rng(2);
  std::vector<Real> xs;
  while (xs.size() < 10000) {
    const Real x = std::tanh(static_cast<Real>(2 * rng.normal()));
    bool near_mid = false;
    for (std::size_t j = 0; j + 1 < mu.size(); ++j) near_mid |= std::abs(x - (mu[j] + mu[j + 1]) / 2) < 1e-3;
    if (!near_mid) xs.push_back(x);
  }
  Tape tape;
  const Real alpha = 1e4;
  const auto soft = soft_quantize(tape.constant(Tensor::vector(xs)), tape.constant(q.centers), alpha * q.hardness_scale)
                        .values.value();
  const auto hard = hard_dequantize(hard_assign(xs, mu), mu);
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(double(soft[i]) - hard[i]));
  return {worst < 1e-4, fmt("max |soft - hard| = %.3e on 10000 tanh-bounded scalars, alpha = 1e4", worst)};
}

Outcome entropy_accounting() {
  const Tensor uniform({5, 32}, Real(1) / 32);
  const Real h = estimate_entropy(uniform).bits;
  bool ok = h == Real(5);
  double worst = 0;
  std::size_t records = 0;
  for (const auto& [name, run] : runs()) {
    for (const auto& e : run.report.epochs)
      for (Real v : e.hard_entropy) {
        worst = std::max(worst, double(v));
        ++records;
      }
    for (Real v : run.final_hard) {
      worst = std::max(worst, double(v));
      ++records;
    }
  }
  ok = ok && records > 0 && worst <= 5.0;
  return {ok, fmt("uniform J=32 entropy = %.15g bits; max hard entropy %.4f bits over %zu trained-layer measurements",
                  double(h), worst, records)};
}

Outcome huffman() {
  Rng rng(4);
  bool ok = true;
  std::size_t round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> f(n);
    for (double& v : f) v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    f[rng.below(n)] += 0.1;
    const HuffmanCodebook cb = build_codebook(f);
    std::vector<CodeIndex> seq(rng.below(300));
    for (auto& s : seq) s = static_cast<CodeIndex>(rng.below(n));
    const BitBuffer bits = huffman_encode(seq, cb);
    round_trips += huffman_decode(bits, cb, seq.size()) == seq;
  }
  ok = ok && round_trips == 1000;
  std::size_t within = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> p(2 + rng.below(62));
    double total = 0;
    for (double& v : p) total += v = std::pow(rng.uniform(), 2.0) + 1e-4;
    double h = 0;
    for (double& v : p) {
      v /= total;
      h -= v * std::log2(v);
    }
    const double len = build_codebook(p).expected_length(p);
    within += len >= h - 1e-12 && len < h + 1;
  }
  ok = ok && within == 100;
  const std::vector<double> dyadic{0.5, 0.25, 0.125, 0.125};
  const double l = build_codebook(dyadic).expected_length(dyadic);
  ok = ok && l == 1.75;
  return {ok, fmt("%zu/1000 round trips, %zu/100 distributions in [H, H+1), dyadic length %.17g", round_trips, within, l)};
}

// Dense Gaussian elimination with partial pivoting.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

Outcome lpc_inversion() {
  Rng rng(5);
  double worst_rms = 0;
  for (int i = 0; i < 50; ++i) {
    const auto clip = synthetic_clip(static_cast<SyntheticKind>(i % 3), 1024, kRate, 500 + static_cast<std::uint64_t>(i));
    const std::size_t order = 1 + rng.below(20);
    const auto lev = levinson_durbin(autocorrelation(clip, order));
    const auto back = lpc_synthesis(lpc_analysis(clip, lev.a), lev.a);
    double s = 0;
    for (std::size_t n = 0; n < clip.size(); ++n) s += (double(clip[n]) - back[n]) * (double(clip[n]) - back[n]);
    worst_rms = std::max(worst_rms, std::sqrt(s / static_cast<double>(clip.size())));
  }
  double worst_coeff = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t p = 1 + rng.below(10);
    std::vector<Real> x(64 + rng.below(200));
    for (Real& v : x) v = static_cast<Real>(rng.normal());
    const auto r = autocorrelation(x, p);
    std::vector<std::vector<double>> a(p, std::vector<double>(p));
    std::vector<double> rhs(p);
    for (std::size_t row = 0; row < p; ++row) {
      for (std::size_t col = 0; col < p; ++col) a[row][col] = r[row > col ? row - col : col - row];
      rhs[row] = r[row + 1];
    }
    const auto dense = dense_solve(a, rhs);
    const auto lev = levinson_durbin(r);
    for (std::size_t k = 0; k < p; ++k) worst_coeff = std::max(worst_coeff, std::abs(dense[k] - double(lev.a[k])));
  }
  return {worst_rms < 1e-9 && worst_coeff < 1e-8,
          fmt("reconstruction RMS %.2e over 50 frames; Levinson vs dense solve max diff %.2e over 200 cases", worst_rms,
              worst_coeff)};
}

Outcome bitrate_control() {
  const Run& r = harp_run(1);
  const double soft = std::accumulate(r.final_soft.begin(), r.final_soft.end(), 0.0);
  const double hard = std::accumulate(r.final_hard.begin(), r.final_hard.end(), 0.0);
  const double last_epoch = r.report.epochs.back().total_soft_entropy();
  return {std::abs(soft - kTarget) <= 0.25,
          fmt("target %.2f, measured soft entropy %.3f bits/sample over the training set (last epoch %.3f, hard %.3f)",
              kTarget, soft, last_epoch, hard)};
}

Outcome harp_vs_baseline() {
  std::ostringstream detail;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Run& h = harp_run(seed);
    const Run& b = baseline_run(seed);
    wins += h.test_snr > b.test_snr;
    detail << (seed == 1 ? "" : "; ") << "seed " << seed << fmt(" %.2f vs %.2f dB", h.test_snr, b.test_snr);
  }
  const Run& h = harp_run(1);
  const Run& b = baseline_run(1);
  return {wins >= 4, fmt("HARP-Net M=2 (%zu params) beats baseline (%zu params) in %d/5 seeds: ", h.params, b.params,
                         wins) +
                         detail.str()};
}

Outcome scalability() {
  std::vector<double> kbps;
  std::ostringstream detail;
  for (std::size_t m = 0; m <= 3; ++m) {
    kbps.push_back(scaling_run(m).total_kbps);
    detail << (m == 0 ? "" : ", ") << "M=" << m << fmt(" %.2f", kbps.back());
  }
  const bool ok = std::is_sorted(kbps.begin(), kbps.end());
  return {ok, "total kbps at 2/3 bit per code layer: " + detail.str()};
}

Outcome param_accounting() {
  ModelConfig full;
  full.skip_aes = 3;
  const std::size_t total = count_params(full);
  const HarpNetModel m = build_model(full);
  std::size_t main = 0, skips = 0, centers = 0;
  for (const auto& l : m.encoder) main += l.param_count();
  for (const auto& l : m.decoder) main += l.param_count();
  for (const auto& s : m.skips) {
    for (const auto& l : s.encoder) skips += l.param_count();
    for (const auto& l : s.decoder) skips += l.param_count();
  }
  for (const SoftQuantizer* q : m.quantizers()) centers += q->bins();
  const std::size_t layer = conv_param_count(24, 24, 15);
  const double dev = (static_cast<double>(total) - 298000.0) / 298000.0;
  return {std::abs(dev) <= 0.15 && layer == 8664 && main + skips + centers == total,
          fmt("M=3 full scale: %zu params (%+.1f%% vs 298k) = main path %zu + skip AEs %zu + centers %zu; "
              "24->24 K=15 layer = %zu",
              total, 100 * dev, main, skips, centers, layer)};
}

Outcome determinism() {
  ModelConfig mc;
  mc.encoder_layers = 3;
  mc.filters = 4;
  mc.kernel_size = 5;
  mc.skip_aes = 1;
  mc.skip_filters = 2;
  mc.skip_hidden_layers = 1;
  mc.bins = 16;
  mc.framing = {256, 128, kRate};
  mc.lpc.order = 8;
  TrainConfig tc;
  tc.warmup_epochs = 2;
  tc.total_epochs = 5;
  tc.lambda_gain = 5;
  tc.learning_rate = 1e-3;
  std::vector<std::vector<Real>> frames;
  for (const auto& clip : synthetic_set(3, 4000, kRate, 3))
    for (auto& f : residual_frames(clip, mc)) frames.push_back(std::move(f));
  auto trained = [&] {
    HarpNetModel m = build_model(mc);
    train(m, frames, tc);
    fit_codebooks(m, frames);
    return m;
  };
  const HarpNetModel a = trained(), b = trained();
  const bool same_model = serialize_model(a) == serialize_model(b);
  const auto clip = synthetic_clip(SyntheticKind::kSines, 5000, kRate, 77);
  const auto s1 = write_stream(encode_signal(a, clip, kRate, 1));
  const auto s2 = write_stream(encode_signal(a, clip, kRate, 4));
  const auto w1 = serialize_wav(decode_signal(a, read_stream(s1), 1), kRate, WavSubtype::kFloat32);
  const auto w2 = serialize_wav(decode_signal(a, read_stream(s2), 4), kRate, WavSubtype::kFloat32);
  return {same_model && s1 == s2 && w1 == w2,
          fmt("model files %s (%zu bytes), streams %s (%zu bytes), decoded WAVs %s", same_model ? "identical" : "DIFFER",
              serialize_model(a).size(), s1 == s2 ? "identical" : "DIFFER", s1.size(), w1 == w2 ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Training-based criteria run before entropy accounting, which audits
  // every trained model.
  const std::vector<Criterion> order = {
      {1, "gradient correctness", gradient_correctness},
      {2, "quantizer hard limit", quantizer_limit},
      {4, "Huffman optimality and losslessness", huffman},
      {5, "LPC inversion", lpc_inversion},
      {6, "bitrate control", bitrate_control},
      {7, "HARP-Net vs parameter-matched baseline", harp_vs_baseline},
      {8, "bitrate scales with M", scalability},
      {3, "entropy accounting", entropy_accounting},
      {9, "parameter accounting", param_accounting},
      {10, "end-to-end determinism", determinism},
  };
  std::map<int, std::string> lines;
  int failures = 0;
  for (const auto& c : order) {
    std::cerr << "[" << c.id << "] " << c.name << "...\n";
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    lines[c.id] = fmt("%s [%2d] %s: ", o.pass ? "PASS" : "FAIL", c.id, c.name) + o.detail + fmt(" (%.1f s)", secs);
    std::cerr << lines[c.id] << '\n';
  }
  std::cout << "\n";
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  std::cout << (10 - failures) << "/10 criteria passed\n";
  return failures == 0 ? 0 : 1;
}
