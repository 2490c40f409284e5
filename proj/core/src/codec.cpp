#include "harpnet/codec.hpp"

#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "harpnet/error.hpp"
#include "harpnet/huffman.hpp"
#include "harpnet/lpc.hpp"

namespace harpnet {

std::vector<std::vector<Real>> residual_frames(std::span<const Real> signal, const ModelConfig& config) {
  std::vector<std::vector<Real>> frames = frame_signal(signal, config.framing);
  for (auto& f : frames) f = analyze_frame(f, config.lpc).residual;
  return frames;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

EncodedStream encode_signal(const HarpNetModel& model, std::span<const Real> signal, std::uint32_t sample_rate,
                            unsigned jobs) {
  const ModelConfig& cfg = model.config;
  if (model.codebooks.size() != model.code_layers())
    fail(ErrorCode::kConfig, "model has no fitted Huffman codebooks");
  if (sample_rate == 0) fail(ErrorCode::kInvalidArgument, "sample rate must be positive");

  EncodedStream out;
  StreamHeader& h = out.header;
  h.sample_rate = sample_rate;
  h.num_samples = signal.size();
  h.frame_size = static_cast<std::uint32_t>(cfg.framing.frame_size);
  h.hop_size = static_cast<std::uint32_t>(cfg.framing.hop_size);
  h.lpc_order = static_cast<std::uint16_t>(cfg.lpc.order);
  h.lpc_bits = static_cast<std::uint8_t>(cfg.lpc.bits_per_coeff);
  h.residual_scale = static_cast<double>(cfg.lpc.residual_scale);
  h.skip_aes = static_cast<std::uint8_t>(cfg.skip_aes);
  h.bins = static_cast<std::uint16_t>(cfg.bins);
  h.codebooks = model.codebooks;
  for (const SoftQuantizer* q : model.quantizers()) h.centers.emplace_back(q->centers.data().begin(), q->centers.data().end());

  std::vector<HuffmanCodebook> books;
  for (const auto& lengths : model.codebooks) books.push_back(HuffmanCodebook::from_lengths(lengths));

  const std::vector<std::vector<Real>> frames = frame_signal(signal, cfg.framing);
  out.frames.resize(frames.size());
  parallel_for(frames.size(), jobs, [&](std::size_t i) {
    const LpcFrame lpc = analyze_frame(frames[i], cfg.lpc);
    FrameRecord& rec = out.frames[i];
    rec.degenerate = lpc.degenerate;
    rec.lpc_indices = lpc.quantized_indices;
    const LayerCodes codes = encode(model, lpc.residual);
    for (std::size_t l = 0; l < codes.size(); ++l) rec.payloads.push_back(huffman_encode(codes[l], books[l]));
  });
  return out;
}

void check_compatible(const HarpNetModel& model, const StreamHeader& h) {
  const ModelConfig& cfg = model.config;
  auto mismatch = [](const std::string& what, auto stream, auto expected) {
    fail(ErrorCode::kModelMismatch, "stream " + what + " " + std::to_string(stream) + " does not match the model's " +
                                        std::to_string(expected));
  };
  if (h.skip_aes != cfg.skip_aes) mismatch("skip autoencoder count", h.skip_aes, cfg.skip_aes);
  if (h.bins != cfg.bins) mismatch("bin count", h.bins, cfg.bins);
  if (h.frame_size != cfg.framing.frame_size) mismatch("frame size", h.frame_size, cfg.framing.frame_size);
  if (h.hop_size != cfg.framing.hop_size) mismatch("hop size", h.hop_size, cfg.framing.hop_size);
  if (h.lpc_order != cfg.lpc.order) mismatch("LPC order", h.lpc_order, cfg.lpc.order);
  if (h.lpc_bits != cfg.lpc.bits_per_coeff) mismatch("LPC bits", h.lpc_bits, cfg.lpc.bits_per_coeff);
  if (h.residual_scale != static_cast<double>(cfg.lpc.residual_scale))
    mismatch("residual scale", h.residual_scale, static_cast<double>(cfg.lpc.residual_scale));
  const auto quantizers = model.quantizers();
  for (std::size_t l = 0; l < quantizers.size(); ++l) {
    const auto c = quantizers[l]->centers.data();
    for (std::size_t j = 0; j < c.size(); ++j)
      if (h.centers.at(l).at(j) != static_cast<double>(c[j]))
        fail(ErrorCode::kModelMismatch, "stream bin centers of code layer " + std::to_string(l) +
                                            " differ from the model; it was encoded with another model");
  }
}

std::vector<Real> decode_signal(const HarpNetModel& model, const EncodedStream& stream, unsigned jobs) {
  const StreamHeader& h = stream.header;
  check_compatible(model, h);
  const FramingConfig framing{h.frame_size, h.hop_size, h.sample_rate};
  const std::size_t expected = frame_count(h.num_samples, framing);
  if (stream.frames.size() != expected) {
    fail(ErrorCode::kCorruptStream, "stream holds " + std::to_string(stream.frames.size()) + " frames, " +
                                        std::to_string(h.num_samples) + " samples need " + std::to_string(expected));
  }
  LpcConfig lpc = model.config.lpc;
  std::vector<HuffmanCodebook> books;
  for (const auto& lengths : h.codebooks) books.push_back(HuffmanCodebook::from_lengths(lengths));

  std::vector<std::vector<Real>> frames(stream.frames.size());
  parallel_for(frames.size(), jobs, [&](std::size_t i) {
    const FrameRecord& rec = stream.frames[i];
    if (rec.payloads.size() != books.size()) fail(ErrorCode::kCorruptStream, "frame payload count mismatch");
    LayerCodes codes;
    for (std::size_t l = 0; l < books.size(); ++l) codes.push_back(huffman_decode(rec.payloads[l], books[l], h.frame_size));
    const std::vector<Real> residual = decode(model, codes);
    frames[i] = synthesize_frame(rec.lpc_indices, rec.degenerate, residual, lpc);
  });
  return overlap_add(frames, framing, h.num_samples);
}

}  // namespace harpnet
