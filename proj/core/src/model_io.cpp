#include <string>
#include <zlib.h>

#include "harpnet/bytes.hpp"
#include "harpnet/model.hpp"
#include "harpnet/wav.hpp"

namespace harpnet {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

constexpr std::uint32_t kModelVersion = 1;

void put_tensor(ByteWriter& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (Real v : t.data()) w.f64(static_cast<double>(v));
}

void get_tensor(ByteReader& r, Tensor& t) {
  const std::uint32_t rank = r.u32();
  Shape shape(rank);
  for (auto& d : shape) d = r.u32();
  if (shape != t.shape()) {
    fail(ErrorCode::kCorruptStream, "model tensor shape " + shape_string(shape) + " does not match the configured " +
                                        shape_string(t.shape()));
  }
  for (Real& v : t.data()) v = static_cast<Real>(r.f64());
}

void put_config(ByteWriter& w, const ModelConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.encoder_layers));
  w.u32(static_cast<std::uint32_t>(c.skip_aes));
  w.u32(static_cast<std::uint32_t>(c.filters));
  w.u32(static_cast<std::uint32_t>(c.skip_filters));
  w.u32(static_cast<std::uint32_t>(c.skip_hidden_layers));
  w.u32(static_cast<std::uint32_t>(c.kernel_size));
  w.u32(static_cast<std::uint32_t>(c.bins));
  w.f64(static_cast<double>(c.leaky_slope));
  w.f64(static_cast<double>(c.alpha_init));
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.framing.frame_size));
  w.u32(static_cast<std::uint32_t>(c.framing.hop_size));
  w.u32(c.framing.sample_rate);
  w.u32(static_cast<std::uint32_t>(c.lpc.order));
  w.u32(c.lpc.bits_per_coeff);
  w.f64(static_cast<double>(c.lpc.residual_scale));
  w.u8(static_cast<std::uint8_t>(c.lpc.window));
}

ModelConfig get_config(ByteReader& r) {
  ModelConfig c;
  c.encoder_layers = r.u32();
  c.skip_aes = r.u32();
  c.filters = r.u32();
  c.skip_filters = r.u32();
  c.skip_hidden_layers = r.u32();
  c.kernel_size = r.u32();
  c.bins = r.u32();
  c.leaky_slope = static_cast<Real>(r.f64());
  c.alpha_init = static_cast<Real>(r.f64());
  c.seed = r.u64();
  c.framing.frame_size = r.u32();
  c.framing.hop_size = r.u32();
  c.framing.sample_rate = r.u32();
  c.lpc.order = r.u32();
  c.lpc.bits_per_coeff = r.u32();
  c.lpc.residual_scale = static_cast<Real>(r.f64());
  const std::uint8_t window = r.u8();
  if (window > 1) fail(ErrorCode::kCorruptStream, "unknown analysis window");
  c.lpc.window = static_cast<AnalysisWindow>(window);
  return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const HarpNetModel& model) {
  ByteWriter w;
  w.tag("HARP");
  w.u32(kModelVersion);
  put_config(w, model.config);
  for (const Tensor* t : model.parameters()) put_tensor(w, *t);
  for (const SoftQuantizer* q : model.quantizers()) {
    w.f64(static_cast<double>(q->alpha));
    w.f64(static_cast<double>(q->hardness_scale));
  }
  w.u32(static_cast<std::uint32_t>(model.codebooks.size()));
  for (const auto& lengths : model.codebooks) {
    w.u32(static_cast<std::uint32_t>(lengths.size()));
    w.bytes(lengths);
  }
  const std::uint32_t crc = crc32(std::span(w.buffer()).subspan(4));
  w.u32(crc);
  return w.take();
}

HarpNetModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) fail(ErrorCode::kCorruptStream, "model file is truncated");
  ByteReader r(bytes);
  if (!r.tag("HARP")) fail(ErrorCode::kBadMagic, "not a HARP model file");
  const std::size_t body_end = bytes.size() - 4;
  ByteReader crc_reader(bytes.subspan(body_end));
  if (crc32(bytes.subspan(4, body_end - 4)) != crc_reader.u32()) {
    fail(ErrorCode::kChecksumMismatch, "model file checksum mismatch");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    fail(ErrorCode::kVersionMismatch, "model file version " + std::to_string(version) + " is not supported");
  }
  HarpNetModel model = build_model(get_config(r));
  for (Tensor* t : model.parameters()) get_tensor(r, *t);
  for (SoftQuantizer* q : model.quantizers()) {
    q->alpha = static_cast<Real>(r.f64());
    q->hardness_scale = static_cast<Real>(r.f64());
  }
  const std::uint32_t books = r.u32();
  if (books != 0 && books != model.code_layers()) fail(ErrorCode::kCorruptStream, "codebook count mismatch");
  for (std::uint32_t b = 0; b < books; ++b) {
    const std::uint32_t n = r.u32();
    if (n != model.config.bins + 1) fail(ErrorCode::kCorruptStream, "codebook size mismatch");
    const auto lengths = r.bytes(n);
    model.codebooks.emplace_back(lengths.begin(), lengths.end());
  }
  if (r.position() != body_end) fail(ErrorCode::kCorruptStream, "trailing bytes in model file");
  return model;
}

void save_model(const HarpNetModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

HarpNetModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file_bytes(path)); }

}  // namespace harpnet
