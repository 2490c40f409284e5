#include "harpnet/stream.hpp"

#include <string>

#include "harpnet/bytes.hpp"
#include "harpnet/error.hpp"

namespace harpnet {

namespace {

constexpr std::uint8_t kFlagDegenerate = 0x01;

void check_layout(const EncodedStream& s) {
  const StreamHeader& h = s.header;
  if (h.codebooks.size() != h.code_layers() || h.centers.size() != h.code_layers())
    fail(ErrorCode::kInvalidArgument, "header needs one codebook and one center table per code layer");
  for (const auto& cb : h.codebooks)
    if (cb.size() != std::size_t{h.bins} + 1) fail(ErrorCode::kInvalidArgument, "codebook size must be J + 1");
  for (const auto& c : h.centers)
    if (c.size() != h.bins) fail(ErrorCode::kInvalidArgument, "center table size must be J");
  const std::uint32_t limit = 1u << h.lpc_bits;
  for (const FrameRecord& f : s.frames) {
    if (f.payloads.size() != h.code_layers()) fail(ErrorCode::kInvalidArgument, "frame has the wrong number of payloads");
    if (!f.degenerate) {
      if (f.lpc_indices.size() != h.lpc_order) fail(ErrorCode::kInvalidArgument, "frame has the wrong LPC order");
      for (std::uint16_t i : f.lpc_indices)
        if (i >= limit) fail(ErrorCode::kInvalidArgument, "LPC index exceeds its bit width");
    }
    for (const BitBuffer& p : f.payloads)
      if (p.bytes.size() != (p.bit_count + 7) / 8) fail(ErrorCode::kInvalidArgument, "payload byte count disagrees with its bit count");
  }
}

}  // namespace

std::size_t lpc_side_bytes(std::size_t order, unsigned bits) { return (order * bits + 7) / 8; }

std::vector<std::uint8_t> write_stream(const EncodedStream& stream) {
  check_layout(stream);
  const StreamHeader& h = stream.header;
  ByteWriter w;
  w.tag("HRPS");
  w.u16(h.version);
  w.u32(h.sample_rate);
  w.u64(h.num_samples);
  w.u32(h.frame_size);
  w.u32(h.hop_size);
  w.u16(h.lpc_order);
  w.u8(h.lpc_bits);
  w.f64(h.residual_scale);
  w.u8(h.skip_aes);
  w.u16(h.bins);
  for (const auto& cb : h.codebooks) w.bytes(cb);
  for (const auto& c : h.centers)
    for (double v : c) w.f64(v);

  for (const FrameRecord& f : stream.frames) {
    w.u8(f.degenerate ? kFlagDegenerate : 0);
    if (!f.degenerate) {
      BitWriter bits;
      for (std::uint16_t i : f.lpc_indices) bits.write(i, h.lpc_bits);
      w.bytes(bits.bytes());
    }
    for (const BitBuffer& p : f.payloads) {
      w.u32(static_cast<std::uint32_t>(p.bit_count));
      w.bytes(p.bytes);
    }
  }
  w.u32(static_cast<std::uint32_t>(stream.frames.size()));
  const std::uint32_t crc = crc32(std::span(w.buffer()).subspan(4));
  w.u32(crc);
  return w.take();
}

EncodedStream read_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kCorruptStream, "stream is truncated");
  ByteReader r(bytes);
  if (!r.tag("HRPS")) fail(ErrorCode::kBadMagic, "not an .hrp stream");
  if (bytes.size() < 4 + 2 + 8) fail(ErrorCode::kCorruptStream, "stream is truncated");
  const std::size_t body_end = bytes.size() - 4;
  ByteReader crc_reader(bytes.subspan(body_end));
  if (crc32(bytes.subspan(4, body_end - 4)) != crc_reader.u32())
    fail(ErrorCode::kChecksumMismatch, "stream checksum mismatch");

  EncodedStream s;
  StreamHeader& h = s.header;
  h.version = r.u16();
  if (h.version != kStreamVersion)
    fail(ErrorCode::kVersionMismatch, "stream version " + std::to_string(h.version) + " is not supported");
  h.sample_rate = r.u32();
  h.num_samples = r.u64();
  h.frame_size = r.u32();
  h.hop_size = r.u32();
  h.lpc_order = r.u16();
  h.lpc_bits = r.u8();
  h.residual_scale = r.f64();
  h.skip_aes = r.u8();
  h.bins = r.u16();
  if (h.frame_size == 0 || h.hop_size == 0 || h.hop_size > h.frame_size || h.bins < 2 || h.lpc_bits == 0 ||
      h.lpc_bits > 16 || h.sample_rate == 0)
    fail(ErrorCode::kCorruptStream, "stream header has invalid geometry");
  for (std::size_t l = 0; l < h.code_layers(); ++l) {
    const auto b = r.bytes(std::size_t{h.bins} + 1);
    h.codebooks.emplace_back(b.begin(), b.end());
  }
  for (std::size_t l = 0; l < h.code_layers(); ++l) {
    std::vector<double> c(h.bins);
    for (double& v : c) v = r.f64();
    h.centers.push_back(std::move(c));
  }

  const std::size_t side = lpc_side_bytes(h.lpc_order, h.lpc_bits);
  while (r.position() + 4 < body_end) {
    FrameRecord f;
    const std::uint8_t flags = r.u8();
    if (flags & ~kFlagDegenerate) fail(ErrorCode::kCorruptStream, "unknown frame flags");
    f.degenerate = flags & kFlagDegenerate;
    if (!f.degenerate) {
      BitReader bits(r.bytes(side), side * 8);
      f.lpc_indices.resize(h.lpc_order);
      for (auto& i : f.lpc_indices) i = static_cast<std::uint16_t>(bits.read(h.lpc_bits));
    }
    for (std::size_t l = 0; l < h.code_layers(); ++l) {
      BitBuffer p;
      p.bit_count = r.u32();
      const auto b = r.bytes((p.bit_count + 7) / 8);
      p.bytes.assign(b.begin(), b.end());
      f.payloads.push_back(std::move(p));
    }
    s.frames.push_back(std::move(f));
  }
  if (r.position() + 4 != body_end) fail(ErrorCode::kCorruptStream, "frame records overrun the trailer");
  if (r.u32() != s.frames.size()) fail(ErrorCode::kCorruptStream, "trailer frame count disagrees with the records");
  return s;
}

BitrateBreakdown measure_bitrate(const EncodedStream& stream, double duration_s) {
  if (!(duration_s > 0)) fail(ErrorCode::kInvalidArgument, "duration must be positive");
  BitrateBreakdown b;
  b.duration_s = duration_s;
  const std::size_t side = lpc_side_bytes(stream.header.lpc_order, stream.header.lpc_bits);
  for (const FrameRecord& f : stream.frames) {
    if (!f.degenerate) b.lpc_bits += 8 * side;
    for (const BitBuffer& p : f.payloads) b.neural_bits += 8 * p.bytes.size();
  }
  b.total_bits = 8 * write_stream(stream).size();
  b.overhead_bits = b.total_bits - b.neural_bits - b.lpc_bits;
  return b;
}

}  // namespace harpnet
