#pragma once

// The .hrp container: header with decoder configuration, per-layer Huffman
// code lengths and bin centers, then one record per frame holding the LPC
// side info and one Huffman payload per code layer. See docs/bitstream.md.

#include <cstdint>
#include <span>
#include <vector>

#include "harpnet/huffman.hpp"

namespace harpnet {

inline constexpr std::uint16_t kStreamVersion = 1;

struct StreamHeader {
  std::uint16_t version = kStreamVersion;
  std::uint32_t sample_rate = 16000;
  std::uint64_t num_samples = 0;
  std::uint32_t frame_size = 1024;
  std::uint32_t hop_size = 512;
  std::uint16_t lpc_order = 16;
  std::uint8_t lpc_bits = 6;
  double residual_scale = 100;
  std::uint8_t skip_aes = 0;  // M
  std::uint16_t bins = 32;    // J
  std::vector<std::vector<std::uint8_t>> codebooks;  // M + 1 entries of J + 1 code lengths
  std::vector<std::vector<double>> centers;          // M + 1 entries of J bin centers

  std::size_t code_layers() const noexcept { return std::size_t{skip_aes} + 1; }
  bool operator==(const StreamHeader&) const = default;
};

struct FrameRecord {
  bool degenerate = false;
  std::vector<std::uint16_t> lpc_indices;  // lpc_order entries, empty when degenerate
  std::vector<BitBuffer> payloads;         // one per code layer, code order

  bool operator==(const FrameRecord&) const = default;
};

struct EncodedStream {
  StreamHeader header;
  std::vector<FrameRecord> frames;

  bool operator==(const EncodedStream&) const = default;
};

std::vector<std::uint8_t> write_stream(const EncodedStream& stream);

// Checks, in order: magic (kBadMagic), checksum (kChecksumMismatch), version
// (kVersionMismatch). Structural problems raise kCorruptStream.
EncodedStream read_stream(std::span<const std::uint8_t> bytes);

// Bytes occupied by one frame's LPC side info.
std::size_t lpc_side_bytes(std::size_t order, unsigned bits);

struct BitrateBreakdown {
  std::uint64_t neural_bits = 0;    // Huffman payload bytes, padding included
  std::uint64_t lpc_bits = 0;       // packed reflection indices
  std::uint64_t overhead_bits = 0;  // header, record framing, trailer
  std::uint64_t total_bits = 0;     // file size in bits
  double duration_s = 0;

  double kbps(std::uint64_t bits) const { return static_cast<double>(bits) / duration_s / 1000.0; }
  double neural_kbps() const { return kbps(neural_bits); }
  double lpc_kbps() const { return kbps(lpc_bits); }
  double overhead_kbps() const { return kbps(overhead_bits); }
  double total_kbps() const { return kbps(total_bits); }
};

// Itemized rate of the serialized stream. Throws kInvalidArgument for a
// non-positive duration.
BitrateBreakdown measure_bitrate(const EncodedStream& stream, double duration_s);

}  // namespace harpnet
