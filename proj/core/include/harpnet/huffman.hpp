#pragma once

// Canonical Huffman coding of quantizer indices with MSB-first bit packing.
//
// Symbols that never occurred while fitting get no codeword of their own.
// They share one escape codeword, built as an extra leaf lighter than every
// real symbol, followed by the raw index in ceil(log2 J) bits. This keeps
// every legal index decodable when the input distribution drifts.

#include <cstdint>
#include <span>
#include <vector>

#include "harpnet/quantizer.hpp"

namespace harpnet {

class BitWriter {
 public:
  // Appends the low `count` bits of `value`, most significant first.
  void write(std::uint64_t value, unsigned count);
  std::size_t bit_count() const noexcept { return bits_; }
  // Bytes with the final partial byte zero padded.
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

class BitReader {
 public:
  // Never reads past `bit_count`; fails with kCorruptStream instead.
  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_count);
  unsigned bit();
  std::uint64_t read(unsigned count);
  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return limit_ - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

struct BitBuffer {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;

  bool operator==(const BitBuffer&) const = default;
};

class HuffmanCodebook {
 public:
  static constexpr unsigned kMaxLength = 57;

  HuffmanCodebook() = default;
  // `lengths` has J + 1 entries: one per symbol, then the escape codeword.
  // A zero symbol length means "escape coded"; a zero escape length means
  // there is no escape. Throws kCorruptStream for lengths that do not form a
  // prefix code.
  static HuffmanCodebook from_lengths(std::vector<std::uint8_t> lengths);

  std::size_t symbols() const noexcept { return symbols_; }
  const std::vector<std::uint8_t>& lengths() const noexcept { return lengths_; }
  std::uint8_t length(std::size_t symbol) const { return lengths_.at(symbol); }
  std::uint64_t code(std::size_t symbol) const { return codes_.at(symbol); }
  bool has_escape() const noexcept { return lengths_.back() != 0; }
  unsigned escape_index_bits() const noexcept { return escape_bits_; }
  // Bits spent on one occurrence of `symbol`, escape payload included.
  unsigned cost(std::size_t symbol) const;
  // Sum of 2^-len over every codeword, escape included.
  double kraft_sum() const;

  // Expected code length in bits per symbol under distribution p.
  double expected_length(std::span<const double> p) const;

  bool operator==(const HuffmanCodebook& o) const { return lengths_ == o.lengths_; }

 private:
  friend std::vector<CodeIndex> huffman_decode(std::span<const std::uint8_t>, std::size_t, const HuffmanCodebook&,
                                               std::size_t);

  std::size_t symbols_ = 0;
  std::vector<std::uint8_t> lengths_;   // J + 1, escape last
  std::vector<std::uint64_t> codes_;    // J + 1
  unsigned escape_bits_ = 0;
  // Canonical decoding tables indexed by length.
  std::vector<std::uint64_t> first_code_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> offset_;
  std::vector<std::uint32_t> sorted_;   // symbols ordered by (length, index)
};

// Optimal prefix code by pairwise merging (ties broken by symbol index) in
// canonical form. Throws kInvalidArgument when every frequency is zero.
HuffmanCodebook build_codebook(std::span<const double> frequencies);
HuffmanCodebook build_codebook(std::span<const std::uint64_t> counts);

BitBuffer huffman_encode(std::span<const CodeIndex> indices, const HuffmanCodebook& codebook);
std::vector<CodeIndex> huffman_decode(std::span<const std::uint8_t> bytes, std::size_t bit_count,
                                      const HuffmanCodebook& codebook, std::size_t count);
inline std::vector<CodeIndex> huffman_decode(const BitBuffer& bits, const HuffmanCodebook& codebook,
                                             std::size_t count) {
  return huffman_decode(bits.bytes, bits.bit_count, codebook, count);
}

}  // namespace harpnet
