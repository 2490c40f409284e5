#include "harpnet/huffman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

#include "harpnet/error.hpp"

namespace harpnet {

void BitWriter::write(std::uint64_t value, unsigned count) {
  for (unsigned i = count; i-- > 0;) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }
}

BitReader::BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_count)
    : bytes_(bytes), limit_(bit_count) {
  if (bit_count > bytes.size() * 8) fail(ErrorCode::kCorruptStream, "declared bit length exceeds the payload");
}

unsigned BitReader::bit() {
  if (pos_ >= limit_) fail(ErrorCode::kCorruptStream, "read past the end of a payload");
  const unsigned b = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return b;
}

std::uint64_t BitReader::read(unsigned count) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < count; ++i) v = (v << 1) | bit();
  return v;
}

namespace {

unsigned bits_for(std::size_t symbols) {
  unsigned b = 1;
  while ((std::size_t{1} << b) < symbols) ++b;
  return b;
}

}  // namespace

HuffmanCodebook HuffmanCodebook::from_lengths(std::vector<std::uint8_t> lengths) {
  if (lengths.size() < 2) fail(ErrorCode::kCorruptStream, "codebook needs at least one symbol plus the escape slot");
  HuffmanCodebook cb;
  cb.symbols_ = lengths.size() - 1;
  cb.lengths_ = std::move(lengths);
  cb.escape_bits_ = bits_for(cb.symbols_);

  unsigned max_len = 0;
  std::size_t coded = 0;
  for (std::uint8_t l : cb.lengths_) {
    if (l > kMaxLength) fail(ErrorCode::kCorruptStream, "code length exceeds " + std::to_string(kMaxLength));
    max_len = std::max<unsigned>(max_len, l);
    coded += l != 0;
  }
  if (coded == 0) fail(ErrorCode::kCorruptStream, "codebook has no codewords");
  const bool any_unseen = std::any_of(cb.lengths_.begin(), cb.lengths_.end() - 1, [](std::uint8_t l) { return l == 0; });
  if (any_unseen && !cb.has_escape()) fail(ErrorCode::kCorruptStream, "unseen symbols without an escape codeword");

  cb.sorted_.clear();
  for (std::size_t s = 0; s < cb.lengths_.size(); ++s)
    if (cb.lengths_[s] != 0) cb.sorted_.push_back(static_cast<std::uint32_t>(s));
  std::stable_sort(cb.sorted_.begin(), cb.sorted_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return cb.lengths_[a] < cb.lengths_[b]; });

  cb.codes_.assign(cb.lengths_.size(), 0);
  cb.count_.assign(max_len + 1, 0);
  cb.first_code_.assign(max_len + 1, 0);
  cb.offset_.assign(max_len + 1, 0);
  for (std::uint8_t l : cb.lengths_)
    if (l != 0) ++cb.count_[l];

  // Canonical assignment; also verifies the Kraft inequality.
  std::uint64_t code = 0;
  std::uint32_t offset = 0;
  for (unsigned len = 1; len <= max_len; ++len) {
    code <<= 1;
    cb.first_code_[len] = code;
    cb.offset_[len] = offset;
    code += cb.count_[len];
    offset += cb.count_[len];
    if (code > (std::uint64_t{1} << len)) fail(ErrorCode::kCorruptStream, "code lengths violate the Kraft inequality");
  }
  std::vector<std::uint64_t> next(cb.first_code_);
  for (std::uint32_t s : cb.sorted_) cb.codes_[s] = next[cb.lengths_[s]]++;
  return cb;
}

unsigned HuffmanCodebook::cost(std::size_t symbol) const {
  const unsigned l = lengths_.at(symbol);
  return l != 0 ? l : lengths_.back() + escape_bits_;
}

double HuffmanCodebook::kraft_sum() const {
  double s = 0;
  for (std::uint8_t l : lengths_)
    if (l != 0) s += std::ldexp(1.0, -static_cast<int>(l));
  return s;
}

double HuffmanCodebook::expected_length(std::span<const double> p) const {
  if (p.size() != symbols_) fail(ErrorCode::kShape, "distribution size does not match the codebook");
  double total = 0, mass = 0;
  for (std::size_t s = 0; s < symbols_; ++s) {
    total += p[s] * cost(s);
    mass += p[s];
  }
  return mass > 0 ? total / mass : 0.0;
}

HuffmanCodebook build_codebook(std::span<const double> frequencies) {
  const std::size_t n = frequencies.size();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "empty alphabet");
  double total = 0;
  for (double f : frequencies) {
    if (!(f >= 0) || !std::isfinite(f)) fail(ErrorCode::kInvalidArgument, "frequencies must be finite and non-negative");
    total += f;
  }
  if (!(total > 0)) fail(ErrorCode::kInvalidArgument, "all symbol frequencies are zero");

  // Leaves 0..n-1 are symbols, leaf n is the escape; internal nodes follow.
  struct Node {
    double weight;
    std::size_t order;
    int left = -1, right = -1;
  };
  std::vector<Node> nodes;
  using Entry = std::tuple<double, std::size_t, std::size_t>;  // weight, tie order, node
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  bool unseen = false;
  for (std::size_t s = 0; s < n; ++s) {
    if (frequencies[s] > 0) {
      nodes.push_back({frequencies[s], s});
      heap.emplace(frequencies[s], s, nodes.size() - 1);
    } else {
      unseen = true;
    }
  }
  if (unseen) {
    nodes.push_back({0.0, n});
    heap.emplace(0.0, n, nodes.size() - 1);
  }

  std::vector<std::uint8_t> lengths(n + 1, 0);
  if (heap.size() == 1) {
    lengths[nodes[std::get<2>(heap.top())].order] = 1;
    return HuffmanCodebook::from_lengths(std::move(lengths));
  }

  std::size_t next_order = n + 1;
  while (heap.size() > 1) {
    const auto [wa, oa, a] = heap.top();
    heap.pop();
    const auto [wb, ob, b] = heap.top();
    heap.pop();
    nodes.push_back({wa + wb, next_order, static_cast<int>(a), static_cast<int>(b)});
    heap.emplace(wa + wb, next_order++, nodes.size() - 1);
  }

  // Depth of every leaf by an explicit stack walk.
  std::vector<std::pair<std::size_t, unsigned>> stack{{std::get<2>(heap.top()), 0}};
  while (!stack.empty()) {
    const auto [id, depth] = stack.back();
    stack.pop_back();
    const Node& node = nodes[id];
    if (node.left < 0) {
      if (depth > HuffmanCodebook::kMaxLength) fail(ErrorCode::kInvalidArgument, "Huffman code too deep");
      lengths[node.order] = static_cast<std::uint8_t>(depth);
      continue;
    }
    stack.emplace_back(static_cast<std::size_t>(node.left), depth + 1);
    stack.emplace_back(static_cast<std::size_t>(node.right), depth + 1);
  }
  return HuffmanCodebook::from_lengths(std::move(lengths));
}

HuffmanCodebook build_codebook(std::span<const std::uint64_t> counts) {
  std::vector<double> f(counts.begin(), counts.end());
  return build_codebook(f);
}

BitBuffer huffman_encode(std::span<const CodeIndex> indices, const HuffmanCodebook& codebook) {
  BitWriter w;
  const std::size_t n = codebook.symbols();
  for (CodeIndex s : indices) {
    if (s >= n) fail(ErrorCode::kInvalidArgument, "index " + std::to_string(s) + " outside the codebook");
    const unsigned len = codebook.length(s);
    if (len != 0) {
      w.write(codebook.code(s), len);
    } else {
      w.write(codebook.code(n), codebook.length(n));
      w.write(s, codebook.escape_index_bits());
    }
  }
  BitBuffer out;
  out.bit_count = w.bit_count();
  out.bytes = w.take();
  return out;
}

std::vector<CodeIndex> huffman_decode(std::span<const std::uint8_t> bytes, std::size_t bit_count,
                                      const HuffmanCodebook& codebook, std::size_t count) {
  BitReader r(bytes, bit_count);
  const std::size_t n = codebook.symbols();
  const std::size_t max_len = codebook.count_.size() - 1;
  std::vector<CodeIndex> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t code = 0;
    std::size_t symbol = n + 1;
    for (std::size_t len = 1; len <= max_len; ++len) {
      code = (code << 1) | r.bit();
      const std::uint64_t rel = code - codebook.first_code_[len];
      if (code >= codebook.first_code_[len] && rel < codebook.count_[len]) {
        symbol = codebook.sorted_[codebook.offset_[len] + rel];
        break;
      }
    }
    if (symbol > n) fail(ErrorCode::kCorruptStream, "invalid Huffman codeword");
    if (symbol == n) {
      symbol = static_cast<std::size_t>(r.read(codebook.escape_index_bits()));
      if (symbol >= n) fail(ErrorCode::kCorruptStream, "escaped index outside the codebook");
    }
    out.push_back(static_cast<CodeIndex>(symbol));
  }
  if (r.remaining() != 0) fail(ErrorCode::kCorruptStream, "payload has trailing bits");
  return out;
}

}  // namespace harpnet
