#include "harpnet/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "harpnet/error.hpp"

namespace harpnet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

std::vector<Real> WavAudio::downmix() const {
  const std::size_t n = frames();
  std::vector<Real> mono(n, Real(0));
  if (channels == 0) return mono;
  for (std::size_t i = 0; i < n; ++i) {
    Real s = 0;
    for (std::size_t c = 0; c < channels; ++c) s += samples[i * channels + c];
    mono[i] = s / static_cast<Real>(channels);
  }
  return mono;
}

WavAudio parse_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kUnsupportedFormat, "not a RIFF/WAVE file");
  }
  WavAudio audio;
  std::uint16_t format = 0, bits = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) fail(ErrorCode::kUnsupportedFormat, "truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail(ErrorCode::kUnsupportedFormat, "short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = le16(f);
      audio.channels = le16(f + 2);
      audio.sample_rate = le32(f + 4);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(ErrorCode::kUnsupportedFormat, "short extensible fmt chunk");
        format = le16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail(ErrorCode::kUnsupportedFormat, "data chunk before fmt chunk");
      if (audio.channels == 0) fail(ErrorCode::kUnsupportedFormat, "zero channels");
      const std::uint8_t* d = bytes.data() + body;
      if (format == kFormatPcm && bits == 16) {
        audio.subtype = WavSubtype::kPcm16;
        const std::size_t n = size / 2;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          audio.samples[i] = static_cast<Real>(static_cast<std::int16_t>(le16(d + 2 * i))) / Real(32768);
      } else if (format == kFormatFloat && bits == 32) {
        audio.subtype = WavSubtype::kFloat32;
        const std::size_t n = size / 4;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) audio.samples[i] = static_cast<Real>(std::bit_cast<float>(le32(d + 4 * i)));
      } else {
        fail(ErrorCode::kUnsupportedFormat, "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                                std::to_string(bits) + " bits)");
      }
      audio.samples.resize(audio.samples.size() - audio.samples.size() % audio.channels);
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  fail(ErrorCode::kUnsupportedFormat, "WAV file has no data chunk");
}

std::vector<std::uint8_t> serialize_wav(std::span<const Real> mono, std::uint32_t sample_rate, WavSubtype subtype) {
  const std::uint16_t bits = subtype == WavSubtype::kPcm16 ? 16 : 32;
  const std::uint16_t bytes_per_sample = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(mono.size() * bytes_per_sample);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, subtype == WavSubtype::kPcm16 ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, sample_rate);
  put32(out, sample_rate * bytes_per_sample);
  put16(out, bytes_per_sample);
  put16(out, bits);
  put_tag(out, "data");
  put32(out, data_size);
  for (Real s : mono) {
    if (subtype == WavSubtype::kPcm16) {
      const long q = std::lround(std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0) * 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      fail(ErrorCode::kIo, "short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

WavAudio read_wav(const std::filesystem::path& path) { return parse_wav(read_file_bytes(path)); }

void write_wav(const std::filesystem::path& path, std::span<const Real> mono, std::uint32_t sample_rate,
               WavSubtype subtype) {
  write_file_atomic(path, serialize_wav(mono, sample_rate, subtype));
}

}  // namespace harpnet
