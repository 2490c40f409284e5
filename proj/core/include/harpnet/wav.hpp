#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "harpnet/tensor.hpp"

namespace harpnet {

enum class WavSubtype : std::uint8_t { kPcm16, kFloat32 };

struct WavAudio {
  std::uint32_t sample_rate = 16000;
  std::uint16_t channels = 1;
  WavSubtype subtype = WavSubtype::kPcm16;
  // Interleaved samples in [-1, 1].
  std::vector<Real> samples;

  std::size_t frames() const { return channels == 0 ? 0 : samples.size() / channels; }
  // Channel average.
  std::vector<Real> downmix() const;
};

// Supports 16-bit integer PCM and 32-bit IEEE float, including
// WAVE_FORMAT_EXTENSIBLE headers.
WavAudio read_wav(const std::filesystem::path& path);
WavAudio parse_wav(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_wav(std::span<const Real> mono, std::uint32_t sample_rate, WavSubtype subtype);
// Writes through a temporary file and renames it into place.
void write_wav(const std::filesystem::path& path, std::span<const Real> mono, std::uint32_t sample_rate,
               WavSubtype subtype);

// Byte-level helpers shared with the stream and model file writers.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace harpnet
