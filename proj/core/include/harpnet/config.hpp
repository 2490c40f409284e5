#pragma once

// Key = value run configuration shared by the CLI and the experiments.
// Lines starting with '#' are comments. Every key may also be set through
// an environment variable HARPNET_<KEY> (upper case), which wins over the
// file.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "harpnet/model.hpp"
#include "harpnet/training.hpp"

namespace harpnet {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  // Per-layer entropy target; when positive it overrides train.target_entropy
  // with (M + 1) times this value.
  Real target_entropy_per_layer = 0;

  std::string train_data = "synthetic";  // WAV directory or "synthetic"
  std::string validation_data;           // WAV directory, "synthetic" or empty
  std::size_t synthetic_clips = 24;
  double synthetic_seconds = 1.0;
  std::uint64_t data_seed = 7;
  std::string model_out = "model.harp";
  std::string report_out;  // TSV report path; empty to skip

  // Throws kConfig naming the key for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void apply_env();
  // Resolves derived settings and validates everything.
  void finalize();
};

std::vector<std::string> config_keys();

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Total entropy target in bits per coded sample for a total rate in kbps,
// after the LPC side info is subtracted. Every sample is coded frame / hop
// times. Throws kConfig when the rate cannot cover the side info.
Real entropy_for_bitrate(double kbps, const ModelConfig& model);

}  // namespace harpnet
