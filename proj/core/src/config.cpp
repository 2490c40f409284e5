#include "harpnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "harpnet/error.hpp"
#include "harpnet/stream.hpp"

namespace harpnet {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorCode::kConfig, "config key '" + key + "': '" + value + "' is not " + expected);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "a number");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter size_field(T RunConfig::*group, std::size_t T::*field) {
  return [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*field = parse_number<std::size_t>(k, v); };
}

template <class T>
Setter real_field(T RunConfig::*group, Real T::*field) {
  return [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*field = parse_number<Real>(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    using M = ModelConfig;
    using T = TrainConfig;
    t["encoder_layers"] = size_field(&RunConfig::model, &M::encoder_layers);
    t["filters"] = size_field(&RunConfig::model, &M::filters);
    t["kernel_size"] = size_field(&RunConfig::model, &M::kernel_size);
    t["skip_aes"] = size_field(&RunConfig::model, &M::skip_aes);
    t["skip_filters"] = size_field(&RunConfig::model, &M::skip_filters);
    t["skip_hidden_layers"] = size_field(&RunConfig::model, &M::skip_hidden_layers);
    t["bins"] = size_field(&RunConfig::model, &M::bins);
    t["leaky_slope"] = real_field(&RunConfig::model, &M::leaky_slope);
    t["alpha_init"] = real_field(&RunConfig::model, &M::alpha_init);
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.seed = parse_number<std::uint64_t>(k, v);
      c.train.seed = c.model.seed;
    };
    t["frame_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.framing.frame_size = parse_number<std::size_t>(k, v);
    };
    t["hop_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.framing.hop_size = parse_number<std::size_t>(k, v);
    };
    t["sample_rate"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.framing.sample_rate = parse_number<std::uint32_t>(k, v);
    };
    t["lpc_order"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.lpc.order = parse_number<std::size_t>(k, v);
    };
    t["lpc_bits"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.lpc.bits_per_coeff = parse_number<unsigned>(k, v);
    };
    t["residual_scale"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model.lpc.residual_scale = parse_number<Real>(k, v);
    };
    t["lpc_window"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "rectangular") c.model.lpc.window = AnalysisWindow::kRectangular;
      else if (v == "hann") c.model.lpc.window = AnalysisWindow::kHann;
      else bad_value(k, v, "'rectangular' or 'hann'");
    };
    t["warmup_epochs"] = size_field(&RunConfig::train, &T::warmup_epochs);
    t["total_epochs"] = size_field(&RunConfig::train, &T::total_epochs);
    t["anneal_rate"] = real_field(&RunConfig::train, &T::anneal_rate);
    t["target_entropy"] = real_field(&RunConfig::train, &T::target_entropy);
    t["target_entropy_per_layer"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.target_entropy_per_layer = parse_number<Real>(k, v);
    };
    t["lambda_init"] = real_field(&RunConfig::train, &T::lambda_init);
    t["lambda_gain"] = real_field(&RunConfig::train, &T::lambda_gain);
    t["batch_size"] = size_field(&RunConfig::train, &T::batch_size);
    t["learning_rate"] = real_field(&RunConfig::train, &T::learning_rate);
    t["frames_per_epoch"] = size_field(&RunConfig::train, &T::frames_per_epoch);
    t["train_data"] = [](RunConfig& c, const std::string&, const std::string& v) { c.train_data = v; };
    t["validation_data"] = [](RunConfig& c, const std::string&, const std::string& v) { c.validation_data = v; };
    t["synthetic_clips"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.synthetic_clips = parse_number<std::size_t>(k, v);
    };
    t["synthetic_seconds"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.synthetic_seconds = parse_number<double>(k, v);
    };
    t["data_seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data_seed = parse_number<std::uint64_t>(k, v);
    };
    t["model_out"] = [](RunConfig& c, const std::string&, const std::string& v) { c.model_out = v; };
    t["report_out"] = [](RunConfig& c, const std::string&, const std::string& v) { c.report_out = v; };
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  it->second(*this, key, value);
}

void RunConfig::apply_env() {
  for (const auto& [key, _] : setters()) {
    std::string name = "HARPNET_" + key;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
    if (const char* v = std::getenv(name.c_str())) set(key, v);
  }
}

void RunConfig::finalize() {
  if (target_entropy_per_layer > 0)
    train.target_entropy = target_entropy_per_layer * static_cast<Real>(model.skip_aes + 1);
  try {
    model.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  train.validate(model.skip_aes + 1, model.bins);
  if (synthetic_clips == 0 && train_data == "synthetic") fail(ErrorCode::kConfig, "synthetic_clips must be positive");
  if (!(synthetic_seconds > 0)) fail(ErrorCode::kConfig, "synthetic_seconds must be positive");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::kConfig, source + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    try {
      cfg.set(key, trim(body.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot open config " + path.string());
  return parse_config(in, path.string());
}

Real entropy_for_bitrate(double kbps, const ModelConfig& model) {
  const auto& f = model.framing;
  const double frames_per_s = static_cast<double>(f.sample_rate) / static_cast<double>(f.hop_size);
  const double side_bps = 8.0 * static_cast<double>(lpc_side_bytes(model.lpc.order, model.lpc.bits_per_coeff)) * frames_per_s;
  const double coded_per_s = frames_per_s * static_cast<double>(f.frame_size);
  const double bits = (kbps * 1000.0 - side_bps) / coded_per_s;
  if (!(bits > 0)) {
    fail(ErrorCode::kConfig, "target bitrate " + std::to_string(kbps) + " kbps does not cover the " +
                                 std::to_string(side_bps / 1000.0) + " kbps of LPC side info");
  }
  return static_cast<Real>(bits);
}

}  // namespace harpnet
