// harpnet: train models, encode WAV to .hrp, decode .hrp to WAV, evaluate
// and compare.
//
// Exit codes: 0 success, 2 bad input (missing data, config, unreadable or
// unsupported files), 3 training divergence, 4 stream/model mismatch,
// 5 corrupt stream.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harpnet/codec.hpp"
#include "harpnet/config.hpp"
#include "harpnet/error.hpp"
#include "harpnet/stream.hpp"
#include "harpnet/synthetic.hpp"
#include "harpnet/training.hpp"
#include "harpnet/wav.hpp"

namespace fs = std::filesystem;
using namespace harpnet;

namespace {

int exit_code(const Error& e) {
  if (e.is_stream_corruption()) return 5;
  switch (e.code()) {
    case ErrorCode::kDivergence: return 3;
    case ErrorCode::kModelMismatch: return 4;
    default: return 2;
  }
}

struct Clip {
  std::string name;
  std::vector<Real> samples;
  std::uint32_t sample_rate = 0;
};

std::vector<Real> mono_samples(const WavAudio& wav, bool downmix, const std::string& name) {
  if (wav.channels == 1) return wav.samples;
  if (!downmix) {
    fail(ErrorCode::kUnsupportedFormat,
         name + " has " + std::to_string(wav.channels) + " channels; only mono is supported (use --downmix)");
  }
  return wav.downmix();
}

Clip load_clip(const fs::path& path, bool downmix) {
  const WavAudio wav = read_wav(path);
  return {path.filename().string(), mono_samples(wav, downmix, path.string()), wav.sample_rate};
}

std::vector<Clip> load_dir(const fs::path& dir, bool downmix) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kMissingData, "data directory " + dir.string() + " does not exist");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".wav") paths.push_back(entry.path());
  }
  if (paths.empty()) fail(ErrorCode::kMissingData, "no .wav files in " + dir.string());
  std::sort(paths.begin(), paths.end());
  std::vector<Clip> clips;
  for (const auto& p : paths) clips.push_back(load_clip(p, downmix));
  return clips;
}

std::vector<Clip> load_data(const std::string& spec, const RunConfig& cfg, std::uint64_t seed_offset, std::size_t clips,
                            bool downmix) {
  if (spec != "synthetic") return load_dir(spec, downmix);
  const std::uint32_t rate = cfg.model.framing.sample_rate;
  const auto samples = static_cast<std::size_t>(std::llround(cfg.synthetic_seconds * rate));
  std::vector<Clip> out;
  std::size_t i = 0;
  for (auto& s : synthetic_set(clips, samples, rate, cfg.data_seed + seed_offset))
    out.push_back({"synthetic_" + std::to_string(i++), std::move(s), rate});
  return out;
}

std::vector<std::vector<Real>> training_frames(const std::vector<Clip>& clips, const ModelConfig& model) {
  std::vector<std::vector<Real>> frames;
  for (const Clip& c : clips)
    for (auto& f : residual_frames(c.samples, model)) frames.push_back(std::move(f));
  return frames;
}

HarpNetModel open_model(const std::string& path) {
  try {
    return load_model(path);
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, "cannot load model " + path + ": " + e.what());
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void print_rate(std::ostream& out, const BitrateBreakdown& b) {
  out << std::fixed << std::setprecision(3) << "neural " << b.neural_kbps() << " kbps, LPC " << b.lpc_kbps()
      << " kbps, overhead " << b.overhead_kbps() << " kbps, total " << b.total_kbps() << " kbps\n";
  out.unsetf(std::ios::floatfield);
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string model_out;
  std::string report_out;
  std::optional<std::size_t> skip_aes;
  std::optional<std::uint64_t> seed;
  std::optional<double> target_kbps;
  bool downmix = false;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  cfg.apply_env();
  if (a.skip_aes) cfg.model.skip_aes = *a.skip_aes;
  if (a.seed) cfg.set("seed", std::to_string(*a.seed));
  if (!a.model_out.empty()) cfg.model_out = a.model_out;
  if (!a.report_out.empty()) cfg.report_out = a.report_out;
  if (a.target_kbps) {
    cfg.target_entropy_per_layer = 0;
    cfg.train.target_entropy = entropy_for_bitrate(*a.target_kbps, cfg.model);
  }
  cfg.finalize();

  const auto train_clips = load_data(cfg.train_data, cfg, 0, cfg.synthetic_clips, a.downmix);
  const auto frames = training_frames(train_clips, cfg.model);
  std::vector<std::vector<Real>> validation;
  if (!cfg.validation_data.empty()) {
    validation = training_frames(
        load_data(cfg.validation_data, cfg, 1, std::max<std::size_t>(1, cfg.synthetic_clips / 4), a.downmix), cfg.model);
  }

  HarpNetModel model = build_model(cfg.model);
  std::cerr << "training M = " << cfg.model.skip_aes << ", " << count_params(model) << " parameters, " << frames.size()
            << " frames, target " << cfg.train.target_entropy << " bits/sample\n";
  const TrainReport report = train(model, frames, cfg.train, validation, [&](const EpochRecord& e) {
    if (a.quiet) return;
    std::cerr << "epoch " << e.epoch << (e.quantized ? " [quantized]" : " [warmup]") << " loss " << e.loss << " H "
              << e.total_soft_entropy() << " lambda " << e.lambda << " alpha " << e.alpha << '\n';
  });
  fit_codebooks(model, frames);
  save_model(model, cfg.model_out);

  report.write_table(std::cout);
  if (!cfg.report_out.empty()) {
    std::ostringstream tsv;
    report.write_tsv(tsv);
    write_text_atomic(cfg.report_out, tsv.str());
  }
  std::cout << "model written to " << cfg.model_out << '\n';
  return 0;
}

// ---- encode / decode -----------------------------------------------------------

int cmd_encode(const std::string& model_path, const std::string& in, const std::string& out, unsigned jobs, bool downmix) {
  const HarpNetModel model = open_model(model_path);
  const Clip clip = load_clip(in, downmix);
  if (clip.samples.empty()) fail(ErrorCode::kMissingData, in + " contains no samples");
  const EncodedStream stream = encode_signal(model, clip.samples, clip.sample_rate, jobs);
  const auto bytes = write_stream(stream);
  write_file_atomic(out, bytes);
  const double duration = static_cast<double>(clip.samples.size()) / clip.sample_rate;
  print_rate(std::cout, measure_bitrate(stream, duration));
  return 0;
}

int cmd_decode(const std::string& model_path, const std::string& in, const std::string& out, unsigned jobs,
               const std::string& subtype) {
  const HarpNetModel model = open_model(model_path);
  const EncodedStream stream = read_stream(read_file_bytes(in));
  const std::vector<Real> audio = decode_signal(model, stream, jobs);
  write_wav(out, audio, stream.header.sample_rate, subtype == "pcm16" ? WavSubtype::kPcm16 : WavSubtype::kFloat32);
  return 0;
}

// ---- eval / compare --------------------------------------------------------------

struct EvalRow {
  std::string model, clip;
  double snr = 0, kbps = 0, neural = 0, lpc = 0, overhead = 0;
};

int cmd_eval(const std::string& model_path, const std::string& dir, const std::string& out, std::string label,
             unsigned jobs, bool downmix) {
  const HarpNetModel model = open_model(model_path);
  const auto clips = load_dir(dir, downmix);
  if (label.empty()) label = fs::path(model_path).stem().string();
  std::vector<EvalRow> rows;
  for (const Clip& c : clips) {
    if (c.samples.empty() || std::all_of(c.samples.begin(), c.samples.end(), [](Real v) { return v == 0; })) {
      std::cerr << "warning: " << c.name << " is silent; skipped\n";
      continue;
    }
    const EncodedStream stream = encode_signal(model, c.samples, c.sample_rate, jobs);
    const EncodedStream parsed = read_stream(write_stream(stream));
    const auto decoded = decode_signal(model, parsed, jobs);
    const auto rate = measure_bitrate(parsed, static_cast<double>(c.samples.size()) / c.sample_rate);
    rows.push_back({label, c.name, snr_db(c.samples, decoded), rate.total_kbps(), rate.neural_kbps(), rate.lpc_kbps(),
                    rate.overhead_kbps()});
  }
  if (rows.empty()) fail(ErrorCode::kMissingData, "every clip in " + dir + " is silent");

  EvalRow mean{label, "MEAN"};
  for (const EvalRow& r : rows) {
    mean.snr += r.snr;
    mean.kbps += r.kbps;
    mean.neural += r.neural;
    mean.lpc += r.lpc;
    mean.overhead += r.overhead;
  }
  const double n = static_cast<double>(rows.size());
  mean.snr /= n;
  mean.kbps /= n;
  mean.neural /= n;
  mean.lpc /= n;
  mean.overhead /= n;
  rows.push_back(mean);

  std::ostringstream tsv;
  tsv << "model\tclip\tsnr_db\tkbps\tneural_kbps\tlpc_kbps\toverhead_kbps\n" << std::setprecision(10);
  for (const EvalRow& r : rows)
    tsv << r.model << '\t' << r.clip << '\t' << r.snr << '\t' << r.kbps << '\t' << r.neural << '\t' << r.lpc << '\t'
        << r.overhead << '\n';
  if (!out.empty()) write_text_atomic(out, tsv.str());

  std::cout << std::left << std::setw(28) << "clip" << std::right << std::setw(10) << "SNR dB" << std::setw(10) << "kbps"
            << '\n'
            << std::fixed << std::setprecision(2);
  for (const EvalRow& r : rows)
    std::cout << std::left << std::setw(28) << r.clip << std::right << std::setw(10) << r.snr << std::setw(10) << r.kbps
              << '\n';
  return 0;
}

struct EvalSummary {
  std::string model;
  double kbps = 0, mean_snr = 0, std_snr = 0;
  long group = 0;
};

EvalSummary summarize_eval(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kMissingData, "cannot open eval output " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("model\tclip\tsnr_db\tkbps", 0) != 0) fail(ErrorCode::kConfig, path + " is not an eval table");
  EvalSummary s;
  std::vector<double> snrs;
  double kbps = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string model, clip, snr, rate;
    std::getline(ss, model, '\t');
    std::getline(ss, clip, '\t');
    std::getline(ss, snr, '\t');
    std::getline(ss, rate, '\t');
    if (clip == "MEAN") continue;
    s.model = model;
    try {
      snrs.push_back(std::stod(snr));
      kbps += std::stod(rate);
    } catch (const std::exception&) {
      fail(ErrorCode::kConfig, path + ": unreadable row '" + line + "'");
    }
  }
  if (snrs.empty()) fail(ErrorCode::kMissingData, path + " has no clip rows");
  const double n = static_cast<double>(snrs.size());
  for (double v : snrs) s.mean_snr += v;
  s.mean_snr /= n;
  for (double v : snrs) s.std_snr += (v - s.mean_snr) * (v - s.mean_snr);
  s.std_snr = std::sqrt(s.std_snr / n);
  s.kbps = kbps / n;
  s.group = std::lround(s.kbps);
  return s;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& plot_out) {
  if (inputs.size() < 2) fail(ErrorCode::kMissingData, "compare needs at least two eval outputs");
  std::vector<EvalSummary> all;
  for (const auto& p : inputs) all.push_back(summarize_eval(p));
  std::stable_sort(all.begin(), all.end(), [](const EvalSummary& a, const EvalSummary& b) {
    return std::tie(a.group, a.model) < std::tie(b.group, b.model);
  });

  std::set<std::string> models;
  std::map<long, std::map<std::string, const EvalSummary*>> groups;
  for (const auto& s : all) {
    models.insert(s.model);
    groups[s.group][s.model] = &s;
  }
  for (const auto& [g, members] : groups)
    if (members.size() != models.size())
      std::cerr << "warning: bitrate group ~" << g << " kbps lacks " << models.size() - members.size() << " model(s)\n";

  std::cout << std::left << std::setw(12) << "kbps";
  for (const auto& m : models) std::cout << std::setw(22) << m;
  std::cout << '\n' << std::fixed << std::setprecision(2);
  for (const auto& [g, members] : groups) {
    std::cout << std::setw(12) << ("~" + std::to_string(g));
    for (const auto& m : models) {
      const auto it = members.find(m);
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2);
      if (it == members.end()) cell << "-";
      else cell << it->second->mean_snr << " +/- " << it->second->std_snr;
      std::cout << std::setw(22) << cell.str();
    }
    std::cout << '\n';
  }

  if (!plot_out.empty()) {
    std::ostringstream tsv;
    tsv << "model\tbitrate\tmean_snr\tstd\n" << std::setprecision(10);
    for (const auto& s : all) tsv << s.model << '\t' << s.kbps << '\t' << s.mean_snr << '\t' << s.std_snr << '\n';
    write_text_atomic(plot_out, tsv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HARP-Net neural audio codec"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "harpnet 0.1.0");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", train_args.config, "key = value config file")->check(CLI::ExistingFile);
  train->add_option("--model", train_args.model_out, "Output model path (overrides model_out)");
  train->add_option("--report", train_args.report_out, "Report TSV path (overrides report_out)");
  train->add_option("--skip-aes", train_args.skip_aes, "Number of skip autoencoders M");
  train->add_option("--seed", train_args.seed, "Model and training seed");
  train->add_option("--target-bitrate", train_args.target_kbps, "Total target rate in kbps, LPC side info included");
  train->add_flag("--downmix", train_args.downmix, "Average multichannel input to mono");
  train->add_flag("--quiet", train_args.quiet, "No per-epoch progress");

  std::string model, input, output, label, plot, subtype = "float32";
  unsigned jobs = 1;
  bool downmix = false;
  std::vector<std::string> evals;

  auto* encode = app.add_subcommand("encode", "Encode a mono WAV file to .hrp");
  encode->add_option("--model", model, "Model file")->required();
  encode->add_option("input", input, "Input WAV")->required();
  encode->add_option("output", output, "Output .hrp")->required();
  encode->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  encode->add_flag("--downmix", downmix, "Average multichannel input to mono");

  auto* decode = app.add_subcommand("decode", "Decode .hrp to WAV");
  decode->add_option("--model", model, "Model file")->required();
  decode->add_option("input", input, "Input .hrp")->required();
  decode->add_option("output", output, "Output WAV")->required();
  decode->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  decode->add_option("--format", subtype, "Output sample format")->check(CLI::IsMember({"float32", "pcm16"}));

  auto* eval = app.add_subcommand("eval", "SNR and bitrate over a directory of WAV files");
  eval->add_option("--model", model, "Model file")->required();
  eval->add_option("dir", input, "Test directory")->required();
  eval->add_option("--out", output, "Eval TSV output path");
  eval->add_option("--label", label, "Model name in the output (default: model file stem)");
  eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  eval->add_flag("--downmix", downmix, "Average multichannel input to mono");

  auto* compare = app.add_subcommand("compare", "Group eval outputs by model and bitrate");
  compare->add_option("evals", evals, "Eval TSV files")->required();
  compare->add_option("--plot", plot, "Plot data output (model, bitrate, mean_snr, std)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*encode) return cmd_encode(model, input, output, jobs, downmix);
    if (*decode) return cmd_decode(model, input, output, jobs, subtype);
    if (*eval) return cmd_eval(model, input, output, label, jobs, downmix);
    if (*compare) return cmd_compare(evals, plot);
  } catch (const Error& e) {
    std::cerr << "harpnet: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "harpnet: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
