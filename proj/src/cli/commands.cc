// Copyright 2026 The rvqkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rvqkit/cli.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "rvqkit/audio.h"
#include "rvqkit/byte_io.h"
#include "rvqkit/codec.h"
#include "rvqkit/losses.h"
#include "rvqkit/metrics.h"
#include "rvqkit/rng.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T>
std::vector<T> ParseNumbers(const std::string& text, const std::string& flag) {
  std::vector<T> values;
  for (const std::string& item : SplitList(text)) {
    size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    Require(used == item.size(), ErrorCode::kInvalidArgument,
            flag + ": '" + item + "' is not an integer");
    values.push_back(static_cast<T>(v));
  }
  return values;
}

bool IsWav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

// WAV files under `root` (or `root` itself), sorted by relative path.
std::vector<fs::path> ListWavs(const fs::path& root) {
  Require(fs::exists(root), ErrorCode::kNotFound,
          "no such file or directory: " + root.string());
  if (!fs::is_directory(root)) return {fs::path()};
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && IsWav(entry.path())) {
      files.push_back(fs::relative(entry.path(), root));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

fs::path Join(const fs::path& root, const fs::path& rel) {
  return rel.empty() ? root : root / rel;
}

AudioBuffer LoadAt(const fs::path& path, int rate, std::ostream& err) {
  AudioBuffer audio = ReadWav(path);
  if (audio.sample_rate() != rate) {
    err << "warning: " << path.string() << ": resampling "
        << audio.sample_rate() << " Hz to " << rate << " Hz\n";
    audio = Resample(audio, rate);
  }
  return audio;
}

void WriteText(const fs::path& path, const std::string& text) {
  AtomicWriteFile(path, std::span(reinterpret_cast<const unsigned char*>(text.data()),
                                  text.size()));
}

int DefaultJobs() {
  if (const char* env = std::getenv("RVQKIT_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Turns a JSON object of flag values into command-line tokens.
std::vector<std::string> ConfigArgs(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  Json config;
  try {
    config = Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument,
         "config " + path.string() + " is not valid JSON: " + e.what());
  }
  Require(config.is_object(), ErrorCode::kInvalidArgument,
          "config " + path.string() + " must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ",";
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else {
      Fail(ErrorCode::kInvalidArgument, "config key '" + key +
                                            "' has an unsupported value type");
    }
  }
  return args;
}

// Splices `--config FILE` values in front of the flags, so flags win.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  std::vector<std::string> rest;
  std::optional<std::string> config;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      Require(i + 1 < args.size(), ErrorCode::kInvalidArgument,
              "--config needs a file argument");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  std::vector<std::string> out = {args[0]};
  if (config) {
    const auto from_file = ConfigArgs(*config);
    out.insert(out.end(), from_file.begin(), from_file.end());
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string heldout;
  std::string out;
  CodecConfig config;
  uint64_t seed = 0;
  std::string report_levels;
};

Json ReportJson(const TrainingReport& report) {
  Json rows = Json::array();
  for (const ReportRow& row : report.rows) {
    Json r;
    r["levels"] = row.n_levels;
    r["commitment"] = row.commitment;
    r["mel_loss"] = row.mel_loss ? Json(*row.mel_loss) : Json(nullptr);
    r["residual_energy"] = row.residual_energy;
    rows.push_back(r);
  }
  return rows;
}

int RunTrain(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  a.config.Validate();
  std::vector<size_t> report_levels;
  if (a.report_levels == "default") {
    report_levels = {1};
    if (a.config.num_levels > 1) report_levels.push_back(a.config.num_levels);
  } else {
    report_levels = ParseNumbers<size_t>(a.report_levels, "--report-levels");
  }
  for (size_t n : report_levels) {
    Require(n >= 1 && n <= static_cast<size_t>(a.config.num_levels),
            ErrorCode::kInvalidArgument, "--report-levels entry out of range");
  }
  Require(!a.out.empty(), ErrorCode::kInvalidArgument, "--out is required");

  const auto files = ListWavs(a.corpus);
  Require(!files.empty(), ErrorCode::kDataError,
          "corpus " + a.corpus + " holds no WAV files");
  std::vector<AudioBuffer> corpus;
  for (const auto& rel : files) {
    corpus.push_back(LoadAt(Join(a.corpus, rel), a.config.sample_rate, err));
  }
  std::vector<AudioBuffer> heldout;
  if (!a.heldout.empty()) {
    for (const auto& rel : ListWavs(a.heldout)) {
      heldout.push_back(LoadAt(Join(a.heldout, rel), a.config.sample_rate, err));
    }
    Require(!heldout.empty(), ErrorCode::kDataError,
            "held-out set " + a.heldout + " holds no WAV files");
  }

  const SpectralCodec codec = TrainCodec(corpus, a.config, a.seed);
  const auto bytes = SaveModel(codec);
  AtomicWriteFile(a.out, bytes);

  const TrainingReport report = MakeTrainingReport(
      codec, heldout.empty() ? std::span<const AudioBuffer>(corpus)
                             : std::span<const AudioBuffer>(heldout),
      report_levels);
  Json j;
  j["model"] = a.out;
  j["files"] = corpus.size();
  j["sample_rate"] = a.config.sample_rate;
  j["levels"] = a.config.num_levels;
  j["codebook_size"] = a.config.codebook_size;
  j["groups"] = a.config.num_groups;
  j["frame_rate"] = a.config.frame_rate();
  j["seed"] = a.seed;
  j["model_bytes"] = bytes.size();
  j["report_set"] = heldout.empty() ? "training" : "heldout";
  j["report"] = ReportJson(report);
  out << j.dump() << "\n";
  return kExitOk;
}

// --- encode / decode ------------------------------------------------------

struct EncodeArgs {
  std::string model;
  std::string in;
  std::string out;
  std::optional<double> bitrate;
  std::string random_bitrate;
  uint64_t seed = 0;
};

int RunEncode(const EncodeArgs& a, std::ostream& out, std::ostream& err) {
  Require(a.bitrate.has_value() != !a.random_bitrate.empty(),
          ErrorCode::kInvalidArgument,
          "give exactly one of --bitrate and --random-bitrate");
  double requested = 0.0;
  if (a.bitrate) {
    Require(*a.bitrate > 0.0, ErrorCode::kInvalidArgument,
            "--bitrate must be positive");
    requested = *a.bitrate;
  } else {
    const auto choices = ParseNumbers<int>(a.random_bitrate, "--random-bitrate");
    Require(!choices.empty(), ErrorCode::kInvalidArgument,
            "--random-bitrate list is empty");
    for (int c : choices) {
      Require(c > 0, ErrorCode::kInvalidArgument,
              "--random-bitrate entries must be positive");
    }
    Rng rng(a.seed);
    requested = SampleBitrate(choices, rng);
  }
  const SpectralCodec codec = LoadModel(ReadFileBytes(a.model));
  const AudioBuffer audio = LoadAt(a.in, codec.config().sample_rate, err);
  const EncodeResult result = codec.Encode(audio, requested);
  if (result.bitrate_clamped) {
    err << "warning: requested " << requested
        << " bps is outside the model's range; using "
        << result.stream.header.num_levels_used << " level(s)\n";
  }
  const auto bytes = SaveStream(result.stream);
  AtomicWriteFile(a.out, bytes);
  Json j;
  j["in"] = a.in;
  j["out"] = a.out;
  j["requested_bitrate"] = requested;
  j["levels"] = result.stream.header.num_levels_used;
  j["groups"] = result.stream.header.num_groups;
  j["frames"] = result.stream.header.num_frames;
  j["achieved_bitrate"] = result.stream.bitrate();
  j["clamped"] = result.bitrate_clamped;
  j["bytes"] = bytes.size();
  out << j.dump() << "\n";
  return kExitOk;
}

struct DecodeArgs {
  std::string model;
  std::string in;
  std::string out;
  std::string encoding = "pcm16";
};

int RunDecode(const DecodeArgs& a, std::ostream& out, std::ostream&) {
  Require(a.encoding == "pcm16" || a.encoding == "float32",
          ErrorCode::kInvalidArgument, "--encoding must be pcm16 or float32");
  const SpectralCodec codec = LoadModel(ReadFileBytes(a.model));
  const EncodedStream stream = LoadStream(ReadFileBytes(a.in));
  const AudioBuffer audio = codec.Decode(stream);
  WriteWav(audio, a.out,
           a.encoding == "pcm16" ? WavEncoding::kPcm16 : WavEncoding::kFloat32);
  Json j;
  j["in"] = a.in;
  j["out"] = a.out;
  j["frames"] = stream.header.num_frames;
  j["samples"] = audio.size();
  j["seconds"] = audio.duration_seconds();
  out << j.dump() << "\n";
  return kExitOk;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string ref;
  std::string deg;
  std::string metrics;
  std::string out;
  int jobs = 1;
  std::string resample = "to-min";
  int ci_sdr_taps = 512;
};

int RunEval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  EvalConfig config;
  if (!a.metrics.empty()) config.metrics = SplitList(a.metrics);
  config.resample = ParseResamplePolicy(a.resample);
  config.ci_sdr_taps = a.ci_sdr_taps;
  config.Validate();
  Require(a.jobs >= 1, ErrorCode::kInvalidArgument, "--jobs must be >= 1");

  struct Pair {
    std::string label;
    fs::path ref;
    fs::path deg;
  };
  std::vector<Pair> pairs;
  const bool ref_dir = fs::is_directory(a.ref);
  const bool deg_dir = fs::is_directory(a.deg);
  Require(ref_dir == deg_dir, ErrorCode::kInvalidArgument,
          "--ref and --deg must both be files or both be directories");
  size_t unpaired = 0;
  if (ref_dir) {
    const auto refs = ListWavs(a.ref);
    const auto degs = ListWavs(a.deg);
    for (const auto& rel : refs) {
      if (std::binary_search(degs.begin(), degs.end(), rel)) {
        pairs.push_back({rel.generic_string(), fs::path(a.ref) / rel,
                         fs::path(a.deg) / rel});
      } else {
        err << "unpaired reference: " << rel.generic_string() << "\n";
        ++unpaired;
      }
    }
    for (const auto& rel : degs) {
      if (!std::binary_search(refs.begin(), refs.end(), rel)) {
        err << "unpaired degraded file: " << rel.generic_string() << "\n";
        ++unpaired;
      }
    }
  } else {
    Require(fs::exists(a.ref), ErrorCode::kNotFound, "no such file: " + a.ref);
    Require(fs::exists(a.deg), ErrorCode::kNotFound, "no such file: " + a.deg);
    pairs.push_back({"", a.ref, a.deg});
  }

  std::vector<std::optional<std::string>> lines(pairs.size());
  std::vector<std::string> failures(pairs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < pairs.size(); i = next++) {
      try {
        const AudioBuffer ref = ReadWav(pairs[i].ref);
        const AudioBuffer deg = ReadWav(pairs[i].deg);
        const std::string ref_label =
            pairs[i].label.empty() ? a.ref : pairs[i].label;
        const std::string deg_label =
            pairs[i].label.empty() ? a.deg : pairs[i].label;
        lines[i] = EvaluatePair(ref, deg, config, ref_label, deg_label)
                       .ToJson()
                       .dump();
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int threads =
      static_cast<int>(std::min<size_t>(a.jobs, std::max<size_t>(pairs.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string text;
  size_t written = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (lines[i]) {
      text += *lines[i] + "\n";
      ++written;
    } else {
      err << "skipped " << pairs[i].ref.string() << ": " << failures[i] << "\n";
    }
  }
  if (written == 0) {
    err << "error: no pair could be evaluated\n";
    return kExitData;
  }
  if (a.out.empty()) {
    out << text;
  } else {
    WriteText(a.out, text);
    Json j;
    j["out"] = a.out;
    j["pairs"] = written;
    j["skipped"] = pairs.size() - written;
    j["unpaired"] = unpaired;
    out << j.dump() << "\n";
  }
  return kExitOk;
}

// --- losses ---------------------------------------------------------------

struct LossArgs {
  std::string ref;
  std::string deg;
  std::string scales = "32,64,128,256,512,1024,2048";
  std::string norm = "l1";
};

int RunLosses(const LossArgs& a, std::ostream& out, std::ostream& err) {
  ScaleSet scales{ParseNumbers<int>(a.scales, "--scales")};
  scales.Validate();
  const NormKind norm = ParseNormKind(a.norm);
  AudioBuffer ref = ReadWav(a.ref);
  AudioBuffer deg = ReadWav(a.deg);
  Require(ref.sample_rate() == deg.sample_rate(), ErrorCode::kRateMismatch,
          "--ref and --deg sample rates differ");
  // Tails shorter than the largest window are trimmed; longer gaps are errors.
  const size_t largest =
      static_cast<size_t>(*std::max_element(scales.window_sizes.begin(),
                                            scales.window_sizes.end()));
  const size_t common = std::min(ref.size(), deg.size());
  const size_t gap = std::max(ref.size(), deg.size()) - common;
  Require(gap <= largest, ErrorCode::kLengthMismatch,
          "lengths differ by " + std::to_string(gap) +
              " samples, more than the largest window");
  if (gap > 0) {
    err << "warning: trimming " << gap << " samples to a common length\n";
    auto trim = [common](const AudioBuffer& b) {
      return AudioBuffer(std::vector<double>(b.samples().begin(),
                                             b.samples().begin() + common),
                         b.sample_rate());
    };
    ref = trim(ref);
    deg = trim(deg);
  }
  Json j;
  j["norm"] = std::string(NormKindName(norm));
  j["scales"] = scales.window_sizes;
  j["samples"] = common;
  j["time_domain"] = TimeDomainLoss(ref, deg, norm);
  j["multi_scale_mel"] = MultiScaleMelLoss(ref, deg, scales, norm);
  out << j.dump() << "\n";
  return kExitOk;
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kOutOfRange:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int RunCli(const std::vector<std::string>& raw_args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Residual vector quantization codec toolkit", "rvqkit"};
  app.option_defaults()->take_last();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  const std::string config_help =
      "JSON file of flag values; explicit flags take precedence";

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a codec on a WAV corpus");
  train_cmd->add_option("--corpus", train.corpus, "WAV file or directory")->required();
  train_cmd->add_option("--heldout", train.heldout,
                        "WAV file or directory for the training report");
  train_cmd->add_option("--out", train.out, "Model output path")->required();
  train_cmd->add_option("--levels", train.config.num_levels, "Quantizer levels L");
  train_cmd->add_option("--codebook-size", train.config.codebook_size,
                        "Codes per codebook B");
  train_cmd->add_option("--groups", train.config.num_groups, "Quantizer groups G");
  train_cmd->add_option("--epochs", train.config.epochs, "EMA passes");
  train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--sample-rate", train.config.sample_rate, "Codec rate in Hz");
  train_cmd->add_option("--window", train.config.window, "STFT window");
  train_cmd->add_option("--hop", train.config.hop, "STFT hop");
  train_cmd->add_option("--n-mels", train.config.n_mels, "Mel bands");
  train_cmd->add_option("--gl-iterations", train.config.gl_iterations,
                        "Griffin-Lim iterations at decode time");
  train.report_levels = "default";
  train_cmd->add_option("--report-levels", train.report_levels,
                        "Comma-separated level counts for the report, or 'default'");
  train_cmd->add_option("--config", config_help);

  EncodeArgs encode;
  std::optional<double> bitrate;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a WAV file to a stream");
  encode_cmd->add_option("--model", encode.model, "Model file")->required();
  encode_cmd->add_option("--in", encode.in, "Input WAV")->required();
  encode_cmd->add_option("--out", encode.out, "Stream output path")->required();
  auto* bitrate_opt =
      encode_cmd->add_option("--bitrate", bitrate, "Target bits per second");
  auto* random_opt = encode_cmd->add_option(
      "--random-bitrate", encode.random_bitrate,
      "Comma-separated bitrates; one is drawn uniformly");
  bitrate_opt->excludes(random_opt);
  encode_cmd->add_option("--seed", encode.seed, "Seed for --random-bitrate");
  encode_cmd->add_option("--config", config_help);

  DecodeArgs decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a stream to WAV");
  decode_cmd->add_option("--model", decode.model, "Model file")->required();
  decode_cmd->add_option("--in", decode.in, "Input stream")->required();
  decode_cmd->add_option("--out", decode.out, "WAV output path")->required();
  decode_cmd->add_option("--encoding", decode.encoding, "pcm16 or float32");
  decode_cmd->add_option("--config", config_help);

  EvalArgs eval;
  eval.jobs = DefaultJobs();
  auto* eval_cmd = app.add_subcommand("eval", "Score degraded audio against references");
  eval_cmd->add_option("--ref", eval.ref, "Reference WAV or directory")->required();
  eval_cmd->add_option("--deg", eval.deg, "Degraded WAV or directory")->required();
  eval_cmd->add_option("--metrics", eval.metrics, "Comma-separated metric names");
  eval_cmd->add_option("--out", eval.out, "JSONL report path (default stdout)");
  eval_cmd->add_option("--jobs", eval.jobs, "Worker threads (env RVQKIT_JOBS)");
  eval_cmd->add_option("--resample", eval.resample, "none, to-min or to-ref");
  eval_cmd->add_option("--ci-sdr-taps", eval.ci_sdr_taps, "CI-SDR filter length");
  eval_cmd->add_option("--config", config_help);

  LossArgs losses;
  auto* losses_cmd = app.add_subcommand("losses", "Reconstruction losses of a pair");
  losses_cmd->add_option("--ref", losses.ref, "Reference WAV")->required();
  losses_cmd->add_option("--deg", losses.deg, "Degraded WAV")->required();
  losses_cmd->add_option("--scales", losses.scales, "Comma-separated STFT windows");
  losses_cmd->add_option("--norm", losses.norm, "l1, l2 or l1_plus_l2");
  losses_cmd->add_option("--config", config_help);

  try {
    std::vector<std::string> args = ExpandConfig(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  }

  try {
    if (*train_cmd) return RunTrain(train, out, err);
    if (*encode_cmd) {
      encode.bitrate = bitrate;
      return RunEncode(encode, out, err);
    }
    if (*decode_cmd) return RunDecode(decode, out, err);
    if (*eval_cmd) return RunEval(eval, out, err);
    if (*losses_cmd) return RunLosses(losses, out, err);
  } catch (const Error& e) {
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rvqkit
