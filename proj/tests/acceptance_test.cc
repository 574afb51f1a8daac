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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "oracles.h"
#include "rvqkit/audio.h"
#include "rvqkit/cli.h"
#include "rvqkit/codec.h"
#include "rvqkit/dsp.h"
#include "rvqkit/losses.h"
#include "rvqkit/metrics.h"
#include "rvqkit/quantizer.h"
#include "test_signals.h"

namespace rvqkit {
namespace {

namespace fs = std::filesystem;
using namespace rvqkit::testing;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failed check; later checks still run for the summary.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) {
      ++failed_;
      if (first_failure_.empty()) first_failure_ = what;
    }
  }
  Outcome Finish(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    return {false, std::to_string(failed_) + "/" + std::to_string(total_) +
                       " checks failed, first: " + first_failure_};
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::string first_failure_;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// 1. rvq_encode equals an exhaustive per-level search on random instances.
Outcome QuantizerOracle() {
  const auto start = std::chrono::steady_clock::now();
  Checker check;
  Rng rng(20260101);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t T = 1 + rng.UniformIndex(64);
    const size_t D = 1 + rng.UniformIndex(8);
    const size_t B = 1 + rng.UniformIndex(16);
    const size_t L = 1 + rng.UniformIndex(4);
    std::vector<RvqLevel> levels;
    for (size_t l = 0; l < L; ++l) {
      levels.push_back({Codebook(RandomMatrix(B, D, rng, 1.0 / (l + 1))), std::nullopt});
    }
    const RvqQuantizer q(std::move(levels));
    const Matrix x = RandomMatrix(T, D, rng);
    const QuantizedFrames out = RvqEncode(q, x, L);
    const bool same = out.codes.codes == BruteForceCodes(q, x, L);
    exact += same;
    check.Expect(same, "instance " + std::to_string(trial));
  }
  const double elapsed = Seconds(start);
  check.Expect(elapsed < 10.0, "runtime " + Fmt("%.2f s", elapsed));
  return check.Finish(std::to_string(exact) + "/200 instances index-exact in " +
                      Fmt("%.2f s", elapsed));
}

// 2. Training-set reconstruction error is non-increasing over levels.
Outcome ResidualMonotonicity() {
  Checker check;
  double worst_rise = -std::numeric_limits<double>::infinity();
  for (uint64_t corpus = 0; corpus < 20; ++corpus) {
    Rng rng(500 + corpus);
    const size_t D = 2 + corpus % 7;
    const size_t N = 200 + 20 * corpus;
    Matrix x;
    if (corpus % 2 == 0) {
      x = RandomMatrix(N, D, rng);
    } else {
      const auto g = Gaussian(N * D, 900 + corpus, 0.3);
      x = Matrix(N, D, std::vector<double>(g.begin(), g.end()));
      for (size_t t = 0; t < N; ++t) x(t, t % D) += (t % 3 == 0 ? 2.0 : -1.0);
    }
    const size_t L = 4;
    const RvqQuantizer q = TrainRvq(x, L, 8, 5, corpus);
    double last = std::numeric_limits<double>::infinity();
    for (size_t n = 1; n <= L; ++n) {
      const double e = MeanSquaredError(x, RvqEncode(q, x, n).reconstruction);
      if (n > 1) worst_rise = std::max(worst_rise, e - last);
      check.Expect(e <= last + 1e-12, "corpus " + std::to_string(corpus) +
                                          " level " + std::to_string(n));
      last = e;
    }
  }
  return check.Finish("20 corpora, largest level-to-level change " +
                      Fmt("%.3g", worst_rise));
}

// 3. {2, 4, 8, 16} kbps at B = 1024 and 50 Hz map to {4, 8, 16, 32} levels.
Outcome BitrateArithmetic() {
  Checker check;
  const CodecConfig config;
  check.Expect(config.num_levels == 32 && config.codebook_size == 1024,
               "default 32 x 1024");
  check.Expect(config.frame_rate() == 50.0, "50 Hz frame rate");
  const int rates[] = {2000, 4000, 8000, 16000};
  const size_t levels[] = {4, 8, 16, 32};
  for (int i = 0; i < 4; ++i) {
    check.Expect(LevelsForBitrate(rates[i], 1024, 50.0, 32) == levels[i],
                 std::to_string(rates[i]) + " bps");
    check.Expect(levels[i] * std::log2(1024.0) * 50.0 == rates[i],
                 "payload bitrate " + std::to_string(rates[i]));
  }
  check.Expect(32 * 10 * 50 == 16000, "ceiling 32 levels x 1024 codes = 16 kbps");
  return check.Finish("2/4/8/16 kbps -> 4/8/16/32 levels; 32 x 1024 = 16 kbps");
}

// 4. Losses vanish on perfect matches; hinge fixtures; default scale set.
Outcome LossIdentities() {
  const auto start = std::chrono::steady_clock::now();
  Checker check;
  const AudioBuffer s = Mix(Sawtooth(190.0, 16000, 0.5), Noise(8000, 16000, 4, 0.05));
  for (NormKind norm : {NormKind::kL1, NormKind::kL2, NormKind::kL1PlusL2}) {
    const std::string name(NormKindName(norm));
    check.Expect(TimeDomainLoss(s, s, norm) == 0.0, "time-domain " + name);
    check.Expect(MultiScaleMelLoss(s, s, ScaleSet::Default(), norm) == 0.0,
                 "multi-scale mel " + name);
  }

  const DiscriminatorOutput real{{0.8, 1.2, 1.0}, {{0.1, 0.2}, {0.3}}};
  const std::vector<DiscriminatorOutput> reals = {real, real};
  check.Expect(FeatureMatchingLoss(reals, reals) == 0.0, "feature matching");
  const std::vector<DiscriminatorOutput> ones = {{{1.0, 1.0}, {}}, {{1.0}, {}}};
  check.Expect(GeneratorAdversarialLoss(ones) == 0.0, "generator at D = 1");
  const std::vector<DiscriminatorOutput> minus = {{{-1.0, -1.0}, {}}, {{-1.0}, {}}};
  check.Expect(DiscriminatorLoss(ones, minus) == 0.0, "discriminator separated");
  const std::vector<DiscriminatorOutput> zeros = {{{0.0, 0.0}, {}}, {{0.0}, {}}};
  check.Expect(GeneratorAdversarialLoss(zeros) == 1.0, "generator hinge 1.0");
  check.Expect(DiscriminatorLoss(zeros, zeros) == 2.0, "discriminator hinge 2.0");

  // Embeddings on level-1 codes with a zero code at level 2.
  const RvqQuantizer q({{Codebook(Matrix(2, 2, {0.5, -0.5, 1.5, 2.0})), std::nullopt},
                        {Codebook(Matrix(2, 2, {0.0, 0.0, 0.3, 0.3})), std::nullopt}});
  const Matrix e(3, 2, {0.5, -0.5, 1.5, 2.0, 0.5, -0.5});
  for (NormKind norm : {NormKind::kL1, NormKind::kL2}) {
    const CommitmentBreakdown c = CommitmentLoss(e, q, 2, norm);
    check.Expect(c.total == 0.0 && c.global == 0.0, "commitment");
  }
  const std::vector<WeightedTerm> terms = {{"a", 1.0, 0.0}, {"b", 45.0, 0.0}};
  check.Expect(CombineLosses(terms).total == 0.0, "composite");

  // Scale set 2^5..2^11, each scale at hop = window / 4.
  const ScaleSet scales = ScaleSet::Default();
  check.Expect(scales.window_sizes == std::vector<int>{32, 64, 128, 256, 512, 1024, 2048},
               "default windows");
  const AudioBuffer other = Mix(s, Noise(s.size(), 16000, 5, 0.05));
  for (int w : scales.window_sizes) {
    MelOptions options;
    options.n_mels = MelBandsForWindow(w);
    const StftConfig stft{w, w / 4};
    const auto a = ComputeMelSpectrogram(s, stft, options).values;
    const auto b = ComputeMelSpectrogram(other, stft, options).values;
    double acc = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) acc += std::abs(a.data()[i] - b.data()[i]);
    const double expected = acc / static_cast<double>(a.data().size());
    const double got = MultiScaleMelLoss(s, other, ScaleSet{{w}}, NormKind::kL1);
    check.Expect(std::abs(got - expected) <= 1e-12 * std::max(1.0, expected),
                 "hop = window / 4 at " + std::to_string(w));
  }
  const double elapsed = Seconds(start);
  check.Expect(elapsed < 30.0, "runtime " + Fmt("%.2f s", elapsed));
  return check.Finish("exact zeros, hinge 1.0 / 2.0, windows 32..2048 hop w/4 in " +
                      Fmt("%.2f s", elapsed));
}

// 5. Metric fixtures.
Outcome MetricFixtures() {
  Checker check;
  const AudioBuffer x = Mix(Sawtooth(180.0, 16000, 1.0), Noise(16000, 16000, 3, 0.02));
  check.Expect(Mcd(x, x) == 0.0, "MCD(x, x)");

  Matrix ca(10, 25, 0.0);
  Matrix cb = ca;
  for (size_t t = 0; t < cb.rows(); ++t) cb(t, 3) = 1.0;
  const double unit = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;
  check.Expect(std::abs(McdFromCepstra(ca, cb, 24) - unit) <= 1e-9, "unit MCD");

  const AudioBuffer s({1.0, -1.0, 1.0, -1.0}, 8000);
  const AudioBuffer e({2.0, 0.0, 0.0, -2.0}, 8000);
  check.Expect(std::abs(SiSnr(s, e)) <= 1e-9, "SI-SNR orthogonal");

  std::vector<double> delayed(x.size(), 0.0);
  for (size_t i = 10; i < delayed.size(); ++i) delayed[i] = x.samples()[i - 10];
  check.Expect(CiSdr(x, AudioBuffer(delayed, 16000), 512) == kSdrClampDb,
               "CI-SDR delay clamp");

  const fs::path dir = fs::path(RVQKIT_TEST_DATA_DIR) / "stoi";
  const AudioBuffer speech = ReadWav(dir / "snr20_ref.wav");
  check.Expect(std::abs(Stoi(speech, speech).value - 1.0) <= 1e-6, "STOI(x, x)");
  std::ifstream in(dir / "expected.json");
  const nlohmann::json expected = nlohmann::json::parse(in);
  double worst = 0.0;
  int cross_checks = 0;
  for (const auto& [name, value] : expected.items()) {
    if (name == "steady_vs_noise") continue;  // bound fixture, not a cross-check
    const double got = Stoi(ReadWav(dir / (name + "_ref.wav")),
                            ReadWav(dir / (name + "_deg.wav")))
                           .value;
    worst = std::max(worst, std::abs(got - value.get<double>()));
    check.Expect(std::abs(got - value.get<double>()) <= 0.01, "STOI " + name);
    ++cross_checks;
  }
  check.Expect(cross_checks == 10, "10 STOI cross-check signals");

  const MetricValue f0 =
      F0Rmse(Sawtooth(220.0, 16000, 1.0), Sawtooth(225.0, 16000, 1.0));
  check.Expect(f0.defined() && std::abs(*f0.value - 5.0) <= 0.5, "F0-RMSE 220/225");
  return check.Finish("STOI max deviation " + Fmt("%.2e", worst) + " over " +
                      std::to_string(cross_checks) + " signals; F0-RMSE " +
                      Fmt("%.3f Hz", f0.value.value_or(NAN)));
}

// 6. EMA training on a 4-blob mixture reaches k-means distortion.
Outcome EmaConvergence() {
  const auto start = std::chrono::steady_clock::now();
  Checker check;
  const Matrix x = Mixture(4096, 42);
  const RvqQuantizer q = TrainRvq(x, 1, 4, 10, 7);
  const double got = QuantizationDistortion(q.level(0).codebook, x);
  const double elapsed = Seconds(start);
  const double oracle = OracleKmeansDistortion(x, 4, 99);
  check.Expect(got <= 1.10 * oracle, "distortion " + Fmt("%.4f", got) +
                                         " vs oracle " + Fmt("%.4f", oracle));
  check.Expect(elapsed < 5.0, "runtime " + Fmt("%.2f s", elapsed));
  return check.Finish("distortion " + Fmt("%.4f", got) + " vs k-means " +
                      Fmt("%.4f", oracle) + " (ratio " +
                      Fmt("%.3f", got / oracle) + ") in " + Fmt("%.2f s", elapsed));
}

int Cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o;
  std::ostringstream e;
  const int code = RunCli(args, o, e);
  if (out) *out = o.str();
  if (code != kExitOk) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// One train -> encode -> decode -> eval pass over `root`/corpus.
bool Pipeline(const fs::path& root) {
  const fs::path run = root / "run";
  fs::create_directories(run / "streams");
  fs::create_directories(run / "decoded");
  const std::string model = (run / "model.espk").string();
  bool ok = Cli({"train", "--corpus", (root / "corpus").string(), "--out", model,
                 "--levels", "4", "--codebook-size", "16", "--epochs", "4",
                 "--gl-iterations", "32", "--seed", "17"}) == kExitOk;
  for (int k = 0; ok && k < 10; ++k) {
    const std::string name = "tone" + std::to_string(k);
    ok = Cli({"encode", "--model", model, "--in",
              (root / "corpus" / (name + ".wav")).string(), "--out",
              (run / "streams" / (name + ".espc")).string(), "--random-bitrate",
              "200,400,600,800", "--seed", std::to_string(k)}) == kExitOk &&
         Cli({"decode", "--model", model, "--in",
              (run / "streams" / (name + ".espc")).string(), "--out",
              (run / "decoded" / (name + ".wav")).string()}) == kExitOk;
  }
  return ok && Cli({"eval", "--ref", (root / "corpus").string(), "--deg",
                    (run / "decoded").string(), "--out",
                    (run / "report.jsonl").string(), "--jobs", "4"}) == kExitOk;
}

// 7. Two identical end-to-end runs produce identical files.
Outcome EndToEndDeterminism() {
  const auto start = std::chrono::steady_clock::now();
  Checker check;
  TempDir dir("acceptance");
  fs::create_directories(dir / "corpus");
  for (int k = 0; k < 10; ++k) {
    const double f = 110.0 + 20.0 * k;
    WriteWav(Mix(Sawtooth(f, 16000, 1.0, 0.3), Sine(2.0 * f + 7.0, 16000, 1.0, 0.1)),
             dir / "corpus" / ("tone" + std::to_string(k) + ".wav"),
             WavEncoding::kPcm16);
  }
  check.Expect(Pipeline(dir.path()), "first run");
  fs::rename(dir / "run", dir / "first");
  check.Expect(Pipeline(dir.path()), "second run");
  size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "first")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "first");
    check.Expect(Slurp(entry.path()) == Slurp(dir / "run" / rel),
                 rel.string() + " differs");
    ++compared;
  }
  check.Expect(compared == 1 + 10 + 10 + 1, "file count " + std::to_string(compared));
  const double elapsed = Seconds(start);
  check.Expect(elapsed < 120.0, "runtime " + Fmt("%.1f s", elapsed));
  return check.Finish(std::to_string(compared) +
                      " files byte-identical (model, streams, WAVs, report) in " +
                      Fmt("%.1f s", elapsed));
}

// 8. Model and stream serialization is byte-idempotent with exact sizes.
Outcome Serialization() {
  Checker check;
  std::vector<AudioBuffer> corpus;
  for (double f : {120.0, 170.0, 220.0, 270.0}) corpus.push_back(Sawtooth(f, 16000, 1.0, 0.4));
  const AudioBuffer clip = Sawtooth(195.0, 16000, 0.87, 0.4);
  for (int groups : {1, 2}) {
    CodecConfig config;
    config.codebook_size = 16;
    config.num_levels = 4;
    config.num_groups = groups;
    config.epochs = 2;
    const SpectralCodec codec = TrainCodec(corpus, config, 5);
    const auto model = SaveModel(codec);
    check.Expect(SaveModel(LoadModel(model)) == model, "model idempotence");
    for (size_t levels = 1; levels <= 4; ++levels) {
      const EncodedStream stream = codec.EncodeLevels(clip, levels).stream;
      const auto bytes = SaveStream(stream);
      check.Expect(SaveStream(LoadStream(bytes)) == bytes, "stream idempotence");
      check.Expect(LoadStream(bytes) == stream, "stream equality");
      const size_t payload = bytes.size() - kStreamHeaderBytes;
      check.Expect(payload == stream.header.num_frames * levels * groups * 2,
                   "payload size G=" + std::to_string(groups) +
                       " L=" + std::to_string(levels));
    }
  }
  return check.Finish("model and stream save/load/save identical; payload = frames*levels*G*2");
}

}  // namespace
}  // namespace rvqkit

int main() {
  using rvqkit::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 quantizer oracle suite", rvqkit::QuantizerOracle},
      {"2 residual monotonicity", rvqkit::ResidualMonotonicity},
      {"3 bitrate arithmetic", rvqkit::BitrateArithmetic},
      {"4 loss identities", rvqkit::LossIdentities},
      {"5 metric fixtures", rvqkit::MetricFixtures},
      {"6 EMA training convergence", rvqkit::EmaConvergence},
      {"7 end-to-end determinism", rvqkit::EndToEndDeterminism},
      {"8 serialization", rvqkit::Serialization},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("%s [%s] %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
