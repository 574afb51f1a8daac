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

#include "rvqkit/metrics.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>

#include "rvqkit/fft.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

void RequireSameRate(const AudioBuffer& a, const AudioBuffer& b) {
  Require(a.sample_rate() == b.sample_rate(), ErrorCode::kRateMismatch,
          "sample rates differ: " + std::to_string(a.sample_rate()) + " vs " +
              std::to_string(b.sample_rate()));
}

void RequireSameLength(const AudioBuffer& a, const AudioBuffer& b) {
  Require(a.size() == b.size(), ErrorCode::kLengthMismatch,
          "signal lengths differ: " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
}

double ClampDb(double signal_energy, double noise_energy) {
  if (noise_energy <= 0.0) return kSdrClampDb;
  if (signal_energy <= 0.0) return -kSdrClampDb;
  return std::clamp(10.0 * std::log10(signal_energy / noise_energy),
                    -kSdrClampDb, kSdrClampDb);
}

AudioBuffer Truncate(const AudioBuffer& a, size_t n) {
  if (a.size() == n) return a;
  return AudioBuffer(
      std::vector<double>(a.samples().begin(), a.samples().begin() + n),
      a.sample_rate());
}

std::string Fnv1aHex(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- STOI internals -------------------------------------------------------

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr int kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// MATLAB hanning(n): the symmetric Hann window without its zero end points.
std::vector<double> MatlabHanning(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  }
  return w;
}

// Rows of bins per band; bin ranges are [low, high).
std::vector<std::pair<int, int>> ThirdOctaveBands() {
  const int bins = kStoiFft / 2 + 1;
  auto nearest = [&](double f) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bins; ++k) {
      const double fk = static_cast<double>(k) * kStoiRate / kStoiFft;
      const double d = (fk - f) * (fk - f);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int k = 0; k < kStoiBands; ++k) {
    const double lo = kStoiMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kStoiMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));
  }
  return bands;
}

void RemoveSilentFrames(std::span<const double> x, std::span<const double> y,
                        std::vector<double>& x_out, std::vector<double>& y_out) {
  const int hop = kStoiFrame / 2;
  const auto w = MatlabHanning(kStoiFrame);
  const long n = static_cast<long>(x.size());
  std::vector<long> starts;
  for (long i = 0; i < n - kStoiFrame; i += hop) starts.push_back(i);

  std::vector<double> energy(starts.size());
  for (size_t f = 0; f < starts.size(); ++f) {
    double acc = 0.0;
    for (int i = 0; i < kStoiFrame; ++i) {
      const double v = w[i] * x[starts[f] + i];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  const double peak =
      energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());
  std::vector<long> kept;
  for (size_t f = 0; f < starts.size(); ++f) {
    if (peak - kStoiDynRange - energy[f] < 0.0) kept.push_back(starts[f]);
  }
  const size_t length =
      kept.empty() ? 0 : (kept.size() - 1) * hop + kStoiFrame;
  x_out.assign(length, 0.0);
  y_out.assign(length, 0.0);
  for (size_t f = 0; f < kept.size(); ++f) {
    for (int i = 0; i < kStoiFrame; ++i) {
      x_out[f * hop + i] += w[i] * x[kept[f] + i];
      y_out[f * hop + i] += w[i] * y[kept[f] + i];
    }
  }
}

// Third-octave band envelopes, bands x frames.
Matrix ThirdOctaveEnvelopes(const std::vector<double>& x,
                            const std::vector<std::pair<int, int>>& bands) {
  const int hop = kStoiFrame / 2;
  const auto w = MatlabHanning(kStoiFrame);
  std::vector<long> starts;
  for (long i = 0; i < static_cast<long>(x.size()) - kStoiFrame; i += hop) {
    starts.push_back(i);
  }
  RealFft fft(kStoiFft);
  std::vector<double> frame(kStoiFft, 0.0);
  std::vector<std::complex<double>> spec(fft.bins());
  Matrix env(kStoiBands, starts.size());
  for (size_t f = 0; f < starts.size(); ++f) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int i = 0; i < kStoiFrame; ++i) frame[i] = w[i] * x[starts[f] + i];
    fft.Forward(frame, spec);
    for (int b = 0; b < kStoiBands; ++b) {
      double acc = 0.0;
      for (int k = bands[b].first; k < bands[b].second; ++k) {
        acc += std::norm(spec[k]);
      }
      env(b, f) = std::sqrt(acc);
    }
  }
  return env;
}

double Norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

double McdFromCepstra(const Matrix& reference, const Matrix& degraded,
                      int order) {
  Require(reference.cols() == degraded.cols(), ErrorCode::kInvalidArgument,
          "cepstra have different orders");
  Require(order >= 1 && static_cast<size_t>(order) < reference.cols(),
          ErrorCode::kInvalidArgument, "MCD order out of range");
  const size_t frames = std::min(reference.rows(), degraded.rows());
  Require(frames >= 1, ErrorCode::kTooShort, "MCD needs at least one frame");
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (int d = 1; d <= order; ++d) {
      const double diff = reference(t, d) - degraded(t, d);
      acc += diff * diff;
    }
    total += k * std::sqrt(2.0 * acc);
  }
  return total / static_cast<double>(frames);
}

double Mcd(const AudioBuffer& reference, const AudioBuffer& degraded,
           const McdOptions& options) {
  RequireSameRate(reference, degraded);
  const size_t ref_frames = StftFrameCount(reference.size(), options.stft);
  const size_t deg_frames = StftFrameCount(degraded.size(), options.stft);
  Require(std::max(ref_frames, deg_frames) - std::min(ref_frames, deg_frames) <= 1,
          ErrorCode::kLengthMismatch,
          "MCD inputs differ by more than one hop in duration");
  MelOptions mel;
  mel.n_mels = options.n_mels;
  mel.log = true;
  const auto a =
      MelCepstrum(ComputeMelSpectrogram(reference, options.stft, mel), options.order);
  const auto b =
      MelCepstrum(ComputeMelSpectrogram(degraded, options.stft, mel), options.order);
  return McdFromCepstra(a, b, options.order);
}

MetricValue F0RmseFromTracks(const PitchTrack& reference,
                             const PitchTrack& degraded) {
  const size_t n = std::min(reference.size(), degraded.size());
  double acc = 0.0;
  size_t count = 0;
  for (size_t t = 0; t < n; ++t) {
    if (!reference.voiced[t] || !degraded.voiced[t]) continue;
    const double d = reference.f0[t] - degraded.f0[t];
    acc += d * d;
    ++count;
  }
  if (count == 0) return MetricValue::Undefined("no_covoiced_frames");
  return MetricValue::Of(std::sqrt(acc / static_cast<double>(count)));
}

MetricValue F0CorrFromTracks(const PitchTrack& reference,
                             const PitchTrack& degraded) {
  const size_t n = std::min(reference.size(), degraded.size());
  std::vector<double> a;
  std::vector<double> b;
  for (size_t t = 0; t < n; ++t) {
    if (reference.voiced[t] && degraded.voiced[t]) {
      a.push_back(reference.f0[t]);
      b.push_back(degraded.f0[t]);
    }
  }
  if (a.size() < 2) return MetricValue::Undefined("insufficient_covoiced_frames");
  const double count = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= count;
  mean_b /= count;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - mean_a) * (b[i] - mean_b);
    saa += (a[i] - mean_a) * (a[i] - mean_a);
    sbb += (b[i] - mean_b) * (b[i] - mean_b);
  }
  // Variance below ~1e-12 relative is treated as exactly zero.
  const double floor_a = 1e-24 * mean_a * mean_a * count;
  const double floor_b = 1e-24 * mean_b * mean_b * count;
  if (saa <= floor_a || sbb <= floor_b) {
    return MetricValue::Undefined("zero_variance");
  }
  return MetricValue::Of(std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0));
}

namespace {

std::pair<PitchTrack, PitchTrack> TrackBoth(const AudioBuffer& reference,
                                            const AudioBuffer& degraded,
                                            const F0Options& options) {
  RequireSameRate(reference, degraded);
  const int hop = std::max(
      1, static_cast<int>(std::lround(options.hop_seconds * reference.sample_rate())));
  return {TrackPitch(reference, hop, options.f_min, options.f_max, options.pitch),
          TrackPitch(degraded, hop, options.f_min, options.f_max, options.pitch)};
}

}  // namespace

MetricValue F0Rmse(const AudioBuffer& reference, const AudioBuffer& degraded,
                   const F0Options& options) {
  const auto [a, b] = TrackBoth(reference, degraded, options);
  return F0RmseFromTracks(a, b);
}

MetricValue F0Corr(const AudioBuffer& reference, const AudioBuffer& degraded,
                   const F0Options& options) {
  const auto [a, b] = TrackBoth(reference, degraded, options);
  return F0CorrFromTracks(a, b);
}

double SiSnr(const AudioBuffer& reference, const AudioBuffer& degraded) {
  RequireSameRate(reference, degraded);
  RequireSameLength(reference, degraded);
  const size_t n = reference.size();
  Require(n > 0, ErrorCode::kTooShort, "SI-SNR of empty signals");
  const auto s_in = reference.samples();
  const auto e_in = degraded.samples();
  double mean_s = 0.0;
  double mean_e = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_s += s_in[i];
    mean_e += e_in[i];
  }
  mean_s /= static_cast<double>(n);
  mean_e /= static_cast<double>(n);
  double dot = 0.0;
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double s = s_in[i] - mean_s;
    dot += (e_in[i] - mean_e) * s;
    ss += s * s;
  }
  Require(ss > 0.0, ErrorCode::kDegenerateInput,
          "SI-SNR reference is zero after mean removal");
  const double alpha = dot / ss;
  double target = 0.0;
  double noise = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = alpha * (s_in[i] - mean_s);
    const double e = (e_in[i] - mean_e) - t;
    target += t * t;
    noise += e * e;
  }
  return ClampDb(target, noise);
}

double CiSdr(const AudioBuffer& reference, const AudioBuffer& degraded,
             int taps) {
  RequireSameRate(reference, degraded);
  RequireSameLength(reference, degraded);
  Require(taps >= 1, ErrorCode::kInvalidArgument, "CI-SDR taps must be >= 1");
  const auto s = reference.samples();
  const auto e = degraded.samples();
  const long n = static_cast<long>(s.size());
  const long p = taps;
  Require(n > p, ErrorCode::kTooShort,
          "CI-SDR needs more samples than filter taps");
  double energy = 0.0;
  for (double v : s) energy += v * v;
  Require(energy > 0.0, ErrorCode::kDegenerateInput,
          "CI-SDR reference is all zero");

  // Normal equations of min_h ||e - (h * s)[0, n)||^2. The Gram matrix is
  // Toeplitz up to the truncation at the end of the signal:
  // R(i+1, j+1) = R(i, j) - s[n-1-j] * s[n-1-i].
  Eigen::MatrixXd gram(p, p);
  for (long j = 0; j < p; ++j) {
    double acc = 0.0;
    for (long m = 0; m + j < n; ++m) acc += s[m] * s[m + j];
    gram(0, j) = acc;
  }
  for (long i = 0; i + 1 < p; ++i) {
    for (long j = i; j + 1 < p; ++j) {
      gram(i + 1, j + 1) = gram(i, j) - s[n - 1 - j] * s[n - 1 - i];
    }
  }
  for (long i = 0; i < p; ++i) {
    for (long j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }
  Eigen::VectorXd cross(p);
  for (long i = 0; i < p; ++i) {
    double acc = 0.0;
    for (long k = i; k < n; ++k) acc += e[k] * s[k - i];
    cross(i) = acc;
  }
  Eigen::VectorXd h = gram.ldlt().solve(cross);
  if (!h.allFinite()) {
    h = gram.completeOrthogonalDecomposition().solve(cross);
  }

  double target = 0.0;
  double noise = 0.0;
  for (long k = 0; k < n; ++k) {
    double y = 0.0;
    const long top = std::min(k, p - 1);
    for (long i = 0; i <= top; ++i) y += h(i) * s[k - i];
    target += y * y;
    noise += (e[k] - y) * (e[k] - y);
  }
  return ClampDb(target, noise);
}

StoiResult Stoi(const AudioBuffer& reference, const AudioBuffer& degraded) {
  RequireSameRate(reference, degraded);
  RequireSameLength(reference, degraded);
  StoiResult result;
  result.upsampled = reference.sample_rate() < kStoiRate;
  const AudioBuffer x = Resample(reference, kStoiRate);
  const AudioBuffer y = Resample(degraded, kStoiRate);

  std::vector<double> xs;
  std::vector<double> ys;
  RemoveSilentFrames(x.samples(), y.samples(), xs, ys);
  static const auto bands = ThirdOctaveBands();
  const Matrix x_env = ThirdOctaveEnvelopes(xs, bands);
  const Matrix y_env = ThirdOctaveEnvelopes(ys, bands);
  const size_t frames = x_env.cols();
  Require(frames >= static_cast<size_t>(kStoiSegment), ErrorCode::kTooShort,
          "fewer than 30 frames remain after silent-frame removal");

  const double clip = std::pow(10.0, -kStoiBeta / 20.0);
  std::vector<double> xv(kStoiSegment);
  std::vector<double> yv(kStoiSegment);
  double total = 0.0;
  size_t segments = 0;
  for (size_t m = kStoiSegment; m <= frames; ++m, ++segments) {
    for (int b = 0; b < kStoiBands; ++b) {
      for (int i = 0; i < kStoiSegment; ++i) {
        xv[i] = x_env(b, m - kStoiSegment + i);
        yv[i] = y_env(b, m - kStoiSegment + i);
      }
      const double scale = Norm(xv) / (Norm(yv) + kEps);
      double mean_x = 0.0;
      double mean_y = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) {
        yv[i] = std::min(yv[i] * scale, xv[i] * (1.0 + clip));
        mean_x += xv[i];
        mean_y += yv[i];
      }
      mean_x /= kStoiSegment;
      mean_y /= kStoiSegment;
      for (int i = 0; i < kStoiSegment; ++i) {
        xv[i] -= mean_x;
        yv[i] -= mean_y;
      }
      const double nx = Norm(xv) + kEps;
      const double ny = Norm(yv) + kEps;
      double acc = 0.0;
      for (int i = 0; i < kStoiSegment; ++i) acc += (xv[i] / nx) * (yv[i] / ny);
      total += acc;
    }
  }
  result.value = total / static_cast<double>(segments * kStoiBands);
  return result;
}

ResamplePolicy ParseResamplePolicy(const std::string& name) {
  if (name == "none") return ResamplePolicy::kNone;
  if (name == "to-min") return ResamplePolicy::kToMin;
  if (name == "to-ref") return ResamplePolicy::kToReference;
  Fail(ErrorCode::kInvalidArgument,
       "unknown resample policy '" + name + "' (none, to-min, to-ref)");
}

std::string ResamplePolicyName(ResamplePolicy policy) {
  switch (policy) {
    case ResamplePolicy::kNone:
      return "none";
    case ResamplePolicy::kToMin:
      return "to-min";
    case ResamplePolicy::kToReference:
      return "to-ref";
  }
  return "none";
}

const std::vector<std::string>& SupportedMetrics() {
  static const std::vector<std::string> names = {"mcd",    "f0_rmse",
                                                 "f0_corr", "si_snr",
                                                 "ci_sdr", "stoi"};
  return names;
}

bool IsKnownMetric(const std::string& name) {
  if (name == "pesq") return true;
  const auto& names = SupportedMetrics();
  return std::find(names.begin(), names.end(), name) != names.end();
}

void EvalConfig::Validate() const {
  Require(!metrics.empty(), ErrorCode::kInvalidArgument,
          "no metrics requested");
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    Require(IsKnownMetric(m), ErrorCode::kInvalidArgument,
            "unknown metric '" + m + "'");
    Require(seen.insert(m).second, ErrorCode::kInvalidArgument,
            "metric '" + m + "' requested twice");
  }
  mcd.stft.Validate();
  Require(mcd.order >= 1 && mcd.order < mcd.n_mels, ErrorCode::kInvalidArgument,
          "MCD order must lie in [1, n_mels)");
  Require(f0.f_min > 0.0 && f0.f_min < f0.f_max, ErrorCode::kInvalidArgument,
          "invalid F0 search range");
  Require(f0.hop_seconds > 0.0, ErrorCode::kInvalidArgument,
          "F0 hop must be positive");
  Require(ci_sdr_taps >= 1, ErrorCode::kInvalidArgument,
          "CI-SDR taps must be >= 1");
}

nlohmann::ordered_json EvalConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["metrics"] = metrics;
  j["mcd"] = {{"window", mcd.stft.window_size},
              {"hop", mcd.stft.hop},
              {"n_mels", mcd.n_mels},
              {"order", mcd.order}};
  j["f0"] = {{"f_min", f0.f_min},
             {"f_max", f0.f_max},
             {"hop_seconds", f0.hop_seconds},
             {"threshold", f0.pitch.threshold},
             {"frame_seconds", f0.pitch.frame_seconds}};
  j["ci_sdr_taps"] = ci_sdr_taps;
  j["resample"] = ResamplePolicyName(resample);
  return j;
}

const MetricValue* MetricReport::Find(const std::string& name) const {
  for (const auto& [key, value] : entries) {
    if (key == name) return &value;
  }
  return nullptr;
}

nlohmann::ordered_json MetricReport::ToJson() const {
  nlohmann::ordered_json j;
  j["ref"] = reference_label;
  j["deg"] = degraded_label;
  j["sample_rate"] = sample_rate;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
  for (const auto& [name, value] : entries) {
    if (value.defined()) {
      metrics[name] = *value.value;
    } else {
      metrics[name] = nullptr;
      reasons[name] = value.reason;
    }
  }
  j["metrics"] = metrics;
  j["reasons"] = reasons;
  j["metadata"] = {{"reference_rate", reference_rate},
                   {"degraded_rate", degraded_rate},
                   {"reference_seconds", reference_seconds},
                   {"degraded_seconds", degraded_seconds},
                   {"evaluated_seconds", evaluated_seconds},
                   {"warnings", warnings},
                   {"config_digest", config_digest}};
  return j;
}

MetricReport EvaluatePair(const AudioBuffer& reference,
                          const AudioBuffer& degraded, const EvalConfig& config,
                          std::string reference_label,
                          std::string degraded_label) {
  config.Validate();
  MetricReport report;
  report.reference_label = std::move(reference_label);
  report.degraded_label = std::move(degraded_label);
  report.reference_rate = reference.sample_rate();
  report.degraded_rate = degraded.sample_rate();
  report.reference_seconds = reference.duration_seconds();
  report.degraded_seconds = degraded.duration_seconds();
  report.config_digest = Fnv1aHex(config.ToJson().dump());

  auto fail_all = [&](const std::string& reason) {
    for (const auto& m : config.metrics) {
      report.entries.emplace_back(m, MetricValue::Undefined(reason));
    }
    return report;
  };

  int rate = reference.sample_rate();
  switch (config.resample) {
    case ResamplePolicy::kNone:
      if (reference.sample_rate() != degraded.sample_rate()) {
        report.sample_rate = rate;
        return fail_all(std::string(ErrorCodeName(ErrorCode::kRateMismatch)));
      }
      break;
    case ResamplePolicy::kToMin:
      rate = std::min(reference.sample_rate(), degraded.sample_rate());
      break;
    case ResamplePolicy::kToReference:
      break;
  }
  report.sample_rate = rate;
  AudioBuffer ref = Resample(reference, rate);
  AudioBuffer deg = Resample(degraded, rate);
  if (rate != reference.sample_rate()) {
    report.warnings.push_back("reference resampled to " + std::to_string(rate));
  }
  if (rate != degraded.sample_rate()) {
    report.warnings.push_back("degraded resampled to " + std::to_string(rate));
  }
  const size_t common = std::min(ref.size(), deg.size());
  if (ref.size() != deg.size()) {
    report.warnings.push_back("trimmed to common length " +
                              std::to_string(common));
    ref = Truncate(ref, common);
    deg = Truncate(deg, common);
  }
  report.evaluated_seconds = static_cast<double>(common) / rate;
  if (common == 0) return fail_all(std::string(ErrorCodeName(ErrorCode::kTooShort)));

  std::optional<std::pair<PitchTrack, PitchTrack>> tracks;
  auto pitch = [&]() -> const std::pair<PitchTrack, PitchTrack>& {
    if (!tracks) tracks = TrackBoth(ref, deg, config.f0);
    return *tracks;
  };

  for (const auto& name : config.metrics) {
    MetricValue value;
    try {
      if (name == "mcd") {
        value = MetricValue::Of(Mcd(ref, deg, config.mcd));
      } else if (name == "f0_rmse") {
        value = F0RmseFromTracks(pitch().first, pitch().second);
      } else if (name == "f0_corr") {
        value = F0CorrFromTracks(pitch().first, pitch().second);
      } else if (name == "si_snr") {
        value = MetricValue::Of(SiSnr(ref, deg));
      } else if (name == "ci_sdr") {
        value = MetricValue::Of(CiSdr(ref, deg, config.ci_sdr_taps));
      } else if (name == "stoi") {
        const StoiResult stoi = Stoi(ref, deg);
        if (stoi.upsampled) {
          report.warnings.push_back("stoi: input upsampled to 10000 Hz");
        }
        value = MetricValue::Of(stoi.value);
      } else {
        value = MetricValue::Undefined("not_implemented");
      }
    } catch (const Error& e) {
      value = MetricValue::Undefined(std::string(ErrorCodeName(e.code())));
    } catch (const std::exception&) {
      value = MetricValue::Undefined("internal_error");
    }
    report.entries.emplace_back(name, std::move(value));
  }
  return report;
}

}  // namespace rvqkit
