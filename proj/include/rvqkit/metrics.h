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

#ifndef RVQKIT_METRICS_H_
#define RVQKIT_METRICS_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"
#include "rvqkit/audio.h"
#include "rvqkit/dsp.h"
#include "rvqkit/matrix.h"

namespace rvqkit {

// A metric value, or the machine-readable reason it is undefined.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  static MetricValue Of(double v) { return {v, ""}; }
  static MetricValue Undefined(std::string why) {
    return {std::nullopt, std::move(why)};
  }
  bool defined() const { return value.has_value(); }
};

inline constexpr double kSdrClampDb = 60.0;

struct McdOptions {
  StftConfig stft{1024, 256};
  int n_mels = 80;
  int order = 24;
};

// Mean over aligned frames of (10 / ln 10) * sqrt(2 * sum_{d=1..order}
// (c_d - c'_d)^2). Cepstra come from MelCepstrum; c_0 is excluded. The longer
// signal is tail-trimmed to the common frame count.
double Mcd(const AudioBuffer& reference, const AudioBuffer& degraded,
           const McdOptions& options = {});
double McdFromCepstra(const Matrix& reference, const Matrix& degraded,
                      int order);

struct F0Options {
  double f_min = 70.0;
  double f_max = 400.0;
  double hop_seconds = 0.010;
  PitchOptions pitch;
};

// RMSE (Hz) of f0 over frames voiced in both signals.
MetricValue F0Rmse(const AudioBuffer& reference, const AudioBuffer& degraded,
                   const F0Options& options = {});
// Pearson correlation of f0 over co-voiced frames.
MetricValue F0Corr(const AudioBuffer& reference, const AudioBuffer& degraded,
                   const F0Options& options = {});
// The same statistics on precomputed tracks.
MetricValue F0RmseFromTracks(const PitchTrack& reference,
                             const PitchTrack& degraded);
MetricValue F0CorrFromTracks(const PitchTrack& reference,
                             const PitchTrack& degraded);

// Scale-invariant SNR in dB, clamped to +-60 dB. Both inputs are made
// zero-mean first.
double SiSnr(const AudioBuffer& reference, const AudioBuffer& degraded);

// SDR after the least-squares FIR fit of `taps` coefficients from reference
// to degraded (causal, truncated to the reference length), clamped to
// +-60 dB.
double CiSdr(const AudioBuffer& reference, const AudioBuffer& degraded,
             int taps = 512);

struct StoiResult {
  double value = 0.0;
  bool upsampled = false;  // input rate was below 10 kHz
};

// Short-time objective intelligibility (10 kHz, 15 third-octave bands from
// 150 Hz, 256-sample frames at 50% overlap, 30-frame segments, -15 dB
// clipping, 40 dB silent-frame removal).
StoiResult Stoi(const AudioBuffer& reference, const AudioBuffer& degraded);

enum class ResamplePolicy { kNone, kToMin, kToReference };

ResamplePolicy ParseResamplePolicy(const std::string& name);
std::string ResamplePolicyName(ResamplePolicy policy);

// Metric names, in report order.
const std::vector<std::string>& SupportedMetrics();
// Supported plus reserved names (reserved ones always report undefined).
bool IsKnownMetric(const std::string& name);

struct EvalConfig {
  std::vector<std::string> metrics = SupportedMetrics();
  McdOptions mcd;
  F0Options f0;
  int ci_sdr_taps = 512;
  ResamplePolicy resample = ResamplePolicy::kToMin;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
};

struct MetricReport {
  std::string reference_label;
  std::string degraded_label;
  int sample_rate = 0;
  std::vector<std::pair<std::string, MetricValue>> entries;

  // Metadata.
  int reference_rate = 0;
  int degraded_rate = 0;
  double reference_seconds = 0.0;
  double degraded_seconds = 0.0;
  double evaluated_seconds = 0.0;
  std::vector<std::string> warnings;
  std::string config_digest;

  const MetricValue* Find(const std::string& name) const;
  // {"ref", "deg", "sample_rate", "metrics", "reasons", "metadata"}.
  nlohmann::ordered_json ToJson() const;
};

// Resamples per policy, trims to the common length and runs each requested
// metric. A failing metric becomes undefined with a reason; it never aborts
// the report.
MetricReport EvaluatePair(const AudioBuffer& reference,
                          const AudioBuffer& degraded, const EvalConfig& config,
                          std::string reference_label = "",
                          std::string degraded_label = "");

}  // namespace rvqkit

#endif  // RVQKIT_METRICS_H_
