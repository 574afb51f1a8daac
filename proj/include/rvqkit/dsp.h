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

#ifndef RVQKIT_DSP_H_
#define RVQKIT_DSP_H_

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rvqkit/audio.h"
#include "rvqkit/matrix.h"

namespace rvqkit {

// Hann-windowed STFT parameters. window_size is a power of two and
// 0 < hop <= window_size.
struct StftConfig {
  int window_size = 1024;
  int hop = 256;

  // hop = window / 4, the multi-scale default.
  static StftConfig ForWindow(int window_size) {
    return {window_size, window_size / 4};
  }
  int num_bins() const { return window_size / 2 + 1; }
  void Validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

// Periodic Hann window of length n.
std::vector<double> HannWindow(int n);

struct Spectrogram {
  StftConfig config;
  int sample_rate = 0;
  size_t num_samples = 0;  // length of the analysed signal
  size_t num_frames = 0;
  std::vector<std::complex<double>> bins;  // frame-major, num_bins per frame

  std::span<const std::complex<double>> frame(size_t t) const {
    const size_t nb = static_cast<size_t>(config.num_bins());
    return {bins.data() + t * nb, nb};
  }
  std::span<std::complex<double>> frame(size_t t) {
    const size_t nb = static_cast<size_t>(config.num_bins());
    return {bins.data() + t * nb, nb};
  }
  // |X| as a num_frames x num_bins matrix.
  Matrix Magnitude() const;
};

// Number of frames stft() produces for a signal of `num_samples`:
// floor(num_samples / hop) + 1.
size_t StftFrameCount(size_t num_samples, const StftConfig& config);

// Center (reflect) padded STFT. Frame t covers padded samples
// [t * hop, t * hop + window).
Spectrogram Stft(const AudioBuffer& buffer, const StftConfig& config);

// Weighted overlap-add inverse with window-square normalization, cropped to
// `length` samples (default: the analysed signal length).
AudioBuffer Istft(const Spectrogram& spec,
                  std::optional<size_t> length = std::nullopt);

// Triangular HTK-mel filters, each row normalized to unit sum. Shape
// n_mels x n_fft_bins.
Matrix MelFilterbank(int n_fft_bins, int n_mels, int sample_rate, double fmin,
                     double fmax);

// Center frequency (Hz) of each filter in MelFilterbank.
std::vector<double> MelCenterFrequencies(int n_mels, double fmin, double fmax);

double HzToMel(double hz);
double MelToHz(double mel);

inline constexpr double kLogFloor = 1e-10;

struct MelSpectrogram {
  Matrix values;  // frames x n_mels
  int n_mels = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  bool log = false;
};

struct MelOptions {
  int n_mels = 80;
  double fmin = 0.0;
  std::optional<double> fmax;  // default: sample_rate / 2
  bool log = true;
};

// Power spectrogram projected on the mel filterbank; with log set, values are
// ln(max(power, kLogFloor)).
MelSpectrogram ComputeMelSpectrogram(const AudioBuffer& buffer,
                                     const StftConfig& config,
                                     const MelOptions& options);

// Applies a filterbank to |X|^2 of an existing spectrogram.
Matrix MelPower(const Spectrogram& spec, const Matrix& filterbank);

// Orthonormal DCT-II of each log-mel frame, truncated to c_0..c_order.
Matrix MelCepstrum(const MelSpectrogram& mel, int order);

// Orthonormal DCT-II and its inverse on one vector.
std::vector<double> DctOrthonormal(std::span<const double> x);
std::vector<double> InverseDctOrthonormal(std::span<const double> c,
                                          size_t n);

struct PitchTrack {
  std::vector<double> f0;     // Hz, 0 when unvoiced
  std::vector<bool> voiced;
  int hop = 0;
  int sample_rate = 0;

  size_t size() const { return f0.size(); }
};

struct PitchOptions {
  double threshold = 0.15;
  double frame_seconds = 0.040;
};

// YIN pitch tracker (cumulative-mean-normalized difference, absolute
// threshold, parabolic refinement). Frame t is centered on sample t * hop;
// there are floor(size / hop) + 1 frames.
PitchTrack TrackPitch(const AudioBuffer& buffer, int hop, double f_min,
                      double f_max, const PitchOptions& options = {});

struct GriffinLimResult {
  AudioBuffer audio;
  // Full-spectrum relative error || |STFT(x_i)| - A || / ||A|| after each
  // iteration.
  std::vector<double> spectral_convergence;
};

// Phase recovery for a frames x bins magnitude matrix produced with the
// center-padded STFT. Starts from seeded uniform random phase. The output
// covers `output_length` samples (default (frames - 1) * hop).
GriffinLimResult GriffinLim(const Matrix& magnitude, const StftConfig& config,
                            int sample_rate, int iterations,
                            std::optional<size_t> output_length = std::nullopt,
                            uint64_t seed = 0);

}  // namespace rvqkit

#endif  // RVQKIT_DSP_H_
