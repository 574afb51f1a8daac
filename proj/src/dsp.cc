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

#include "rvqkit/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rvqkit/fft.h"
#include "rvqkit/rng.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Reflect index j into [0, n) without repeating the edge sample.
size_t ReflectIndex(long j, size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n - 1);
  long m = j % period;
  if (m < 0) m += period;
  if (m >= static_cast<long>(n)) m = period - m;
  return static_cast<size_t>(m);
}

// Windowed rfft of frames taken at t * hop from `signal`; samples outside the
// signal read as zero.
void AnalyzeFrames(std::span<const double> signal, const StftConfig& config,
                   const std::vector<double>& window, const RealFft& fft,
                   size_t num_frames,
                   std::vector<std::complex<double>>& bins) {
  const size_t n = static_cast<size_t>(config.window_size);
  const size_t nb = static_cast<size_t>(config.num_bins());
  bins.assign(num_frames * nb, {});
  std::vector<double> frame(n);
  for (size_t t = 0; t < num_frames; ++t) {
    const size_t start = t * static_cast<size_t>(config.hop);
    for (size_t i = 0; i < n; ++i) {
      const size_t idx = start + i;
      frame[i] = idx < signal.size() ? signal[idx] * window[i] : 0.0;
    }
    fft.Forward(frame, {bins.data() + t * nb, nb});
  }
}

// Least-squares signal for a set of (possibly inconsistent) STFT frames:
// sum_t w * irfft(X_t) / sum_t w^2.
std::vector<double> OverlapAdd(std::span<const std::complex<double>> bins,
                               const StftConfig& config,
                               const std::vector<double>& window,
                               const RealFft& fft, size_t num_frames) {
  const size_t n = static_cast<size_t>(config.window_size);
  const size_t nb = static_cast<size_t>(config.num_bins());
  const size_t hop = static_cast<size_t>(config.hop);
  const size_t length = num_frames == 0 ? 0 : (num_frames - 1) * hop + n;
  std::vector<double> signal(length, 0.0);
  std::vector<double> envelope(length, 0.0);
  std::vector<double> frame(n);
  for (size_t t = 0; t < num_frames; ++t) {
    fft.Inverse(bins.subspan(t * nb, nb), frame);
    const size_t start = t * hop;
    for (size_t i = 0; i < n; ++i) {
      signal[start + i] += frame[i] * window[i];
      envelope[start + i] += window[i] * window[i];
    }
  }
  for (size_t i = 0; i < length; ++i) {
    signal[i] = envelope[i] > 1e-10 ? signal[i] / envelope[i] : 0.0;
  }
  return signal;
}

void RequireInvertible(const StftConfig& config,
                       const std::vector<double>& window) {
  const int n = config.window_size;
  double lo = INFINITY;
  double hi = 0.0;
  for (int i = 0; i < config.hop; ++i) {
    double env = 0.0;
    for (int k = i; k < n; k += config.hop) env += window[k] * window[k];
    lo = std::min(lo, env);
    hi = std::max(hi, env);
  }
  Require(lo > 1e-8 * hi, ErrorCode::kInvalidArgument,
          "STFT config is not invertible by overlap-add (hop " +
              std::to_string(config.hop) + ", window " +
              std::to_string(n) + ")");
}

}  // namespace

void StftConfig::Validate() const {
  Require(IsPowerOfTwo(window_size) && window_size >= 2,
          ErrorCode::kInvalidArgument,
          "STFT window size must be a power of two >= 2, got " +
              std::to_string(window_size));
  Require(hop > 0 && hop <= window_size, ErrorCode::kInvalidArgument,
          "STFT hop must satisfy 0 < hop <= window size");
}

std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
  return w;
}

Matrix Spectrogram::Magnitude() const {
  const size_t nb = static_cast<size_t>(config.num_bins());
  Matrix m(num_frames, nb);
  for (size_t i = 0; i < bins.size(); ++i) m.data()[i] = std::abs(bins[i]);
  return m;
}

size_t StftFrameCount(size_t num_samples, const StftConfig& config) {
  return num_samples / static_cast<size_t>(config.hop) + 1;
}

Spectrogram Stft(const AudioBuffer& buffer, const StftConfig& config) {
  config.Validate();
  Require(!buffer.empty(), ErrorCode::kInvalidArgument,
          "STFT input must contain at least one sample");
  const size_t n = static_cast<size_t>(config.window_size);
  const size_t half = n / 2;
  const size_t padded_length = buffer.size() + 2 * half;
  Require(padded_length >= n, ErrorCode::kTooShort,
          "window longer than the padded signal");

  const auto x = buffer.samples();
  std::vector<double> padded(padded_length);
  for (size_t i = 0; i < padded_length; ++i) {
    padded[i] = x[ReflectIndex(static_cast<long>(i) - static_cast<long>(half),
                               x.size())];
  }

  Spectrogram spec;
  spec.config = config;
  spec.sample_rate = buffer.sample_rate();
  spec.num_samples = buffer.size();
  spec.num_frames = StftFrameCount(buffer.size(), config);
  RealFft fft(n);
  AnalyzeFrames(padded, config, HannWindow(config.window_size), fft,
                spec.num_frames, spec.bins);
  return spec;
}

AudioBuffer Istft(const Spectrogram& spec, std::optional<size_t> length) {
  spec.config.Validate();
  const auto window = HannWindow(spec.config.window_size);
  RequireInvertible(spec.config, window);
  const size_t n = static_cast<size_t>(spec.config.window_size);
  RealFft fft(n);
  const auto padded = OverlapAdd(spec.bins, spec.config, window, fft,
                                 spec.num_frames);
  const size_t out_length = length.value_or(spec.num_samples);
  std::vector<double> out(out_length, 0.0);
  for (size_t i = 0; i < out_length && i + n / 2 < padded.size(); ++i) {
    out[i] = padded[i + n / 2];
  }
  return AudioBuffer(std::move(out), spec.sample_rate);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelCenterFrequencies(int n_mels, double fmin,
                                         double fmax) {
  const double lo = HzToMel(fmin);
  const double hi = HzToMel(fmax);
  std::vector<double> centers(static_cast<size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    centers[m] = MelToHz(lo + (hi - lo) * (m + 1) / (n_mels + 1));
  }
  return centers;
}

Matrix MelFilterbank(int n_fft_bins, int n_mels, int sample_rate, double fmin,
                     double fmax) {
  Require(n_mels >= 1, ErrorCode::kInvalidArgument, "n_mels must be >= 1");
  Require(n_fft_bins >= 2, ErrorCode::kInvalidArgument,
          "filterbank needs at least two FFT bins");
  Require(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0,
          ErrorCode::kInvalidArgument,
          "mel bounds must satisfy 0 <= fmin < fmax <= sample_rate / 2");

  const double lo = HzToMel(fmin);
  const double hi = HzToMel(fmax);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(n_mels + 1));
  }
  const double bin_hz = (sample_rate / 2.0) / (n_fft_bins - 1);

  Matrix fb(static_cast<size_t>(n_mels), static_cast<size_t>(n_fft_bins));
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    double sum = 0.0;
    for (int k = 0; k < n_fft_bins; ++k) {
      const double f = k * bin_hz;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(rise, fall));
      fb(m, k) = w;
      sum += w;
    }
    if (sum > 0.0) {
      for (int k = 0; k < n_fft_bins; ++k) fb(m, k) /= sum;
    } else {
      // Narrower than one FFT bin: take the nearest bin.
      const int k = std::clamp(static_cast<int>(std::lround(center / bin_hz)),
                               0, n_fft_bins - 1);
      fb(m, k) = 1.0;
    }
  }
  return fb;
}

Matrix MelPower(const Spectrogram& spec, const Matrix& filterbank) {
  const size_t nb = static_cast<size_t>(spec.config.num_bins());
  Require(filterbank.cols() == nb, ErrorCode::kInvalidArgument,
          "filterbank width does not match the spectrogram");
  Matrix out(spec.num_frames, filterbank.rows());
  std::vector<double> power(nb);
  for (size_t t = 0; t < spec.num_frames; ++t) {
    const auto frame = spec.frame(t);
    for (size_t k = 0; k < nb; ++k) power[k] = std::norm(frame[k]);
    for (size_t m = 0; m < filterbank.rows(); ++m) {
      const auto w = filterbank.row(m);
      double acc = 0.0;
      for (size_t k = 0; k < nb; ++k) acc += w[k] * power[k];
      out(t, m) = acc;
    }
  }
  return out;
}

MelSpectrogram ComputeMelSpectrogram(const AudioBuffer& buffer,
                                     const StftConfig& config,
                                     const MelOptions& options) {
  const double fmax = options.fmax.value_or(buffer.sample_rate() / 2.0);
  const Matrix fb = MelFilterbank(config.num_bins(), options.n_mels,
                                  buffer.sample_rate(), options.fmin, fmax);
  const Spectrogram spec = Stft(buffer, config);
  MelSpectrogram mel;
  mel.values = MelPower(spec, fb);
  mel.n_mels = options.n_mels;
  mel.fmin = options.fmin;
  mel.fmax = fmax;
  mel.log = options.log;
  if (options.log) {
    for (double& v : mel.values.data()) v = std::log(std::max(v, kLogFloor));
  }
  return mel;
}

std::vector<double> DctOrthonormal(std::span<const double> x) {
  const size_t n = x.size();
  std::vector<double> c(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    }
    c[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return c;
}

std::vector<double> InverseDctOrthonormal(std::span<const double> c,
                                          size_t n) {
  std::vector<double> x(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (size_t k = 0; k < c.size() && k < n; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      acc += scale * c[k] *
             std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    }
    x[i] = acc;
  }
  return x;
}

Matrix MelCepstrum(const MelSpectrogram& mel, int order) {
  Require(mel.log, ErrorCode::kInvalidArgument,
          "mel cepstrum requires a log-mel spectrogram");
  Require(order >= 0 && order < mel.n_mels, ErrorCode::kInvalidArgument,
          "cepstral order must be below n_mels");
  const size_t frames = mel.values.rows();
  const size_t n = mel.values.cols();
  const size_t keep = static_cast<size_t>(order) + 1;
  // Precomputed DCT-II basis, rows k = 0..order.
  Matrix basis(keep, n);
  for (size_t k = 0; k < keep; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (size_t i = 0; i < n; ++i) {
      basis(k, i) =
          scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
    }
  }
  Matrix out(frames, keep);
  for (size_t t = 0; t < frames; ++t) {
    const auto x = mel.values.row(t);
    for (size_t k = 0; k < keep; ++k) {
      const auto b = basis.row(k);
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) acc += b[i] * x[i];
      out(t, k) = acc;
    }
  }
  return out;
}

PitchTrack TrackPitch(const AudioBuffer& buffer, int hop, double f_min,
                      double f_max, const PitchOptions& options) {
  const int sr = buffer.sample_rate();
  Require(hop > 0, ErrorCode::kInvalidArgument, "pitch hop must be positive");
  Require(f_min > 0.0 && f_min < f_max && f_max < sr / 2.0,
          ErrorCode::kInvalidArgument,
          "pitch range must satisfy 0 < f_min < f_max < sample_rate / 2");

  const long window = std::max(
      2L, static_cast<long>(std::lround(options.frame_seconds * sr)));
  const long tau_min = std::max(2L, static_cast<long>(std::floor(sr / f_max)));
  const long tau_max = static_cast<long>(std::ceil(sr / f_min));
  const auto x = buffer.samples();
  const long n = static_cast<long>(x.size());
  auto sample = [&](long i) { return i >= 0 && i < n ? x[i] : 0.0; };

  PitchTrack track;
  track.hop = hop;
  track.sample_rate = sr;
  const size_t frames = x.size() / static_cast<size_t>(hop) + 1;
  track.f0.assign(frames, 0.0);
  track.voiced.assign(frames, false);

  std::vector<double> seg(static_cast<size_t>(window + tau_max + 2));
  std::vector<double> diff(static_cast<size_t>(tau_max + 2), 0.0);
  std::vector<double> cmnd(static_cast<size_t>(tau_max + 2), 1.0);
  const long support = static_cast<long>(seg.size());
  for (size_t t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * hop - window / 2;
    // Zero-padded edge frames bias the period estimate; leave them unvoiced.
    if (start < 0 || start + support > n) continue;
    for (size_t i = 0; i < seg.size(); ++i) {
      seg[i] = sample(start + static_cast<long>(i));
    }
    for (long tau = 1; tau <= tau_max + 1; ++tau) {
      double acc = 0.0;
      for (long j = 0; j < window; ++j) {
        const double d = seg[j] - seg[j + tau];
        acc += d * d;
      }
      diff[tau] = acc;
    }
    double running = 0.0;
    for (long tau = 1; tau <= tau_max + 1; ++tau) {
      running += diff[tau];
      cmnd[tau] = running > 0.0 ? diff[tau] * tau / running : 1.0;
    }

    long best = -1;
    for (long tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < options.threshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) continue;

    double period = static_cast<double>(best);
    const double a = cmnd[best - 1];
    const double b = cmnd[best];
    const double c = cmnd[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom > 0.0) {
      period += std::clamp(0.5 * (a - c) / denom, -1.0, 1.0);
    }
    const double f0 = sr / period;
    if (f0 < f_min || f0 > f_max) continue;
    track.f0[t] = f0;
    track.voiced[t] = true;
  }
  return track;
}

GriffinLimResult GriffinLim(const Matrix& magnitude, const StftConfig& config,
                            int sample_rate, int iterations,
                            std::optional<size_t> output_length,
                            uint64_t seed) {
  config.Validate();
  Require(iterations >= 1, ErrorCode::kInvalidArgument,
          "Griffin-Lim needs at least one iteration");
  const size_t nb = static_cast<size_t>(config.num_bins());
  Require(magnitude.cols() == nb, ErrorCode::kInvalidArgument,
          "magnitude width does not match the STFT config");
  for (double v : magnitude.data()) {
    Require(v >= 0.0 && std::isfinite(v), ErrorCode::kInvalidArgument,
            "magnitudes must be finite and non-negative");
  }
  const auto window = HannWindow(config.window_size);
  RequireInvertible(config, window);

  const size_t n = static_cast<size_t>(config.window_size);
  const size_t frames = magnitude.rows();
  RealFft fft(n);

  // Interior bins stand for a conjugate pair in the full spectrum.
  std::vector<double> weight(nb, 2.0);
  weight.front() = 1.0;
  weight.back() = 1.0;
  double target_energy = 0.0;
  for (size_t t = 0; t < frames; ++t) {
    for (size_t k = 0; k < nb; ++k) {
      target_energy += weight[k] * magnitude(t, k) * magnitude(t, k);
    }
  }

  std::vector<std::complex<double>> estimate(frames * nb);
  Rng rng(seed);
  for (size_t i = 0; i < estimate.size(); ++i) {
    estimate[i] = std::polar(magnitude.data()[i], kTwoPi * rng.Uniform());
  }

  // Fast Griffin-Lim: the projected spectrogram is extrapolated with
  // momentum. A step that raises the inconsistency is redone as a plain
  // projection, which never does, so the error sequence is non-increasing.
  constexpr double kMomentum = 0.99;
  auto inconsistency = [&](const std::vector<std::complex<double>>& spec) {
    double err = 0.0;
    for (size_t t = 0; t < frames; ++t) {
      for (size_t k = 0; k < nb; ++k) {
        const double d = std::abs(spec[t * nb + k]) - magnitude(t, k);
        err += weight[k] * d * d;
      }
    }
    return err;
  };
  auto project = [&](const std::vector<std::complex<double>>& spec,
                     std::vector<std::complex<double>>& out) {
    out.resize(spec.size());
    for (size_t t = 0; t < frames; ++t) {
      for (size_t k = 0; k < nb; ++k) {
        const size_t i = t * nb + k;
        const double mag = std::abs(spec[i]);
        const double target = magnitude(t, k);
        out[i] = mag > 0.0 ? spec[i] * (target / mag)
                           : std::complex<double>(target, 0.0);
      }
    }
  };
  auto relative = [&](double err) {
    return target_energy > 0.0 ? std::sqrt(err / target_energy) : 0.0;
  };

  GriffinLimResult result;
  std::vector<double> signal = OverlapAdd(estimate, config, window, fft, frames);
  std::vector<std::complex<double>> analysed;
  AnalyzeFrames(signal, config, window, fft, frames, analysed);
  double err = inconsistency(analysed);
  result.spectral_convergence.push_back(relative(err));

  std::vector<std::complex<double>> projected;
  std::vector<std::complex<double>> previous;
  std::vector<std::complex<double>> trial_spec;
  std::vector<double> trial_signal;
  for (int it = 1; it < iterations; ++it) {
    project(analysed, projected);
    double trial_err = 0.0;
    bool accepted = false;
    if (!previous.empty()) {
      estimate = projected;
      for (size_t i = 0; i < estimate.size(); ++i) {
        estimate[i] += kMomentum * (projected[i] - previous[i]);
      }
      trial_signal = OverlapAdd(estimate, config, window, fft, frames);
      AnalyzeFrames(trial_signal, config, window, fft, frames, trial_spec);
      trial_err = inconsistency(trial_spec);
      accepted = trial_err <= err;
    }
    if (!accepted) {
      trial_signal = OverlapAdd(projected, config, window, fft, frames);
      AnalyzeFrames(trial_signal, config, window, fft, frames, trial_spec);
      trial_err = inconsistency(trial_spec);
    }
    previous.swap(projected);
    signal.swap(trial_signal);
    analysed.swap(trial_spec);
    err = trial_err;
    result.spectral_convergence.push_back(relative(err));
  }

  const size_t length = output_length.value_or(
      frames == 0 ? 0 : (frames - 1) * static_cast<size_t>(config.hop));
  std::vector<double> out(length, 0.0);
  for (size_t i = 0; i < length && i + n / 2 < signal.size(); ++i) {
    out[i] = signal[i + n / 2];
  }
  result.audio = AudioBuffer(std::move(out), sample_rate);
  return result;
}

}  // namespace rvqkit
