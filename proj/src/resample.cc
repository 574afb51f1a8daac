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

#include <cmath>
#include <numeric>
#include <vector>

#include "rvqkit/audio.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

constexpr double kKaiserBeta = 8.6;
constexpr int kZeroCrossingsPerSide = 32;  // 64 taps per phase
constexpr double kRolloff = 0.97;
constexpr size_t kMaxCachedPhases = 4096;

double Sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

double Kaiser(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

class PolyphaseKernel {
 public:
  PolyphaseKernel(long up, long down) : up_(up) {
    const double ratio = static_cast<double>(up) / static_cast<double>(down);
    const double scale = std::min(1.0, ratio);
    cutoff_ = kRolloff * scale;
    half_width_ = kZeroCrossingsPerSide / scale;
    taps_half_ = static_cast<long>(std::ceil(half_width_));
  }

  long taps_half() const { return taps_half_; }

  // Taps for input offsets j in [-taps_half + 1, taps_half] relative to
  // floor(t), where t has fractional part phase / up.
  void Fill(long phase, std::vector<double>& taps) const {
    const double frac = static_cast<double>(phase) / static_cast<double>(up_);
    taps.resize(static_cast<size_t>(2 * taps_half_));
    double sum = 0.0;
    for (long j = -taps_half_ + 1; j <= taps_half_; ++j) {
      const double tau = frac - static_cast<double>(j);
      const double v =
          cutoff_ * Sinc(cutoff_ * tau) * Kaiser(tau / half_width_);
      taps[static_cast<size_t>(j + taps_half_ - 1)] = v;
      sum += v;
    }
    if (sum != 0.0) {
      for (double& v : taps) v /= sum;
    }
  }

 private:
  long up_;
  double cutoff_ = 1.0;
  double half_width_ = 1.0;
  long taps_half_ = 1;
};

}  // namespace

AudioBuffer Resample(const AudioBuffer& buffer, int target_rate) {
  Require(target_rate > 0, ErrorCode::kInvalidArgument,
          "target sample rate must be positive");
  const int source_rate = buffer.sample_rate();
  if (target_rate == source_rate) return buffer;

  const long g = std::gcd(static_cast<long>(source_rate),
                          static_cast<long>(target_rate));
  const long up = target_rate / g;
  const long down = source_rate / g;
  const long n_in = static_cast<long>(buffer.size());
  const long n_out = (n_in * up + down / 2) / down;

  PolyphaseKernel kernel(up, down);
  const bool cache = static_cast<size_t>(up) <= kMaxCachedPhases;
  std::vector<std::vector<double>> phases;
  if (cache) {
    phases.resize(static_cast<size_t>(up));
    for (long p = 0; p < up; ++p) kernel.Fill(p, phases[static_cast<size_t>(p)]);
  }

  const auto x = buffer.samples();
  const long half = kernel.taps_half();
  std::vector<double> out(static_cast<size_t>(n_out), 0.0);
  std::vector<double> scratch;
  for (long n = 0; n < n_out; ++n) {
    const long num = n * down;
    const long base = num / up;
    const long phase = num % up;
    const std::vector<double>* taps;
    if (cache) {
      taps = &phases[static_cast<size_t>(phase)];
    } else {
      kernel.Fill(phase, scratch);
      taps = &scratch;
    }
    double acc = 0.0;
    for (long j = -half + 1; j <= half; ++j) {
      const long k = base + j;
      if (k < 0 || k >= n_in) continue;
      acc += (*taps)[static_cast<size_t>(j + half - 1)] * x[static_cast<size_t>(k)];
    }
    out[static_cast<size_t>(n)] = acc;
  }
  return AudioBuffer(std::move(out), target_rate);
}

}  // namespace rvqkit
