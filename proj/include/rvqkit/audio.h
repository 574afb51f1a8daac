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

#ifndef RVQKIT_AUDIO_H_
#define RVQKIT_AUDIO_H_

#include <filesystem>
#include <span>
#include <vector>

namespace rvqkit {

// Mono signal at a fixed sample rate. Immutable after construction; every
// sample is finite and the rate is positive.
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = 1;
};

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a RIFF/WAVE file holding PCM16 or IEEE float32 samples. Multi-channel
// files are averaged to mono; PCM16 is scaled by 1/32768.
AudioBuffer ReadWav(const std::filesystem::path& path);
AudioBuffer DecodeWav(std::span<const unsigned char> bytes);

// PCM16 clamps to [-1, 1 - 1/32768] and rounds to the nearest step. The file
// is written through a temporary and renamed into place.
void WriteWav(const AudioBuffer& buffer, const std::filesystem::path& path,
              WavEncoding encoding);
std::vector<unsigned char> EncodeWav(const AudioBuffer& buffer,
                                     WavEncoding encoding);

// Band-limited rational resampling (polyphase windowed sinc, Kaiser
// beta = 8.6, 64 taps per phase at the lower of the two rates). Output
// length is round(size * target / source).
AudioBuffer Resample(const AudioBuffer& buffer, int target_rate);

// Scales so that max |sample| == target_peak. All-zero input is returned
// unchanged.
AudioBuffer PeakNormalize(const AudioBuffer& buffer, double target_peak);

}  // namespace rvqkit

#endif  // RVQKIT_AUDIO_H_
