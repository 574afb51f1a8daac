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

#ifndef RVQKIT_CODEC_H_
#define RVQKIT_CODEC_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rvqkit/audio.h"
#include "rvqkit/dsp.h"
#include "rvqkit/losses.h"
#include "rvqkit/matrix.h"
#include "rvqkit/quantizer.h"

namespace rvqkit {

// Analysis, quantizer shape and synthesis settings of a SpectralCodec.
struct CodecConfig {
  int sample_rate = 16000;
  int window = 1024;
  int hop = 320;  // 50 Hz frames at 16 kHz
  int n_mels = 80;
  int fmin = 0;
  int fmax = 0;  // 0 selects sample_rate / 2
  int codebook_size = 1024;
  int num_levels = 32;
  int num_groups = 1;
  int epochs = 10;
  int gl_iterations = 60;

  void Validate() const;
  StftConfig stft() const { return {window, hop}; }
  double frame_rate() const { return static_cast<double>(sample_rate) / hop; }
  int effective_fmax() const { return fmax > 0 ? fmax : sample_rate / 2; }

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

struct StreamHeader {
  int sample_rate = 0;
  int hop = 0;
  int window = 0;
  int n_mels = 0;
  int codebook_size = 0;
  int num_levels = 0;       // levels the model holds
  int num_levels_used = 0;  // levels present in the payload
  int num_groups = 1;
  size_t num_frames = 0;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct EncodedStream {
  StreamHeader header;
  CodeSequence codes;

  // Payload bits per second of audio.
  double bitrate() const;
  double duration_seconds() const;

  friend bool operator==(const EncodedStream&, const EncodedStream&) = default;
};

struct EncodeResult {
  EncodedStream stream;
  Matrix embeddings;      // E, frames x n_mels
  Matrix reconstruction;  // E_hat
  bool bitrate_clamped = false;
};

class SpectralCodec {
 public:
  SpectralCodec(CodecConfig config, GrvqQuantizer quantizer);

  const CodecConfig& config() const { return config_; }
  const GrvqQuantizer& quantizer() const { return quantizer_; }
  const Matrix& filterbank() const { return filterbank_; }        // mels x bins
  const Matrix& pseudo_inverse() const { return pseudo_inverse_; }  // bins x mels

  // Log-mel frames; keeps the first ceil(T / hop) frames.
  Matrix Analyze(const AudioBuffer& audio) const;

  // Levels needed for `bits_per_second`, clamped to [1, num_levels].
  size_t LevelsFor(double bits_per_second, bool* clamped = nullptr) const;

  EncodeResult Encode(const AudioBuffer& audio, double bits_per_second) const;
  EncodeResult EncodeLevels(const AudioBuffer& audio, size_t n_levels) const;

  AudioBuffer Decode(const EncodedStream& stream) const;
  // Waveform from log-mel frames.
  AudioBuffer Synthesize(const Matrix& log_mel) const;

 private:
  CodecConfig config_;
  GrvqQuantizer quantizer_;
  Matrix filterbank_;
  Matrix pseudo_inverse_;
};

SpectralCodec TrainCodec(std::span<const AudioBuffer> corpus,
                         const CodecConfig& config, uint64_t seed);

std::vector<unsigned char> SaveModel(const SpectralCodec& codec);
SpectralCodec LoadModel(std::span<const unsigned char> bytes);

inline constexpr size_t kStreamHeaderBytes = 34;

std::vector<unsigned char> SaveStream(const EncodedStream& stream);
EncodedStream LoadStream(std::span<const unsigned char> bytes);

struct ReportRow {
  size_t n_levels = 0;
  double commitment = 0.0;
  std::optional<double> mel_loss;  // absent when every clip is too short
  std::vector<double> residual_energy;  // mean ||Q_i||^2 per frame, per level
};

struct TrainingReport {
  std::vector<ReportRow> rows;
};

TrainingReport MakeTrainingReport(const SpectralCodec& codec,
                                  std::span<const AudioBuffer> heldout,
                                  std::span<const size_t> level_set);

}  // namespace rvqkit

#endif  // RVQKIT_CODEC_H_
