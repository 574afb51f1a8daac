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

#include "rvqkit/audio.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "rvqkit/byte_io.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;
constexpr double kPcm16Scale = 32768.0;

struct WavFormat {
  uint16_t format_tag = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
};

WavFormat ParseFmtChunk(std::span<const unsigned char> chunk) {
  ByteReader r(chunk);
  WavFormat fmt;
  fmt.format_tag = r.GetU16();
  fmt.channels = r.GetU16();
  fmt.sample_rate = r.GetU32();
  r.GetU32();  // byte rate
  r.GetU16();  // block align
  fmt.bits_per_sample = r.GetU16();
  if (fmt.format_tag == kFormatExtensible) {
    if (r.remaining() < 2 + 22) {
      Fail(ErrorCode::kTruncated, "WAVE_FORMAT_EXTENSIBLE fmt chunk too short");
    }
    r.GetU16();  // cbSize
    r.GetU16();  // valid bits
    r.GetU32();  // channel mask
    fmt.format_tag = r.GetU16();  // first two bytes of the subformat GUID
  }
  return fmt;
}

}  // namespace

AudioBuffer::AudioBuffer(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  Require(sample_rate_ > 0, ErrorCode::kInvalidArgument,
          "sample rate must be positive");
  for (double s : samples_) {
    Require(std::isfinite(s), ErrorCode::kInvalidArgument,
            "audio samples must be finite");
  }
}

AudioBuffer DecodeWav(std::span<const unsigned char> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 12) Fail(ErrorCode::kTruncated, "file shorter than RIFF header");
  if (!r.Match("RIFF")) Fail(ErrorCode::kBadMagic, "not a RIFF file");
  r.GetU32();
  if (!r.Match("WAVE")) Fail(ErrorCode::kBadMagic, "RIFF file is not WAVE");

  WavFormat fmt;
  bool have_fmt = false;
  std::span<const unsigned char> data;
  bool have_data = false;
  while (r.remaining() >= 8 && !have_data) {
    auto id = r.Take(4);
    const uint32_t size = r.GetU32();
    const std::string tag(id.begin(), id.end());
    if (size > r.remaining()) {
      Fail(ErrorCode::kTruncated, "chunk '" + tag + "' declares " +
                                      std::to_string(size) + " bytes, only " +
                                      std::to_string(r.remaining()) + " remain");
    }
    auto body = r.Take(size);
    if (size % 2 == 1 && r.remaining() > 0) r.Take(1);  // pad byte
    if (tag == "fmt ") {
      fmt = ParseFmtChunk(body);
      have_fmt = true;
    } else if (tag == "data") {
      data = body;
      have_data = true;
    }
  }
  if (!have_fmt) Fail(ErrorCode::kTruncated, "missing fmt chunk");
  if (!have_data) Fail(ErrorCode::kTruncated, "missing data chunk");

  const bool pcm16 = fmt.format_tag == kFormatPcm && fmt.bits_per_sample == 16;
  const bool float32 =
      fmt.format_tag == kFormatFloat && fmt.bits_per_sample == 32;
  if (!pcm16 && !float32) {
    Fail(ErrorCode::kUnsupported,
         "unsupported WAV encoding (format " + std::to_string(fmt.format_tag) +
             ", " + std::to_string(fmt.bits_per_sample) + " bits)");
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    Fail(ErrorCode::kUnsupported, "WAV declares zero channels or sample rate");
  }

  const size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const size_t frame_bytes = bytes_per_sample * fmt.channels;
  if (data.size() % frame_bytes != 0) {
    Fail(ErrorCode::kTruncated, "data chunk ends mid-frame");
  }
  const size_t frames = data.size() / frame_bytes;
  std::vector<double> mono(frames);
  ByteReader samples(data);
  for (size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (uint16_t c = 0; c < fmt.channels; ++c) {
      if (pcm16) {
        acc += static_cast<int16_t>(samples.GetU16()) / kPcm16Scale;
      } else {
        acc += static_cast<double>(samples.GetF32());
      }
    }
    mono[i] = acc / fmt.channels;
  }
  return AudioBuffer(std::move(mono), static_cast<int>(fmt.sample_rate));
}

AudioBuffer ReadWav(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  return DecodeWav(bytes);
}

std::vector<unsigned char> EncodeWav(const AudioBuffer& buffer,
                                     WavEncoding encoding) {
  Require(!buffer.empty(), ErrorCode::kInvalidArgument,
          "cannot write an empty buffer");
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const uint16_t block_align = bits / 8;
  const uint32_t data_bytes =
      static_cast<uint32_t>(buffer.size() * block_align);
  const uint32_t rate = static_cast<uint32_t>(buffer.sample_rate());

  ByteWriter w;
  w.PutBytes("RIFF");
  w.PutU32(4 + (8 + 16) + (8 + data_bytes));
  w.PutBytes("WAVE");
  w.PutBytes("fmt ");
  w.PutU32(16);
  w.PutU16(pcm16 ? kFormatPcm : kFormatFloat);
  w.PutU16(1);
  w.PutU32(rate);
  w.PutU32(rate * block_align);
  w.PutU16(block_align);
  w.PutU16(bits);
  w.PutBytes("data");
  w.PutU32(data_bytes);
  for (double s : buffer.samples()) {
    if (pcm16) {
      const double clamped = std::clamp(s, -1.0, 1.0 - 1.0 / kPcm16Scale);
      w.PutU16(static_cast<uint16_t>(
          static_cast<int16_t>(std::lround(clamped * kPcm16Scale))));
    } else {
      w.PutF32(static_cast<float>(s));
    }
  }
  return w.Release();
}

void WriteWav(const AudioBuffer& buffer, const std::filesystem::path& path,
              WavEncoding encoding) {
  const auto bytes = EncodeWav(buffer, encoding);
  AtomicWriteFile(path, bytes);
}

AudioBuffer PeakNormalize(const AudioBuffer& buffer, double target_peak) {
  Require(target_peak > 0.0 && target_peak <= 1.0,
          ErrorCode::kInvalidArgument, "target peak must lie in (0, 1]");
  double peak = 0.0;
  for (double s : buffer.samples()) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return buffer;
  const double gain = target_peak / peak;
  std::vector<double> out(buffer.samples().begin(), buffer.samples().end());
  for (double& s : out) s *= gain;
  return AudioBuffer(std::move(out), buffer.sample_rate());
}

}  // namespace rvqkit
