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

#include "rvqkit/codec.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "rvqkit/byte_io.h"
#include "rvqkit/status.h"

namespace rvqkit {
namespace {

constexpr char kModelMagic[] = "ESPK";
constexpr char kStreamMagic[] = "ESPC";
constexpr uint16_t kModelVersion = 1;
constexpr uint16_t kStreamVersion = 1;
constexpr double kRidge = 1e-8;

// Regularized right pseudo-inverse M^T (M M^T + ridge I)^-1, bins x mels.
Matrix PseudoInverse(const Matrix& fb) {
  const Eigen::Index mels = static_cast<Eigen::Index>(fb.rows());
  const Eigen::Index bins = static_cast<Eigen::Index>(fb.cols());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      m(fb.data().data(), mels, bins);
  Eigen::MatrixXd gram = m * m.transpose();
  gram.diagonal().array() += kRidge;
  const Eigen::MatrixXd x = gram.ldlt().solve(Eigen::MatrixXd(m));
  Matrix out(static_cast<size_t>(bins), static_cast<size_t>(mels));
  for (Eigen::Index k = 0; k < bins; ++k) {
    for (Eigen::Index j = 0; j < mels; ++j) out(k, j) = x(j, k);
  }
  return out;
}

GrvqQuantizer RoundToFloat(const GrvqQuantizer& q) {
  std::vector<RvqQuantizer> groups;
  for (size_t g = 0; g < q.num_groups(); ++g) {
    std::vector<RvqLevel> levels;
    for (size_t l = 0; l < q.num_levels(); ++l) {
      Matrix codes = q.group(g).level(l).codebook.codes();
      for (double& v : codes.data()) v = static_cast<float>(v);
      levels.push_back({Codebook(std::move(codes)), std::nullopt});
    }
    groups.emplace_back(std::move(levels));
  }
  return GrvqQuantizer(std::move(groups));
}

uint16_t CheckedU16(size_t v, const char* what) {
  Require(v <= 0xffff, ErrorCode::kOutOfRange,
          std::string(what) + " does not fit in 16 bits");
  return static_cast<uint16_t>(v);
}

uint32_t CheckedU32(size_t v, const char* what) {
  Require(v <= 0xffffffffULL, ErrorCode::kOutOfRange,
          std::string(what) + " does not fit in 32 bits");
  return static_cast<uint32_t>(v);
}

void RequireHeaderMagic(ByteReader& in, const char* magic, uint16_t version,
                        const char* what) {
  Require(in.remaining() >= 4, ErrorCode::kTruncated,
          std::string(what) + " is shorter than its magic");
  Require(in.Match(magic), ErrorCode::kBadMagic,
          std::string("bad magic: not a ") + what);
  const uint16_t found = in.GetU16();
  Require(found == version, ErrorCode::kUnsupportedVersion,
          std::string("unsupported ") + what + " version " +
              std::to_string(found));
}

}  // namespace

void CodecConfig::Validate() const {
  Require(sample_rate > 0, ErrorCode::kInvalidArgument,
          "sample rate must be positive");
  stft().Validate();
  Require(n_mels >= 1 && n_mels <= 0xffff, ErrorCode::kInvalidArgument,
          "n_mels must lie in [1, 65535]");
  Require(fmin >= 0 && effective_fmax() > fmin &&
              effective_fmax() <= sample_rate / 2,
          ErrorCode::kInvalidArgument, "mel band edges out of range");
  Require(codebook_size >= 2 && codebook_size <= 65536,
          ErrorCode::kInvalidArgument, "codebook size must lie in [2, 65536]");
  Require(num_levels >= 1 && num_levels <= 0xffff, ErrorCode::kInvalidArgument,
          "levels must lie in [1, 65535]");
  Require(num_groups >= 1 && num_groups <= 0xffff && n_mels % num_groups == 0,
          ErrorCode::kInvalidArgument, "groups must divide n_mels");
  Require(epochs >= 0, ErrorCode::kInvalidArgument,
          "epochs must be non-negative");
  Require(gl_iterations >= 1, ErrorCode::kInvalidArgument,
          "Griffin-Lim iterations must be >= 1");
}

double EncodedStream::bitrate() const {
  if (header.hop <= 0) return 0.0;
  const double frame_rate = static_cast<double>(header.sample_rate) / header.hop;
  return frame_rate * header.num_levels_used * header.num_groups *
         std::log2(static_cast<double>(header.codebook_size));
}

double EncodedStream::duration_seconds() const {
  if (header.sample_rate <= 0) return 0.0;
  return static_cast<double>(header.num_frames) * header.hop / header.sample_rate;
}

SpectralCodec::SpectralCodec(CodecConfig config, GrvqQuantizer quantizer)
    : config_(std::move(config)), quantizer_(std::move(quantizer)) {
  config_.Validate();
  Require(quantizer_.dim() == static_cast<size_t>(config_.n_mels) &&
              quantizer_.num_groups() == static_cast<size_t>(config_.num_groups) &&
              quantizer_.num_levels() == static_cast<size_t>(config_.num_levels) &&
              quantizer_.codebook_size() ==
                  static_cast<size_t>(config_.codebook_size),
          ErrorCode::kInvalidArgument,
          "quantizer shape does not match the codec configuration");
  filterbank_ = MelFilterbank(config_.stft().num_bins(), config_.n_mels,
                              config_.sample_rate, config_.fmin,
                              config_.effective_fmax());
  pseudo_inverse_ = PseudoInverse(filterbank_);
}

Matrix SpectralCodec::Analyze(const AudioBuffer& audio) const {
  Require(audio.sample_rate() == config_.sample_rate, ErrorCode::kRateMismatch,
          "audio rate " + std::to_string(audio.sample_rate()) +
              " Hz differs from the codec rate " +
              std::to_string(config_.sample_rate) + " Hz");
  Require(!audio.empty(), ErrorCode::kTooShort, "cannot analyse empty audio");
  MelOptions options;
  options.n_mels = config_.n_mels;
  options.fmin = config_.fmin;
  options.fmax = config_.effective_fmax();
  options.log = true;
  const MelSpectrogram mel = ComputeMelSpectrogram(audio, config_.stft(), options);
  const size_t keep =
      (audio.size() + static_cast<size_t>(config_.hop) - 1) / config_.hop;
  if (mel.values.rows() == keep) return mel.values;
  std::vector<double> data(mel.values.data().begin(),
                           mel.values.data().begin() + keep * mel.values.cols());
  return Matrix(keep, mel.values.cols(), std::move(data));
}

size_t SpectralCodec::LevelsFor(double bits_per_second, bool* clamped) const {
  const double per_group = bits_per_second / config_.num_groups;
  const size_t levels =
      LevelsForBitrate(per_group, config_.codebook_size, config_.frame_rate(),
                       config_.num_levels);
  if (clamped) {
    const double raw = std::round(
        per_group /
        (std::log2(static_cast<double>(config_.codebook_size)) * config_.frame_rate()));
    *clamped = raw < 1.0 || raw > config_.num_levels;
  }
  return levels;
}

EncodeResult SpectralCodec::Encode(const AudioBuffer& audio,
                                   double bits_per_second) const {
  bool clamped = false;
  const size_t levels = LevelsFor(bits_per_second, &clamped);
  EncodeResult result = EncodeLevels(audio, levels);
  result.bitrate_clamped = clamped;
  return result;
}

EncodeResult SpectralCodec::EncodeLevels(const AudioBuffer& audio,
                                         size_t n_levels) const {
  Require(n_levels >= 1 && n_levels <= quantizer_.num_levels(),
          ErrorCode::kInvalidArgument, "level count out of range");
  EncodeResult result;
  result.embeddings = Analyze(audio);
  QuantizedFrames q = GrvqEncode(quantizer_, result.embeddings, n_levels);
  q.codes.frame_rate = config_.frame_rate();
  result.reconstruction = std::move(q.reconstruction);
  StreamHeader& h = result.stream.header;
  h.sample_rate = config_.sample_rate;
  h.hop = config_.hop;
  h.window = config_.window;
  h.n_mels = config_.n_mels;
  h.codebook_size = config_.codebook_size;
  h.num_levels = config_.num_levels;
  h.num_levels_used = static_cast<int>(n_levels);
  h.num_groups = config_.num_groups;
  h.num_frames = q.codes.num_frames;
  result.stream.codes = std::move(q.codes);
  return result;
}

AudioBuffer SpectralCodec::Decode(const EncodedStream& stream) const {
  const StreamHeader& h = stream.header;
  Require(h.sample_rate == config_.sample_rate && h.hop == config_.hop &&
              h.window == config_.window && h.n_mels == config_.n_mels &&
              h.codebook_size == config_.codebook_size &&
              h.num_levels == config_.num_levels &&
              h.num_groups == config_.num_groups,
          ErrorCode::kDataError, "stream header does not match the model");
  Require(h.num_levels_used >= 1 && h.num_levels_used <= h.num_levels,
          ErrorCode::kDataError, "stream uses more levels than the model has");
  const CodeSequence& c = stream.codes;
  Require(c.num_frames == h.num_frames &&
              c.num_levels == static_cast<size_t>(h.num_levels_used) &&
              c.num_groups == static_cast<size_t>(h.num_groups) &&
              c.codebook_size == static_cast<size_t>(h.codebook_size),
          ErrorCode::kDataError, "stream codes disagree with the header");
  try {
    c.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kDataError, std::string("corrupt codes: ") + e.what());
  }
  Require(h.num_frames >= 1, ErrorCode::kDataError, "stream has no frames");
  return Synthesize(GrvqDecode(quantizer_, c));
}

AudioBuffer SpectralCodec::Synthesize(const Matrix& log_mel) const {
  Require(log_mel.cols() == static_cast<size_t>(config_.n_mels),
          ErrorCode::kInvalidArgument, "log-mel width differs from n_mels");
  const size_t frames = log_mel.rows();
  const size_t bins = pseudo_inverse_.rows();
  const size_t mels = pseudo_inverse_.cols();
  Matrix magnitude(frames, bins);
  std::vector<double> power(mels);
  for (size_t t = 0; t < frames; ++t) {
    for (size_t j = 0; j < mels; ++j) power[j] = std::exp(log_mel(t, j));
    for (size_t k = 0; k < bins; ++k) {
      double acc = 0.0;
      for (size_t j = 0; j < mels; ++j) acc += pseudo_inverse_(k, j) * power[j];
      magnitude(t, k) = std::sqrt(std::max(acc, 0.0));
    }
  }
  return GriffinLim(magnitude, config_.stft(), config_.sample_rate,
                    config_.gl_iterations, frames * config_.hop, 0)
      .audio;
}

SpectralCodec TrainCodec(std::span<const AudioBuffer> corpus,
                         const CodecConfig& config, uint64_t seed) {
  config.Validate();
  Require(!corpus.empty(), ErrorCode::kInvalidArgument, "training corpus is empty");
  // A throwaway codec supplies the analysis front end.
  std::vector<RvqLevel> stub_levels;
  for (int l = 0; l < config.num_levels; ++l) {
    stub_levels.push_back(
        {Codebook(Matrix(config.codebook_size, config.n_mels / config.num_groups)),
         std::nullopt});
  }
  std::vector<RvqQuantizer> stub_groups(config.num_groups,
                                        RvqQuantizer(std::move(stub_levels)));
  const SpectralCodec front(config, GrvqQuantizer(std::move(stub_groups)));

  std::vector<double> data;
  size_t rows = 0;
  for (const AudioBuffer& clip : corpus) {
    const Matrix e = front.Analyze(clip);
    data.insert(data.end(), e.data().begin(), e.data().end());
    rows += e.rows();
  }
  Require(rows >= static_cast<size_t>(config.codebook_size), ErrorCode::kTooShort,
          "corpus yields " + std::to_string(rows) + " frames, fewer than the " +
              std::to_string(config.codebook_size) + " codes to train");
  const Matrix frames(rows, static_cast<size_t>(config.n_mels), std::move(data));
  GrvqQuantizer trained =
      TrainGrvq(frames, config.num_groups, config.num_levels,
                config.codebook_size, config.epochs, seed);
  return SpectralCodec(config, RoundToFloat(trained));
}

std::vector<unsigned char> SaveModel(const SpectralCodec& codec) {
  const CodecConfig& c = codec.config();
  ByteWriter out;
  out.PutBytes(kModelMagic);
  out.PutU16(kModelVersion);
  for (int v : {c.sample_rate, c.window, c.hop, c.n_mels, c.fmin, c.fmax,
                c.codebook_size, c.num_levels, c.num_groups, c.gl_iterations}) {
    out.PutU32(static_cast<uint32_t>(v));
  }
  const GrvqQuantizer& q = codec.quantizer();
  for (size_t g = 0; g < q.num_groups(); ++g) {
    for (size_t l = 0; l < q.num_levels(); ++l) {
      for (double v : q.group(g).level(l).codebook.codes().data()) {
        out.PutF32(static_cast<float>(v));
      }
    }
  }
  return out.Release();
}

SpectralCodec LoadModel(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  RequireHeaderMagic(in, kModelMagic, kModelVersion, "model file");
  CodecConfig c;
  for (int* field : {&c.sample_rate, &c.window, &c.hop, &c.n_mels, &c.fmin,
                     &c.fmax, &c.codebook_size, &c.num_levels, &c.num_groups,
                     &c.gl_iterations}) {
    const uint32_t v = in.GetU32();
    Require(v <= 0x7fffffff, ErrorCode::kDataError, "model header field overflow");
    *field = static_cast<int>(v);
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kDataError, std::string("invalid model header: ") + e.what());
  }
  const size_t width = static_cast<size_t>(c.n_mels / c.num_groups);
  const size_t per_book = static_cast<size_t>(c.codebook_size) * width;
  const size_t total = per_book * c.num_levels * c.num_groups;
  Require(in.remaining() >= total * 4, ErrorCode::kTruncated,
          "model file is truncated");
  Require(in.remaining() == total * 4, ErrorCode::kDataError,
          "model file has trailing bytes");
  std::vector<RvqQuantizer> groups;
  for (int g = 0; g < c.num_groups; ++g) {
    std::vector<RvqLevel> levels;
    for (int l = 0; l < c.num_levels; ++l) {
      Matrix codes(static_cast<size_t>(c.codebook_size), width);
      for (double& v : codes.data()) {
        v = in.GetF32();
        Require(std::isfinite(v), ErrorCode::kDataError,
                "model codebook holds a non-finite value");
      }
      levels.push_back({Codebook(std::move(codes)), std::nullopt});
    }
    groups.emplace_back(std::move(levels));
  }
  return SpectralCodec(c, GrvqQuantizer(std::move(groups)));
}

std::vector<unsigned char> SaveStream(const EncodedStream& stream) {
  const StreamHeader& h = stream.header;
  const CodeSequence& c = stream.codes;
  Require(c.num_frames == h.num_frames &&
              c.num_levels == static_cast<size_t>(h.num_levels_used) &&
              c.num_groups == static_cast<size_t>(h.num_groups) &&
              c.codes.size() == c.num_frames * c.num_levels * c.num_groups,
          ErrorCode::kInvalidArgument, "stream header disagrees with its codes");
  ByteWriter out;
  out.PutBytes(kStreamMagic);
  out.PutU16(kStreamVersion);
  out.PutU32(CheckedU32(h.sample_rate, "sample rate"));
  out.PutU32(CheckedU32(h.hop, "hop"));
  out.PutU32(CheckedU32(h.window, "window"));
  out.PutU16(CheckedU16(h.n_mels, "n_mels"));
  out.PutU32(CheckedU32(h.codebook_size, "codebook size"));
  out.PutU16(CheckedU16(h.num_levels, "levels"));
  out.PutU16(CheckedU16(h.num_levels_used, "levels used"));
  out.PutU16(CheckedU16(h.num_groups, "groups"));
  out.PutU32(CheckedU32(h.num_frames, "frame count"));
  for (uint32_t code : c.codes) out.PutU16(CheckedU16(code, "code index"));
  return out.Release();
}

EncodedStream LoadStream(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  RequireHeaderMagic(in, kStreamMagic, kStreamVersion, "stream file");
  EncodedStream s;
  StreamHeader& h = s.header;
  h.sample_rate = static_cast<int>(in.GetU32());
  h.hop = static_cast<int>(in.GetU32());
  h.window = static_cast<int>(in.GetU32());
  h.n_mels = in.GetU16();
  h.codebook_size = static_cast<int>(in.GetU32());
  h.num_levels = in.GetU16();
  h.num_levels_used = in.GetU16();
  h.num_groups = in.GetU16();
  h.num_frames = in.GetU32();
  Require(h.sample_rate > 0 && h.hop > 0 && h.codebook_size >= 2 &&
              h.num_groups >= 1 && h.num_levels_used >= 1,
          ErrorCode::kDataError, "stream header holds invalid fields");
  const size_t count =
      h.num_frames * static_cast<size_t>(h.num_levels_used) * h.num_groups;
  Require(in.remaining() >= count * 2, ErrorCode::kTruncated,
          "stream payload is truncated");
  Require(in.remaining() == count * 2, ErrorCode::kDataError,
          "stream file has trailing bytes");
  CodeSequence& c = s.codes;
  c.num_frames = h.num_frames;
  c.num_levels = static_cast<size_t>(h.num_levels_used);
  c.num_groups = static_cast<size_t>(h.num_groups);
  c.codebook_size = static_cast<size_t>(h.codebook_size);
  c.frame_rate = static_cast<double>(h.sample_rate) / h.hop;
  c.codes.resize(count);
  for (uint32_t& code : c.codes) code = in.GetU16();
  return s;
}

TrainingReport MakeTrainingReport(const SpectralCodec& codec,
                                  std::span<const AudioBuffer> heldout,
                                  std::span<const size_t> level_set) {
  TrainingReport report;
  if (level_set.empty()) return report;
  Require(!heldout.empty(), ErrorCode::kInvalidArgument,
          "held-out set is empty");
  std::vector<Matrix> embeddings;
  for (const AudioBuffer& clip : heldout) embeddings.push_back(codec.Analyze(clip));
  const ScaleSet scales = ScaleSet::Default();
  const double clips = static_cast<double>(heldout.size());

  for (size_t n : level_set) {
    Require(n >= 1 && n <= codec.quantizer().num_levels(),
            ErrorCode::kInvalidArgument,
            "report level " + std::to_string(n) + " out of range");
    ReportRow row;
    row.n_levels = n;
    row.residual_energy.assign(n, 0.0);
    double mel_sum = 0.0;
    size_t mel_count = 0;
    for (size_t i = 0; i < heldout.size(); ++i) {
      const Matrix& e = embeddings[i];
      ResidualTrace trace;
      const QuantizedFrames q = GrvqEncode(codec.quantizer(), e, n, &trace);
      row.commitment +=
          CommitmentLoss(e, codec.quantizer(), n, NormKind::kL1).total / clips;
      for (size_t l = 0; l < n; ++l) {
        double energy = 0.0;
        for (double v : trace.residuals[l].data()) energy += v * v;
        row.residual_energy[l] += energy / static_cast<double>(e.rows()) / clips;
      }
      const AudioBuffer decoded = codec.Synthesize(q.reconstruction);
      const size_t common = std::min(decoded.size(), heldout[i].size());
      try {
        const AudioBuffer ref(std::vector<double>(heldout[i].samples().begin(),
                                                  heldout[i].samples().begin() + common),
                              heldout[i].sample_rate());
        const AudioBuffer deg(std::vector<double>(decoded.samples().begin(),
                                                  decoded.samples().begin() + common),
                              decoded.sample_rate());
        mel_sum += MultiScaleMelLoss(ref, deg, scales, NormKind::kL1);
        ++mel_count;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kTooShort) throw;
      }
    }
    if (mel_count > 0) row.mel_loss = mel_sum / static_cast<double>(mel_count);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace rvqkit
