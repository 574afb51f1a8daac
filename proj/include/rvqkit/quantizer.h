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

#ifndef RVQKIT_QUANTIZER_H_
#define RVQKIT_QUANTIZER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rvqkit/matrix.h"
#include "rvqkit/rng.h"

namespace rvqkit {

// B x D code vectors, one per row.
class Codebook {
 public:
  Codebook() = default;
  explicit Codebook(Matrix codes);

  size_t size() const { return codes_.rows(); }
  size_t dim() const { return codes_.cols(); }
  std::span<const double> code(size_t i) const { return codes_.row(i); }
  std::span<double> mutable_code(size_t i) { return codes_.row(i); }
  const Matrix& codes() const { return codes_; }

  friend bool operator==(const Codebook&, const Codebook&) = default;

 private:
  Matrix codes_;
};

// Running statistics for exponential-moving-average codebook learning.
struct EmaState {
  std::vector<double> cluster_size;  // B
  Matrix embed_sum;                  // B x D
  double decay = 0.99;
  double epsilon = 1e-5;

  // Fresh state consistent with `codebook`: every code counts `count` times.
  static EmaState ForCodebook(const Codebook& codebook, double count,
                              double decay, double epsilon);

  // Laplace-smoothed size n * (c_i + eps) / (n + B * eps), n = sum_i c_i.
  double SmoothedSize(size_t i) const;
};

struct RvqLevel {
  Codebook codebook;
  std::optional<EmaState> ema;  // present after training, absent after load
};

class RvqQuantizer {
 public:
  RvqQuantizer() = default;
  explicit RvqQuantizer(std::vector<RvqLevel> levels);

  size_t num_levels() const { return levels_.size(); }
  size_t dim() const { return levels_.empty() ? 0 : levels_[0].codebook.dim(); }
  size_t codebook_size() const {
    return levels_.empty() ? 0 : levels_[0].codebook.size();
  }
  const RvqLevel& level(size_t i) const { return levels_[i]; }
  RvqLevel& mutable_level(size_t i) { return levels_[i]; }

 private:
  std::vector<RvqLevel> levels_;
};

// G independent RVQs over contiguous D / G slices.
class GrvqQuantizer {
 public:
  GrvqQuantizer() = default;
  explicit GrvqQuantizer(std::vector<RvqQuantizer> groups);

  size_t num_groups() const { return groups_.size(); }
  size_t num_levels() const {
    return groups_.empty() ? 0 : groups_[0].num_levels();
  }
  size_t group_dim() const { return groups_.empty() ? 0 : groups_[0].dim(); }
  size_t dim() const { return group_dim() * groups_.size(); }
  size_t codebook_size() const {
    return groups_.empty() ? 0 : groups_[0].codebook_size();
  }
  const RvqQuantizer& group(size_t g) const { return groups_[g]; }
  RvqQuantizer& mutable_group(size_t g) { return groups_[g]; }

 private:
  std::vector<RvqQuantizer> groups_;
};

// Per-frame code indices, laid out frame-major, then level, then group.
struct CodeSequence {
  size_t num_frames = 0;
  size_t num_levels = 0;  // levels used
  size_t num_groups = 1;
  size_t codebook_size = 0;
  double frame_rate = 0.0;
  std::vector<uint32_t> codes;

  size_t index(size_t t, size_t level, size_t group) const {
    return (t * num_levels + level) * num_groups + group;
  }
  uint32_t at(size_t t, size_t level, size_t group = 0) const {
    return codes[index(t, level, group)];
  }
  // Checks shape and that every index is below codebook_size.
  void Validate() const;

  friend bool operator==(const CodeSequence&, const CodeSequence&) = default;
};

// Nearest code by squared Euclidean distance; ties go to the lowest index.
size_t VqEncode(const Codebook& codebook, std::span<const double> vector,
                double* distance = nullptr);
std::span<const double> VqDecode(const Codebook& codebook, size_t index);

// Residual after each level of an encode, Q_1 .. Q_n (each T x D).
struct ResidualTrace {
  std::vector<Matrix> residuals;
};

struct QuantizedFrames {
  CodeSequence codes;
  Matrix reconstruction;  // T x D
};

// Level i quantizes Q_{i-1} (Q_0 = frames); Q_i = Q_{i-1} - VQ_i(Q_{i-1}).
// The reconstruction is the level-ordered sum of decoded codes.
QuantizedFrames RvqEncode(const RvqQuantizer& q, const Matrix& frames,
                          size_t n_levels, ResidualTrace* trace = nullptr);
Matrix RvqDecode(const RvqQuantizer& q, const CodeSequence& codes);

QuantizedFrames GrvqEncode(const GrvqQuantizer& q, const Matrix& frames,
                           size_t n_levels, ResidualTrace* trace = nullptr);
Matrix GrvqDecode(const GrvqQuantizer& q, const CodeSequence& codes);

struct KmeansOptions {
  int max_iterations = 50;
  double tolerance = 1e-4;  // relative inertia change
};

// k-means++ seeding followed by Lloyd iterations. Deterministic given seed.
Codebook KmeansInit(const Matrix& frames, size_t num_codes, uint64_t seed,
                    const KmeansOptions& options = {});

// Mean over frames of the squared distance to the nearest code.
double QuantizationDistortion(const Codebook& codebook, const Matrix& frames);

// One EMA step from a batch and its assignments; afterwards every code equals
// embed_sum / SmoothedSize.
void EmaUpdate(Codebook& codebook, EmaState& state, const Matrix& batch,
               std::span<const size_t> assignments);

struct TrainOptions {
  double decay = 0.99;
  double epsilon = 1e-5;
  double dead_code_threshold = 1.0;
  KmeansOptions kmeans;
};

// Level-sequential training: k-means init on the current residuals, `epochs`
// full-batch assign + EMA passes, a zero-decay refinement pass, dead-code
// re-seeding, then residuals are recomputed for the next level.
RvqQuantizer TrainRvq(const Matrix& frames, size_t num_levels,
                      size_t codebook_size, int epochs, uint64_t seed,
                      const TrainOptions& options = {});

GrvqQuantizer TrainGrvq(const Matrix& frames, size_t num_groups,
                        size_t num_levels, size_t codebook_size, int epochs,
                        uint64_t seed, const TrainOptions& options = {});

// round(target / (log2(B) * frame_rate)) clamped to [1, max_levels].
size_t LevelsForBitrate(double target_bps, size_t codebook_size,
                        double frame_rate, size_t max_levels);

// Uniform draw from `choices`.
int SampleBitrate(std::span<const int> choices, Rng& rng);

}  // namespace rvqkit

#endif  // RVQKIT_QUANTIZER_H_
