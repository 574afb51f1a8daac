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

#include "rvqkit/quantizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "rvqkit/status.h"

namespace rvqkit {
namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Nearest-code assignment for every row; rows are independent, so splitting
// them across threads does not change the result.
void AssignAll(const Codebook& codebook, const Matrix& frames,
               std::vector<size_t>& assignments,
               std::vector<double>* distances = nullptr) {
  const size_t n = frames.rows();
  assignments.resize(n);
  if (distances) distances->resize(n);
  auto work = [&](size_t begin, size_t end) {
    for (size_t t = begin; t < end; ++t) {
      double d = 0.0;
      assignments[t] = VqEncode(codebook, frames.row(t), &d);
      if (distances) (*distances)[t] = d;
    }
  };
  const size_t cost = n * codebook.size() * codebook.dim();
  const size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t workers = std::min<size_t>(hw, cost / 2'000'000 + 1);
  if (workers <= 1) {
    work(0, n);
    return;
  }
  std::vector<std::thread> threads;
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(work, begin, end);
  }
  for (auto& th : threads) th.join();
}

void RequireDim(size_t expected, size_t actual) {
  Require(expected == actual, ErrorCode::kInvalidArgument,
          "dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(actual));
}

uint64_t MixSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void RecomputeCodes(Codebook& codebook, const EmaState& state) {
  for (size_t i = 0; i < codebook.size(); ++i) {
    const double size = state.SmoothedSize(i);
    auto code = codebook.mutable_code(i);
    const auto sum = state.embed_sum.row(i);
    for (size_t d = 0; d < code.size(); ++d) code[d] = sum[d] / size;
  }
}

// Codes whose EMA count fell below the threshold restart from a random
// residual.
void ReseedDeadCodes(Codebook& codebook, EmaState& state,
                     const Matrix& residuals, double threshold, Rng& rng) {
  std::vector<size_t> dead;
  for (size_t i = 0; i < codebook.size(); ++i) {
    if (state.cluster_size[i] < threshold) dead.push_back(i);
  }
  if (dead.empty()) return;
  for (size_t i : dead) state.cluster_size[i] = 1.0;
  for (size_t i : dead) {
    const auto source = residuals.row(rng.UniformIndex(residuals.rows()));
    const double size = state.SmoothedSize(i);
    auto sum = state.embed_sum.row(i);
    for (size_t d = 0; d < sum.size(); ++d) sum[d] = source[d] * size;
  }
  RecomputeCodes(codebook, state);
}

Matrix SliceColumns(const Matrix& m, size_t begin, size_t width) {
  Matrix out(m.rows(), width);
  for (size_t t = 0; t < m.rows(); ++t) {
    const auto src = m.row(t);
    std::copy(src.begin() + begin, src.begin() + begin + width,
              out.row(t).begin());
  }
  return out;
}

}  // namespace

Codebook::Codebook(Matrix codes) : codes_(std::move(codes)) {
  Require(codes_.rows() >= 1 && codes_.cols() >= 1,
          ErrorCode::kInvalidArgument, "codebook must be at least 1 x 1");
  for (double v : codes_.data()) {
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "codebook entries must be finite");
  }
}

EmaState EmaState::ForCodebook(const Codebook& codebook, double count,
                               double decay, double epsilon) {
  EmaState state;
  state.decay = decay;
  state.epsilon = epsilon;
  state.cluster_size.assign(codebook.size(), count);
  state.embed_sum = Matrix(codebook.size(), codebook.dim());
  for (size_t i = 0; i < codebook.size(); ++i) {
    const double size = state.SmoothedSize(i);
    const auto code = codebook.code(i);
    auto sum = state.embed_sum.row(i);
    for (size_t d = 0; d < code.size(); ++d) sum[d] = code[d] * size;
  }
  return state;
}

double EmaState::SmoothedSize(size_t i) const {
  double total = 0.0;
  for (double c : cluster_size) total += c;
  const double b = static_cast<double>(cluster_size.size());
  const double smoothed =
      total * (cluster_size[i] + epsilon) / (total + b * epsilon);
  return smoothed > 0.0 ? smoothed : epsilon;
}

RvqQuantizer::RvqQuantizer(std::vector<RvqLevel> levels)
    : levels_(std::move(levels)) {
  Require(!levels_.empty(), ErrorCode::kInvalidArgument,
          "RVQ needs at least one level");
  for (const auto& level : levels_) {
    RequireDim(levels_[0].codebook.dim(), level.codebook.dim());
    Require(level.codebook.size() == levels_[0].codebook.size(),
            ErrorCode::kInvalidArgument,
            "every RVQ level must have the same codebook size");
  }
}

GrvqQuantizer::GrvqQuantizer(std::vector<RvqQuantizer> groups)
    : groups_(std::move(groups)) {
  Require(!groups_.empty(), ErrorCode::kInvalidArgument,
          "GRVQ needs at least one group");
  for (const auto& g : groups_) {
    RequireDim(groups_[0].dim(), g.dim());
    Require(g.num_levels() == groups_[0].num_levels(),
            ErrorCode::kInvalidArgument,
            "every GRVQ group must have the same number of levels");
    Require(g.codebook_size() == groups_[0].codebook_size(),
            ErrorCode::kInvalidArgument,
            "every GRVQ group must have the same codebook size");
  }
}

void CodeSequence::Validate() const {
  Require(num_levels >= 1, ErrorCode::kInvalidArgument,
          "code sequence uses zero levels");
  Require(num_groups >= 1, ErrorCode::kInvalidArgument,
          "code sequence has zero groups");
  Require(codes.size() == num_frames * num_levels * num_groups,
          ErrorCode::kDataError, "code sequence size does not match its shape");
  for (uint32_t c : codes) {
    Require(c < codebook_size, ErrorCode::kOutOfRange,
            "code index " + std::to_string(c) + " out of range");
  }
}

size_t VqEncode(const Codebook& codebook, std::span<const double> vector,
                double* distance) {
  RequireDim(codebook.dim(), vector.size());
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < codebook.size(); ++i) {
    const double d = SquaredDistance(codebook.code(i), vector);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

std::span<const double> VqDecode(const Codebook& codebook, size_t index) {
  Require(index < codebook.size(), ErrorCode::kOutOfRange,
          "code index " + std::to_string(index) + " out of range");
  return codebook.code(index);
}

QuantizedFrames RvqEncode(const RvqQuantizer& q, const Matrix& frames,
                          size_t n_levels, ResidualTrace* trace) {
  Require(n_levels >= 1 && n_levels <= q.num_levels(),
          ErrorCode::kInvalidArgument,
          "n_levels must lie in [1, " + std::to_string(q.num_levels()) + "]");
  RequireDim(q.dim(), frames.cols());
  const size_t T = frames.rows();

  QuantizedFrames out;
  out.codes.num_frames = T;
  out.codes.num_levels = n_levels;
  out.codes.num_groups = 1;
  out.codes.codebook_size = q.codebook_size();
  out.codes.codes.assign(T * n_levels, 0);
  out.reconstruction = Matrix(T, frames.cols());
  if (trace) trace->residuals.clear();

  Matrix residual = frames;
  std::vector<size_t> idx;
  for (size_t l = 0; l < n_levels; ++l) {
    const Codebook& cb = q.level(l).codebook;
    AssignAll(cb, residual, idx);
    for (size_t t = 0; t < T; ++t) {
      out.codes.codes[out.codes.index(t, l, 0)] = static_cast<uint32_t>(idx[t]);
      const auto code = cb.code(idx[t]);
      auto rec = out.reconstruction.row(t);
      auto res = residual.row(t);
      for (size_t d = 0; d < code.size(); ++d) {
        rec[d] += code[d];
        res[d] -= code[d];
      }
    }
    if (trace) trace->residuals.push_back(residual);
  }
  return out;
}

Matrix RvqDecode(const RvqQuantizer& q, const CodeSequence& codes) {
  codes.Validate();
  Require(codes.num_groups == 1, ErrorCode::kInvalidArgument,
          "RVQ decode expects a single group");
  Require(codes.num_levels <= q.num_levels(), ErrorCode::kDataError,
          "code sequence uses more levels than the quantizer has");
  Require(codes.codebook_size == q.codebook_size(), ErrorCode::kDataError,
          "codebook size mismatch");
  Matrix out(codes.num_frames, q.dim());
  for (size_t t = 0; t < codes.num_frames; ++t) {
    auto rec = out.row(t);
    for (size_t l = 0; l < codes.num_levels; ++l) {
      const auto code = VqDecode(q.level(l).codebook, codes.at(t, l));
      for (size_t d = 0; d < code.size(); ++d) rec[d] += code[d];
    }
  }
  return out;
}

QuantizedFrames GrvqEncode(const GrvqQuantizer& q, const Matrix& frames,
                           size_t n_levels, ResidualTrace* trace) {
  Require(q.num_groups() >= 1 && frames.cols() % q.num_groups() == 0,
          ErrorCode::kInvalidArgument,
          "frame dimension is not divisible by the group count");
  RequireDim(q.dim(), frames.cols());
  const size_t G = q.num_groups();
  const size_t width = q.group_dim();
  const size_t T = frames.rows();

  QuantizedFrames out;
  out.codes.num_frames = T;
  out.codes.num_levels = n_levels;
  out.codes.num_groups = G;
  out.codes.codebook_size = q.codebook_size();
  out.codes.codes.assign(T * n_levels * G, 0);
  out.reconstruction = Matrix(T, frames.cols());
  if (trace) {
    trace->residuals.assign(n_levels, Matrix(T, frames.cols()));
  }

  for (size_t g = 0; g < G; ++g) {
    ResidualTrace group_trace;
    const auto part = RvqEncode(q.group(g), SliceColumns(frames, g * width, width),
                                n_levels, trace ? &group_trace : nullptr);
    for (size_t t = 0; t < T; ++t) {
      for (size_t l = 0; l < n_levels; ++l) {
        out.codes.codes[out.codes.index(t, l, g)] = part.codes.at(t, l);
      }
      const auto src = part.reconstruction.row(t);
      std::copy(src.begin(), src.end(),
                out.reconstruction.row(t).begin() + g * width);
      if (trace) {
        for (size_t l = 0; l < n_levels; ++l) {
          const auto r = group_trace.residuals[l].row(t);
          std::copy(r.begin(), r.end(),
                    trace->residuals[l].row(t).begin() + g * width);
        }
      }
    }
  }
  return out;
}

Matrix GrvqDecode(const GrvqQuantizer& q, const CodeSequence& codes) {
  codes.Validate();
  Require(codes.num_groups == q.num_groups(), ErrorCode::kDataError,
          "group count mismatch");
  Require(codes.num_levels <= q.num_levels(), ErrorCode::kDataError,
          "code sequence uses more levels than the quantizer has");
  Require(codes.codebook_size == q.codebook_size(), ErrorCode::kDataError,
          "codebook size mismatch");
  const size_t width = q.group_dim();
  Matrix out(codes.num_frames, q.dim());
  for (size_t t = 0; t < codes.num_frames; ++t) {
    auto rec = out.row(t);
    for (size_t g = 0; g < codes.num_groups; ++g) {
      for (size_t l = 0; l < codes.num_levels; ++l) {
        const auto code =
            VqDecode(q.group(g).level(l).codebook, codes.at(t, l, g));
        for (size_t d = 0; d < width; ++d) rec[g * width + d] += code[d];
      }
    }
  }
  return out;
}

Codebook KmeansInit(const Matrix& frames, size_t num_codes, uint64_t seed,
                    const KmeansOptions& options) {
  const size_t n = frames.rows();
  const size_t dim = frames.cols();
  Require(num_codes >= 1, ErrorCode::kInvalidArgument,
          "codebook size must be >= 1");
  Require(n >= num_codes, ErrorCode::kInvalidArgument,
          "k-means needs at least as many frames (" + std::to_string(n) +
              ") as codes (" + std::to_string(num_codes) + ")");
  Rng rng(seed);

  // k-means++ seeding.
  Matrix centers(num_codes, dim);
  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  size_t pick = rng.UniformIndex(n);
  for (size_t c = 0; c < num_codes; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double d : nearest) total += d;
      if (total > 0.0) {
        const double target = rng.Uniform() * total;
        double cum = 0.0;
        pick = n;
        for (size_t i = 0; i < n; ++i) {
          if (nearest[i] <= 0.0) continue;
          cum += nearest[i];
          if (cum > target) {
            pick = i;
            break;
          }
        }
        if (pick == n) {  // rounding at the top end of the cumulative sum
          for (size_t i = n; i-- > 0;) {
            if (nearest[i] > 0.0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        pick = static_cast<size_t>(
            std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
      }
    }
    chosen[pick] = true;
    const auto src = frames.row(pick);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
    for (size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(frames.row(i), src));
    }
  }

  Codebook codebook(std::move(centers));
  std::vector<size_t> assign;
  std::vector<double> dist;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    AssignAll(codebook, frames, assign, &dist);
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    if (inertia == 0.0 ||
        std::abs(previous - inertia) <= options.tolerance * previous) {
      break;
    }
    previous = inertia;

    Matrix sums(num_codes, dim);
    std::vector<size_t> counts(num_codes, 0);
    for (size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      auto s = sums.row(assign[i]);
      const auto x = frames.row(i);
      for (size_t d = 0; d < dim; ++d) s[d] += x[d];
    }
    for (size_t c = 0; c < num_codes; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      auto code = codebook.mutable_code(c);
      const auto s = sums.row(c);
      for (size_t d = 0; d < dim; ++d) code[d] = s[d] / counts[c];
    }
  }
  return codebook;
}

double QuantizationDistortion(const Codebook& codebook, const Matrix& frames) {
  if (frames.rows() == 0) return 0.0;
  std::vector<size_t> assign;
  std::vector<double> dist;
  AssignAll(codebook, frames, assign, &dist);
  double total = 0.0;
  for (double d : dist) total += d;
  return total / static_cast<double>(frames.rows());
}

void EmaUpdate(Codebook& codebook, EmaState& state, const Matrix& batch,
               std::span<const size_t> assignments) {
  const size_t B = codebook.size();
  const size_t D = codebook.dim();
  Require(state.cluster_size.size() == B && state.embed_sum.rows() == B &&
              state.embed_sum.cols() == D,
          ErrorCode::kInvalidArgument, "EMA state does not match codebook");
  Require(assignments.size() == batch.rows(), ErrorCode::kInvalidArgument,
          "one assignment per batch row required");
  if (batch.rows() > 0) RequireDim(D, batch.cols());

  std::vector<double> counts(B, 0.0);
  Matrix sums(B, D);
  for (size_t i = 0; i < batch.rows(); ++i) {
    const size_t a = assignments[i];
    Require(a < B, ErrorCode::kOutOfRange, "assignment out of range");
    counts[a] += 1.0;
    auto s = sums.row(a);
    const auto x = batch.row(i);
    for (size_t d = 0; d < D; ++d) s[d] += x[d];
  }
  const double g = state.decay;
  for (size_t i = 0; i < B; ++i) {
    state.cluster_size[i] = g * state.cluster_size[i] + (1.0 - g) * counts[i];
    auto es = state.embed_sum.row(i);
    const auto s = sums.row(i);
    for (size_t d = 0; d < D; ++d) es[d] = g * es[d] + (1.0 - g) * s[d];
  }
  RecomputeCodes(codebook, state);
}

RvqQuantizer TrainRvq(const Matrix& frames, size_t num_levels,
                      size_t codebook_size, int epochs, uint64_t seed,
                      const TrainOptions& options) {
  Require(num_levels >= 1, ErrorCode::kInvalidArgument, "levels must be >= 1");
  Require(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be >= 0");
  Require(frames.rows() >= codebook_size, ErrorCode::kInvalidArgument,
          "insufficient data: " + std::to_string(frames.rows()) +
              " frames for " + std::to_string(codebook_size) + " codes");

  Matrix residual = frames;
  std::vector<RvqLevel> levels;
  std::vector<size_t> assign;
  for (size_t l = 0; l < num_levels; ++l) {
    const uint64_t level_seed = MixSeed(seed, l);
    Rng rng(MixSeed(level_seed, 0x5eed));
    Codebook cb = KmeansInit(residual, codebook_size, level_seed, options.kmeans);

    AssignAll(cb, residual, assign);
    EmaState state = EmaState::ForCodebook(cb, 0.0, options.decay, options.epsilon);
    for (size_t a : assign) state.cluster_size[a] += 1.0;
    for (size_t i = 0; i < cb.size(); ++i) {
      const double size = state.SmoothedSize(i);
      const auto code = cb.code(i);
      auto sum = state.embed_sum.row(i);
      for (size_t d = 0; d < code.size(); ++d) sum[d] = code[d] * size;
    }
    RecomputeCodes(cb, state);

    for (int e = 0; e < epochs; ++e) {
      AssignAll(cb, residual, assign);
      EmaUpdate(cb, state, residual, assign);
      ReseedDeadCodes(cb, state, residual, options.dead_code_threshold, rng);
    }

    // Zero-decay pass: codes become the smoothed centroids of their current
    // assignment, which never increases the level's distortion.
    AssignAll(cb, residual, assign);
    state.decay = 0.0;
    EmaUpdate(cb, state, residual, assign);
    state.decay = options.decay;
    ReseedDeadCodes(cb, state, residual, options.dead_code_threshold, rng);

    AssignAll(cb, residual, assign);
    for (size_t t = 0; t < residual.rows(); ++t) {
      const auto code = cb.code(assign[t]);
      auto r = residual.row(t);
      for (size_t d = 0; d < code.size(); ++d) r[d] -= code[d];
    }
    levels.push_back({std::move(cb), std::move(state)});
  }
  return RvqQuantizer(std::move(levels));
}

GrvqQuantizer TrainGrvq(const Matrix& frames, size_t num_groups,
                        size_t num_levels, size_t codebook_size, int epochs,
                        uint64_t seed, const TrainOptions& options) {
  Require(num_groups >= 1 && frames.cols() % num_groups == 0,
          ErrorCode::kInvalidArgument,
          "frame dimension is not divisible by the group count");
  const size_t width = frames.cols() / num_groups;
  std::vector<RvqQuantizer> groups;
  for (size_t g = 0; g < num_groups; ++g) {
    groups.push_back(TrainRvq(SliceColumns(frames, g * width, width),
                              num_levels, codebook_size, epochs,
                              MixSeed(seed, 1000 + g), options));
  }
  return GrvqQuantizer(std::move(groups));
}

size_t LevelsForBitrate(double target_bps, size_t codebook_size,
                        double frame_rate, size_t max_levels) {
  Require(target_bps > 0.0, ErrorCode::kInvalidArgument,
          "target bitrate must be positive");
  Require(codebook_size >= 2 && frame_rate > 0.0 && max_levels >= 1,
          ErrorCode::kInvalidArgument, "invalid codebook or frame rate");
  const double bits_per_level =
      std::log2(static_cast<double>(codebook_size)) * frame_rate;
  const double levels = std::round(target_bps / bits_per_level);
  if (levels < 1.0) return 1;
  return std::min(max_levels, static_cast<size_t>(levels));
}

int SampleBitrate(std::span<const int> choices, Rng& rng) {
  Require(!choices.empty(), ErrorCode::kInvalidArgument,
          "bitrate choice set is empty");
  return choices[rng.UniformIndex(choices.size())];
}

}  // namespace rvqkit
