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

#include "rvqkit/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "rvqkit/status.h"

namespace rvqkit {
namespace {

void RequireMatchingAudio(const AudioBuffer& a, const AudioBuffer& b) {
  Require(a.sample_rate() == b.sample_rate(), ErrorCode::kRateMismatch,
          "sample rates differ: " + std::to_string(a.sample_rate()) + " vs " +
              std::to_string(b.sample_rate()));
  Require(a.size() == b.size(), ErrorCode::kLengthMismatch,
          "signal lengths differ: " + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()));
}

double MeanScore(const DiscriminatorOutput& d) {
  Require(!d.scores.empty(), ErrorCode::kInvalidArgument,
          "discriminator produced no scores");
  double acc = 0.0;
  for (double s : d.scores) acc += s;
  return acc / static_cast<double>(d.scores.size());
}

}  // namespace

NormKind ParseNormKind(std::string_view name) {
  if (name == "l1") return NormKind::kL1;
  if (name == "l2") return NormKind::kL2;
  if (name == "l1_plus_l2") return NormKind::kL1PlusL2;
  Fail(ErrorCode::kInvalidArgument,
       "unknown norm '" + std::string(name) + "' (l1, l2, l1_plus_l2)");
}

std::string_view NormKindName(NormKind kind) {
  switch (kind) {
    case NormKind::kL1:
      return "l1";
    case NormKind::kL2:
      return "l2";
    case NormKind::kL1PlusL2:
      return "l1_plus_l2";
  }
  return "l1";
}

double MeanNorm(std::span<const double> a, std::span<const double> b,
                NormKind kind) {
  Require(a.size() == b.size(), ErrorCode::kLengthMismatch,
          "norm operands differ in size");
  if (a.empty()) return 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    l1 += std::abs(d);
    l2 += d * d;
  }
  const double n = static_cast<double>(a.size());
  switch (kind) {
    case NormKind::kL1:
      return l1 / n;
    case NormKind::kL2:
      return l2 / n;
    case NormKind::kL1PlusL2:
      return l1 / n + l2 / n;
  }
  return 0.0;
}

ScaleSet ScaleSet::Default() {
  ScaleSet s;
  for (int p = 5; p <= 11; ++p) s.window_sizes.push_back(1 << p);
  return s;
}

void ScaleSet::Validate() const {
  Require(!window_sizes.empty(), ErrorCode::kInvalidArgument,
          "scale set is empty");
  for (int w : window_sizes) {
    Require(w >= 32 && (w & (w - 1)) == 0, ErrorCode::kInvalidArgument,
            "scale windows must be powers of two >= 32, got " +
                std::to_string(w));
  }
}

int MelBandsForWindow(int window_size) {
  return std::max(5, static_cast<int>(std::lround(80.0 * window_size / 1024.0)));
}

double TimeDomainLoss(const AudioBuffer& s, const AudioBuffer& s_hat,
                      NormKind norm) {
  RequireMatchingAudio(s, s_hat);
  return MeanNorm(s.samples(), s_hat.samples(), norm);
}

double MultiScaleMelLoss(const AudioBuffer& s, const AudioBuffer& s_hat,
                         const ScaleSet& scales, NormKind norm) {
  scales.Validate();
  RequireMatchingAudio(s, s_hat);
  const int largest =
      *std::max_element(scales.window_sizes.begin(), scales.window_sizes.end());
  Require(s.size() >= static_cast<size_t>(largest), ErrorCode::kTooShort,
          "signal (" + std::to_string(s.size()) +
              " samples) is shorter than the largest window (" +
              std::to_string(largest) + ")");
  double total = 0.0;
  for (int w : scales.window_sizes) {
    const StftConfig config = StftConfig::ForWindow(w);
    MelOptions options;
    options.n_mels = MelBandsForWindow(w);
    options.log = true;
    const auto a = ComputeMelSpectrogram(s, config, options);
    const auto b = ComputeMelSpectrogram(s_hat, config, options);
    total += MeanNorm(a.values.data(), b.values.data(), norm);
  }
  return total / static_cast<double>(scales.window_sizes.size());
}

double GeneratorAdversarialLoss(std::span<const DiscriminatorOutput> fake) {
  Require(!fake.empty(), ErrorCode::kInvalidArgument,
          "need at least one discriminator");
  double acc = 0.0;
  for (const auto& d : fake) acc += std::max(0.0, 1.0 - MeanScore(d));
  return acc / static_cast<double>(fake.size());
}

double FeatureMatchingLoss(std::span<const DiscriminatorOutput> real,
                           std::span<const DiscriminatorOutput> fake) {
  Require(real.size() == fake.size() && !real.empty(),
          ErrorCode::kInvalidArgument,
          "real and fake outputs must cover the same discriminators");
  double acc = 0.0;
  size_t layers = 0;
  for (size_t k = 0; k < real.size(); ++k) {
    Require(real[k].features.size() == fake[k].features.size(),
            ErrorCode::kInvalidArgument, "layer count mismatch");
    for (size_t r = 0; r < real[k].features.size(); ++r) {
      Require(real[k].features[r].size() == fake[k].features[r].size(),
              ErrorCode::kInvalidArgument, "feature shape mismatch");
      acc += MeanNorm(real[k].features[r], fake[k].features[r], NormKind::kL1);
      ++layers;
    }
  }
  return layers == 0 ? 0.0 : acc / static_cast<double>(layers);
}

double DiscriminatorLoss(std::span<const DiscriminatorOutput> real,
                         std::span<const DiscriminatorOutput> fake) {
  Require(!real.empty(), ErrorCode::kInvalidArgument,
          "need at least one discriminator");
  Require(real.size() == fake.size(), ErrorCode::kInvalidArgument,
          "real and fake discriminator counts differ");
  double acc = 0.0;
  for (size_t k = 0; k < real.size(); ++k) {
    acc += std::max(0.0, 1.0 + MeanScore(fake[k])) +
           std::max(0.0, 1.0 - MeanScore(real[k]));
  }
  return acc / static_cast<double>(real.size());
}

namespace {

CommitmentBreakdown SummarizeCommitment(const Matrix& embeddings,
                                        const QuantizedFrames& quantized,
                                        const ResidualTrace& trace,
                                        NormKind norm) {
  CommitmentBreakdown out;
  out.global = MeanNorm(embeddings.data(), quantized.reconstruction.data(),
                        NormKind::kL1);
  const std::vector<double> zeros(embeddings.data().size(), 0.0);
  double sum = 0.0;
  for (const Matrix& residual : trace.residuals) {
    // ||Q_{i-1} - VQ_i(Q_{i-1})|| is the norm of the next residual Q_i.
    const double v = MeanNorm(residual.data(), zeros, norm);
    out.per_level.push_back(v);
    sum += v;
  }
  out.total = out.global + sum / static_cast<double>(trace.residuals.size());
  return out;
}

}  // namespace

CommitmentBreakdown CommitmentLoss(const Matrix& embeddings,
                                   const GrvqQuantizer& q, size_t n_levels,
                                   NormKind norm) {
  ResidualTrace trace;
  const auto quantized = GrvqEncode(q, embeddings, n_levels, &trace);
  return SummarizeCommitment(embeddings, quantized, trace, norm);
}

CommitmentBreakdown CommitmentLoss(const Matrix& embeddings,
                                   const RvqQuantizer& q, size_t n_levels,
                                   NormKind norm) {
  ResidualTrace trace;
  const auto quantized = RvqEncode(q, embeddings, n_levels, &trace);
  return SummarizeCommitment(embeddings, quantized, trace, norm);
}

CompositeLoss CombineLosses(std::span<const WeightedTerm> terms) {
  CompositeLoss out;
  for (const auto& term : terms) {
    Require(term.weight >= 0.0, ErrorCode::kInvalidArgument,
            "loss weight for '" + term.name + "' is negative");
    out.total += term.weight * term.value;
    out.terms.push_back(term);
  }
  return out;
}

}  // namespace rvqkit
