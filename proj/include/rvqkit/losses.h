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

#ifndef RVQKIT_LOSSES_H_
#define RVQKIT_LOSSES_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvqkit/audio.h"
#include "rvqkit/dsp.h"
#include "rvqkit/matrix.h"
#include "rvqkit/quantizer.h"

namespace rvqkit {

// All norms below are mean-reduced over elements; kL1PlusL2 adds the mean
// absolute and the mean squared difference.
enum class NormKind { kL1, kL2, kL1PlusL2 };

NormKind ParseNormKind(std::string_view name);
std::string_view NormKindName(NormKind kind);

double MeanNorm(std::span<const double> a, std::span<const double> b,
                NormKind kind);

// Multi-resolution mel scales: one STFT window per scale, hop = window / 4.
struct ScaleSet {
  std::vector<int> window_sizes;

  // Windows 2^5 .. 2^11.
  static ScaleSet Default();
  void Validate() const;
};

// Mel bands used at a given window: max(5, round(80 * window / 1024)).
int MelBandsForWindow(int window_size);

double TimeDomainLoss(const AudioBuffer& s, const AudioBuffer& s_hat,
                      NormKind norm);

// Average over scales of the mean-reduced norm between log-mel spectrograms.
double MultiScaleMelLoss(const AudioBuffer& s, const AudioBuffer& s_hat,
                         const ScaleSet& scales, NormKind norm);

// One discriminator's outputs for a single input: its score sequence and the
// flattened feature map of each layer.
struct DiscriminatorOutput {
  std::vector<double> scores;
  std::vector<std::vector<double>> features;
};

// (1/K) sum_k max(0, 1 - mean(D_k(s_hat))).
double GeneratorAdversarialLoss(std::span<const DiscriminatorOutput> fake);

// Mean-reduced L1 per layer, summed over all layers of all discriminators and
// divided by the total layer count.
double FeatureMatchingLoss(std::span<const DiscriminatorOutput> real,
                           std::span<const DiscriminatorOutput> fake);

// (1/K) sum_k [max(0, 1 + mean(D_k(s_hat))) + max(0, 1 - mean(D_k(s)))].
double DiscriminatorLoss(std::span<const DiscriminatorOutput> real,
                         std::span<const DiscriminatorOutput> fake);

struct CommitmentBreakdown {
  double global = 0.0;             // mean |E - E_hat|
  std::vector<double> per_level;   // mean norm of Q_i, i = 1..n_levels
  double total = 0.0;              // global + mean(per_level)
};

// Commitment loss of the residual chain run on E with the first n_levels.
CommitmentBreakdown CommitmentLoss(const Matrix& embeddings,
                                   const GrvqQuantizer& q, size_t n_levels,
                                   NormKind norm);
CommitmentBreakdown CommitmentLoss(const Matrix& embeddings,
                                   const RvqQuantizer& q, size_t n_levels,
                                   NormKind norm);

struct WeightedTerm {
  std::string name;
  double weight = 1.0;
  double value = 0.0;
};

struct CompositeLoss {
  double total = 0.0;
  std::vector<WeightedTerm> terms;  // echoes the inputs, in order
};

// sum_i weight_i * value_i; weights must be non-negative.
CompositeLoss CombineLosses(std::span<const WeightedTerm> terms);

}  // namespace rvqkit

#endif  // RVQKIT_LOSSES_H_
