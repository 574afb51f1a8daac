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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rvqkit/losses.h"
#include "rvqkit/quantizer.h"
#include "rvqkit/status.h"
#include "test_signals.h"

namespace rvqkit {
namespace {

using testing::Noise;
using testing::Sine;

AudioBuffer Constant(size_t n, double v, int rate = 16000) {
  return AudioBuffer(std::vector<double>(n, v), rate);
}

DiscriminatorOutput Scores(std::vector<double> s) {
  return {std::move(s), {}};
}

TEST(NormTest, ParseAndName) {
  EXPECT_EQ(ParseNormKind("l1"), NormKind::kL1);
  EXPECT_EQ(ParseNormKind("l2"), NormKind::kL2);
  EXPECT_EQ(ParseNormKind("l1_plus_l2"), NormKind::kL1PlusL2);
  EXPECT_EQ(NormKindName(NormKind::kL1PlusL2), "l1_plus_l2");
  EXPECT_THROW(ParseNormKind("linf"), Error);
}

TEST(TimeDomainLossTest, Definitions) {
  const AudioBuffer z = Constant(100, 0.0);
  const AudioBuffer h = Constant(100, 0.5);
  EXPECT_EQ(TimeDomainLoss(z, z, NormKind::kL1), 0.0);
  EXPECT_DOUBLE_EQ(TimeDomainLoss(z, h, NormKind::kL1), 0.5);
  EXPECT_DOUBLE_EQ(TimeDomainLoss(z, h, NormKind::kL2), 0.25);
  EXPECT_DOUBLE_EQ(TimeDomainLoss(z, h, NormKind::kL1PlusL2), 0.75);
  EXPECT_THROW(TimeDomainLoss(z, Constant(99, 0.0), NormKind::kL1), Error);
}

TEST(MultiScaleMelLossTest, DefaultScalesArePowersFiveToEleven) {
  EXPECT_EQ(ScaleSet::Default().window_sizes,
            (std::vector<int>{32, 64, 128, 256, 512, 1024, 2048}));
  for (int w : ScaleSet::Default().window_sizes) {
    EXPECT_EQ(StftConfig::ForWindow(w).hop, w / 4);
  }
  EXPECT_EQ(MelBandsForWindow(1024), 80);
  EXPECT_EQ(MelBandsForWindow(32), 5);
  EXPECT_EQ(MelBandsForWindow(2048), 160);
}

TEST(MultiScaleMelLossTest, ZeroSymmetricAndSingleScale) {
  const AudioBuffer a = Sine(330.0, 16000, 0.5);
  const AudioBuffer b = testing::Mix(a, Noise(8000, 16000, 4, 0.05));
  const ScaleSet all = ScaleSet::Default();
  EXPECT_EQ(MultiScaleMelLoss(a, a, all, NormKind::kL1), 0.0);
  EXPECT_DOUBLE_EQ(MultiScaleMelLoss(a, b, all, NormKind::kL2),
                   MultiScaleMelLoss(b, a, all, NormKind::kL2));

  // The average over scales equals the mean of the single-scale losses.
  double sum = 0.0;
  for (int w : all.window_sizes) {
    sum += MultiScaleMelLoss(a, b, ScaleSet{{w}}, NormKind::kL1);
  }
  EXPECT_NEAR(MultiScaleMelLoss(a, b, all, NormKind::kL1), sum / 7.0, 1e-12);
}

TEST(MultiScaleMelLossTest, CombinedNormIsSumOfParts) {
  const AudioBuffer a = Sine(200.0, 16000, 0.3);
  const AudioBuffer b = Noise(a.size(), 16000, 12, 0.1);
  const ScaleSet s = ScaleSet::Default();
  EXPECT_NEAR(MultiScaleMelLoss(a, b, s, NormKind::kL1PlusL2),
              MultiScaleMelLoss(a, b, s, NormKind::kL1) +
                  MultiScaleMelLoss(a, b, s, NormKind::kL2),
              1e-9);
}

TEST(MultiScaleMelLossTest, TriangleBound) {
  const AudioBuffer a = Sine(200.0, 16000, 0.3);
  const AudioBuffer b = testing::Mix(a, Noise(a.size(), 16000, 1, 0.05));
  const AudioBuffer c = Noise(a.size(), 16000, 2, 0.2);
  const ScaleSet s = ScaleSet::Default();
  EXPECT_LE(MultiScaleMelLoss(a, c, s, NormKind::kL1),
            MultiScaleMelLoss(a, b, s, NormKind::kL1) +
                MultiScaleMelLoss(b, c, s, NormKind::kL1) + 1e-12);
  EXPECT_LE(TimeDomainLoss(a, c, NormKind::kL1),
            TimeDomainLoss(a, b, NormKind::kL1) + TimeDomainLoss(b, c, NormKind::kL1) +
                1e-12);
  // Mean squares are not a metric; their square root is.
  EXPECT_LE(std::sqrt(TimeDomainLoss(a, c, NormKind::kL2)),
            std::sqrt(TimeDomainLoss(a, b, NormKind::kL2)) +
                std::sqrt(TimeDomainLoss(b, c, NormKind::kL2)) + 1e-12);
}

TEST(MultiScaleMelLossTest, RejectsShortSignalsAndBadScales) {
  const AudioBuffer shorty = Constant(2000, 0.1);
  try {
    MultiScaleMelLoss(shorty, shorty, ScaleSet::Default(), NormKind::kL1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
  EXPECT_THROW(MultiScaleMelLoss(shorty, shorty, ScaleSet{{16}}, NormKind::kL1), Error);
  EXPECT_THROW(MultiScaleMelLoss(shorty, shorty, ScaleSet{{}}, NormKind::kL1), Error);
  EXPECT_THROW(MultiScaleMelLoss(shorty, shorty, ScaleSet{{100}}, NormKind::kL1), Error);
}

TEST(AdversarialLossTest, GeneratorHinge) {
  const std::vector<DiscriminatorOutput> zero = {Scores({0, 0, 0})};
  EXPECT_EQ(GeneratorAdversarialLoss(zero), 1.0);
  const std::vector<DiscriminatorOutput> two = {Scores({2, 2})};
  EXPECT_EQ(GeneratorAdversarialLoss(two), 0.0);
  const std::vector<DiscriminatorOutput> mixed = {Scores({0}), Scores({2})};
  EXPECT_EQ(GeneratorAdversarialLoss(mixed), 0.5);
  EXPECT_THROW(GeneratorAdversarialLoss({}), Error);
}

TEST(AdversarialLossTest, DiscriminatorHinge) {
  const std::vector<DiscriminatorOutput> real_one = {Scores({1})};
  const std::vector<DiscriminatorOutput> fake_neg = {Scores({-1})};
  EXPECT_EQ(DiscriminatorLoss(real_one, fake_neg), 0.0);

  const std::vector<DiscriminatorOutput> z = {Scores({0, 0})};
  EXPECT_EQ(DiscriminatorLoss(z, z), 2.0);

  // Per-discriminator values 0 and 2 average to 1.
  const std::vector<DiscriminatorOutput> real = {Scores({1}), Scores({0})};
  const std::vector<DiscriminatorOutput> fake = {Scores({-1}), Scores({0})};
  EXPECT_EQ(DiscriminatorLoss(real, fake), 1.0);
  EXPECT_THROW(DiscriminatorLoss(real, z), Error);
}

TEST(FeatureMatchingLossTest, Definitions) {
  DiscriminatorOutput a{{0.0}, {{1.0, 2.0, 3.0}}};
  EXPECT_EQ(FeatureMatchingLoss(std::span(&a, 1), std::span(&a, 1)), 0.0);

  DiscriminatorOutput b{{0.0}, {{1.3, 2.3, 3.3}}};
  EXPECT_NEAR(FeatureMatchingLoss(std::span(&a, 1), std::span(&b, 1)), 0.3, 1e-12);

  DiscriminatorOutput r{{0.0}, {{0.0, 0.0}, {0.0}}};
  DiscriminatorOutput f{{0.0}, {{0.2, -0.2}, {0.4}}};
  EXPECT_NEAR(FeatureMatchingLoss(std::span(&r, 1), std::span(&f, 1)), 0.3, 1e-12);

  DiscriminatorOutput wrong{{0.0}, {{1.0, 2.0}}};
  EXPECT_THROW(FeatureMatchingLoss(std::span(&a, 1), std::span(&wrong, 1)), Error);
}

RvqQuantizer Quantizer(std::initializer_list<std::initializer_list<double>> level_codes,
                       size_t dim) {
  std::vector<RvqLevel> levels;
  for (const auto& codes : level_codes) {
    std::vector<double> data(codes);
    const size_t rows = data.size() / dim;
    levels.push_back({Codebook(Matrix(rows, dim, std::move(data))), std::nullopt});
  }
  return RvqQuantizer(std::move(levels));
}

TEST(CommitmentLossTest, SingleFrameArithmetic) {
  const RvqQuantizer q = Quantizer({{0.0}}, 1);
  const CommitmentBreakdown c = CommitmentLoss(Matrix(1, 1, 0.5), q, 1, NormKind::kL1);
  EXPECT_DOUBLE_EQ(c.global, 0.5);
  ASSERT_EQ(c.per_level.size(), 1u);
  EXPECT_DOUBLE_EQ(c.per_level[0], 0.5);
  EXPECT_DOUBLE_EQ(c.total, 1.0);
}

TEST(CommitmentLossTest, ExactlyRepresentableFramesGiveZero) {
  const RvqQuantizer q = Quantizer({{0, 0, 1, 1}, {0, 0, 0.5, 0}}, 2);
  Matrix e(3, 2);
  e(0, 0) = 1.0; e(0, 1) = 1.0;
  e(1, 0) = 0.0; e(1, 1) = 0.0;
  e(2, 0) = 1.0; e(2, 1) = 1.0;
  const CommitmentBreakdown c = CommitmentLoss(e, q, 2, NormKind::kL1PlusL2);
  EXPECT_EQ(c.total, 0.0);

  // A residual only the second level resolves still costs at level one.
  e(2, 0) = 0.5; e(2, 1) = 0.0;
  const CommitmentBreakdown partial = CommitmentLoss(e, q, 2, NormKind::kL1);
  EXPECT_EQ(partial.global, 0.0);
  EXPECT_GT(partial.per_level[0], 0.0);
  EXPECT_EQ(partial.per_level[1], 0.0);
}

TEST(CommitmentLossTest, FrameOrderInvariantAndMatchesResidualChain) {
  Rng rng(4);
  std::vector<RvqLevel> levels;
  for (int l = 0; l < 3; ++l) {
    Matrix m(5, 3);
    for (double& v : m.data()) v = rng.Uniform() - 0.5;
    levels.push_back({Codebook(std::move(m)), std::nullopt});
  }
  const RvqQuantizer q(std::move(levels));
  Matrix e(12, 3);
  for (double& v : e.data()) v = 2.0 * rng.Uniform() - 1.0;
  Matrix reversed(12, 3);
  for (size_t t = 0; t < 12; ++t) {
    for (size_t d = 0; d < 3; ++d) reversed(t, d) = e(11 - t, d);
  }
  const CommitmentBreakdown a = CommitmentLoss(e, q, 3, NormKind::kL2);
  const CommitmentBreakdown b = CommitmentLoss(reversed, q, 3, NormKind::kL2);
  EXPECT_NEAR(a.total, b.total, 1e-12);

  // Per-level terms are the mean squares of the residual chain from the
  // quantizer itself.
  ResidualTrace trace;
  RvqEncode(q, e, 3, &trace);
  ASSERT_EQ(trace.residuals.size(), 3u);
  for (size_t l = 0; l < 3; ++l) {
    double acc = 0.0;
    for (double v : trace.residuals[l].data()) acc += v * v;
    EXPECT_DOUBLE_EQ(a.per_level[l], acc / 36.0);
  }
  // The Grvq overload with one group gives the same numbers.
  const CommitmentBreakdown g = CommitmentLoss(e, GrvqQuantizer({q}), 3, NormKind::kL2);
  EXPECT_EQ(g.total, a.total);
}

TEST(CommitmentLossTest, RejectsDimensionMismatch) {
  const RvqQuantizer q = Quantizer({{0.0, 1.0}}, 2);
  EXPECT_THROW(CommitmentLoss(Matrix(2, 3, 0.0), q, 1, NormKind::kL1), Error);
}

TEST(CompositeLossTest, WeightedSum) {
  std::vector<WeightedTerm> terms = {{"time", 0.0, 3.0}, {"mel", 0.0, 5.0}};
  EXPECT_EQ(CombineLosses(terms).total, 0.0);
  terms[0].weight = 1.0;
  EXPECT_EQ(CombineLosses(terms).total, 3.0);
  terms[1].weight = 0.5;
  const double base = CombineLosses(terms).total;
  for (auto& t : terms) t.weight *= 2.0;
  const CompositeLoss doubled = CombineLosses(terms);
  EXPECT_EQ(doubled.total, 2.0 * base);
  ASSERT_EQ(doubled.terms.size(), 2u);
  EXPECT_EQ(doubled.terms[1].name, "mel");
  terms[0].weight = -1.0;
  EXPECT_THROW(CombineLosses(terms), Error);
}

}  // namespace
}  // namespace rvqkit
