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

#ifndef RVQKIT_RNG_H_
#define RVQKIT_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace rvqkit {

// Seeded generator with platform-independent derived draws. std::mt19937_64
// is fully specified by the standard; the distributions in <random> are not,
// so the conversions below are done by hand.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive.
  size_t UniformIndex(size_t n) {
    const uint64_t bound = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return static_cast<size_t>(draw % bound);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rvqkit

#endif  // RVQKIT_RNG_H_
