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

#ifndef RVQKIT_FFT_H_
#define RVQKIT_FFT_H_

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace rvqkit {

// Real-input FFT of a fixed length n. Forward maps n reals to n/2 + 1 bins
// (unnormalized); Inverse maps n/2 + 1 bins back to n reals and divides by n.
// Plans are created once per length and shared; execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(size_t n);

  size_t size() const { return n_; }
  size_t bins() const { return n_ / 2 + 1; }

  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;
  void Inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

  struct Plans;

 private:
  size_t n_;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace rvqkit

#endif  // RVQKIT_FFT_H_
