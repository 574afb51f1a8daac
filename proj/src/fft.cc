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

#include "rvqkit/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "rvqkit/status.h"

namespace rvqkit {

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

namespace {

// FFTW's planner is not thread-safe; execution with the new-array interface
// is.
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

std::shared_ptr<const RealFft::Plans> GetPlans(size_t n) {
  static auto* cache = new std::map<size_t, std::shared_ptr<RealFft::Plans>>();
  std::lock_guard<std::mutex> lock(PlannerMutex());
  auto it = cache->find(n);
  if (it != cache->end()) return it->second;

  auto plans = std::make_shared<RealFft::Plans>();
  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  const int len = static_cast<int>(n);
  auto* c = reinterpret_cast<fftw_complex*>(spec.data());
  plans->forward = fftw_plan_dft_r2c_1d(len, real.data(), c,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans->inverse = fftw_plan_dft_c2r_1d(len, c, real.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  Require(plans->forward && plans->inverse, ErrorCode::kInvalidArgument,
          "FFTW could not plan a transform of this length");
  (*cache)[n] = plans;
  return plans;
}

}  // namespace

RealFft::RealFft(size_t n) : n_(n) {
  Require(n >= 2, ErrorCode::kInvalidArgument, "FFT length must be >= 2");
  plans_ = GetPlans(n);
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  Require(in.size() == n_ && out.size() == bins(),
          ErrorCode::kInvalidArgument, "FFT buffer size mismatch");
  // r2c does not modify its input, but the C API takes a non-const pointer.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::Inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) const {
  Require(in.size() == bins() && out.size() == n_,
          ErrorCode::kInvalidArgument, "FFT buffer size mismatch");
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->inverse,
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (double& v : out) v *= scale;
}

}  // namespace rvqkit
