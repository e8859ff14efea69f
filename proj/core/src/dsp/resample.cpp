// Copyright (c) 2026 Cantus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cantus/dsp/resample.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cantus::dsp {

namespace {

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate_hz) {
  validate(w);
  if (target_rate_hz <= 0) {
    throw std::invalid_argument("resample: target rate must be positive");
  }
  if (target_rate_hz == w.sample_rate_hz) {
    return w;  // identity, sample for sample
  }

  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  const long n = static_cast<long>(w.samples.size());
  const long out_len =
      std::llround(static_cast<double>(n) * target_rate_hz / w.sample_rate_hz);
  out.samples.assign(out_len, 0.0);
  if (n == 0 || out_len == 0) return out;

  // Normalized cutoff in cycles per *source* sample.
  const double cutoff_hz =
      kResampleCutoffScale * 0.5 * std::min(w.sample_rate_hz, target_rate_hz);
  const double two_nu = 2.0 * cutoff_hz / w.sample_rate_hz;  // 2 * cutoff / src
  // Kernel half-width in source samples: the windowed sinc spans
  // kResampleZeroCrossings zero crossings on each side of the center.
  const double half_width = kResampleZeroCrossings / two_nu;

  // Output sample m sits at source time m * src / tgt. Split the ratio into
  // an exact integer + fractional part so long signals accumulate no drift.
  const long g = std::gcd(static_cast<long>(w.sample_rate_hz), static_cast<long>(target_rate_hz));
  const long q = w.sample_rate_hz / g;  // source step numerator
  const long p = target_rate_hz / g;    // per-output denominator

  const double* x = w.samples.data();
  for (long m = 0; m < out_len; ++m) {
    const long num = m * q;
    const long ti = num / p;
    const double tf = static_cast<double>(num % p) / static_cast<double>(p);
    const double t = static_cast<double>(ti) + tf;

    long k0 = static_cast<long>(std::ceil(t - half_width));
    long k1 = static_cast<long>(std::floor(t + half_width));
    if (k0 < 0) k0 = 0;
    if (k1 > n - 1) k1 = n - 1;

    double acc = 0.0;
    for (long k = k0; k <= k1; ++k) {
      const double u = t - static_cast<double>(k);
      const double win = 0.5 + 0.5 * std::cos(M_PI * u / half_width);
      acc += x[k] * two_nu * sinc(two_nu * u) * win;
    }
    out.samples[m] = acc;
  }
  return out;
}

}  // namespace cantus::dsp
