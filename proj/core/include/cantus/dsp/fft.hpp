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

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cantus::dsp {

// In-place iterative radix-2 FFT. sign = -1 gives the forward transform
// X[k] = sum_n x[n] exp(-2 pi i k n / N); sign = +1 the unnormalized inverse
// kernel. Twiddles accumulate in double regardless of T so the float path
// keeps close to double accuracy. N must be a power of two.
template <class T>
void fft_inplace(std::complex<T>* a, size_t n, int sign) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft: size must be a power of two");
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<T> u = a[i + k];
        std::complex<T> v = a[i + k + len / 2];
        const T wr = static_cast<T>(w.real());
        const T wi = static_cast<T>(w.imag());
        std::complex<T> t(v.real() * wr - v.imag() * wi, v.real() * wi + v.imag() * wr);
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wl;
      }
    }
  }
}

// Forward FFT of a real signal; returns the n/2 + 1 non-redundant bins.
template <class T>
std::vector<std::complex<T>> rfft(const std::vector<T>& x) {
  std::vector<std::complex<T>> buf(x.size());
  for (size_t i = 0; i < x.size(); ++i) buf[i] = std::complex<T>(x[i], T(0));
  fft_inplace(buf.data(), buf.size(), -1);
  buf.resize(x.size() / 2 + 1);
  return buf;
}

}  // namespace cantus::dsp
