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

#include "cantus/dsp/audio.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cantus::dsp {

void validate(const Waveform& w) {
  if (w.sample_rate_hz <= 0) {
    throw std::invalid_argument("waveform: sample rate must be positive, got " +
                                std::to_string(w.sample_rate_hz));
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("waveform: non-finite sample");
    }
  }
}

void AudioConfig::validate() const {
  if (sample_rate_hz <= 0) throw std::invalid_argument("audio config: bad sample rate");
  if (hop <= 0 || win_length < hop || n_fft < win_length) {
    throw std::invalid_argument("audio config: need 0 < hop <= win_length <= n_fft");
  }
  if (n_mels <= 0) throw std::invalid_argument("audio config: n_mels must be positive");
  if (fmin_hz < 0.0 || fmax_hz <= fmin_hz || fmax_hz > sample_rate_hz / 2.0) {
    throw std::invalid_argument("audio config: need 0 <= fmin < fmax <= rate/2");
  }
}

int frame_count(size_t n_samples, int hop) {
  if (n_samples == 0) return 0;
  return static_cast<int>((n_samples + static_cast<size_t>(hop) - 1) / hop);
}

long reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  long m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

std::vector<double> make_hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  }
  return w;
}

}  // namespace cantus::dsp
