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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cantus::dsp {

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 0;

  size_t size() const { return samples.size(); }
  double duration_sec() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// Throws std::invalid_argument if the rate is non-positive or any sample is
// non-finite.
void validate(const Waveform& w);

struct AudioConfig {
  int sample_rate_hz = 24000;
  int hop = 480;
  int n_fft = 2048;
  int win_length = 2048;
  int n_mels = 80;
  double fmin_hz = 0.0;
  double fmax_hz = 12000.0;
  // Input rate required by the default SSL feature provider.
  int ssl_input_rate_hz = 16000;

  double frame_rate_hz() const { return static_cast<double>(sample_rate_hz) / hop; }

  // Throws std::invalid_argument unless
  // 0 < hop <= win_length <= n_fft and 0 <= fmin < fmax <= rate / 2.
  void validate() const;
};

// Number of analysis frames for n samples: ceil(n / hop). Zero for empty input.
int frame_count(size_t n_samples, int hop);

// Maps an out-of-range index into [0, n) by reflecting around the signal
// edges without repeating the edge sample. n == 1 always maps to 0.
long reflect_index(long i, long n);

// Periodic Hann window of length n: w[i] = 0.5 - 0.5 cos(2 pi i / n).
std::vector<double> make_hann_periodic(int n);

}  // namespace cantus::dsp
