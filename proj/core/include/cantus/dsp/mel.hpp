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

#include <vector>

#include "cantus/common/mat.hpp"
#include "cantus/dsp/audio.hpp"

namespace cantus::dsp {

// Power floor applied before the natural log.
inline constexpr double kMelPowerFloor = 1e-5;

struct MelSpectrogram {
  MatD values;  // frames x n_mels, natural-log mel power
  double frame_rate_hz = 0.0;
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequencies (Hz) of the n_mels triangular filters between fmin and
// fmax, equally spaced on the mel scale.
std::vector<double> mel_center_frequencies_hz(int n_mels, double fmin_hz, double fmax_hz);

// Triangular mel filterbank, peak-normalized (no area normalization).
// Shape: n_mels x (n_fft / 2 + 1).
MatD mel_filterbank(int n_mels, int n_fft, int sample_rate_hz, double fmin_hz, double fmax_hz);

// Log mel spectrogram. Frames are centered at t * hop with reflect padding,
// frame count = ceil(n / hop), Hann window of win_length inside n_fft, and
// values are ln(max(mel power, kMelPowerFloor)). The waveform rate must
// match cfg.sample_rate_hz; empty input is invalid.
MelSpectrogram melspectrogram(const Waveform& w, const AudioConfig& cfg);

}  // namespace cantus::dsp
