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

#include <cstdint>
#include <vector>

#include "cantus/dsp/audio.hpp"

namespace cantus::dsp {

inline constexpr double kF0MinHz = 40.0;
inline constexpr double kF0MaxHz = 1200.0;
// A frame is voiced iff both gates pass.
inline constexpr double kVoicingNccThreshold = 0.3;
inline constexpr double kVoicingRmsThreshold = 1e-4;

struct F0Track {
  std::vector<double> f0_hz;      // 0 exactly on unvoiced frames
  std::vector<uint8_t> voiced;    // 1 / 0
  size_t frames() const { return f0_hz.size(); }
};

// Frame-wise F0 by normalized cross-correlation over lags spanning
// [kF0MinHz, kF0MaxHz], with parabolic peak interpolation. Framing matches
// melspectrogram (centers at t * hop, reflect padding, ceil(n / hop) frames)
// so both emit the same frame count for the same input. Among near-equal
// correlation peaks the smallest lag wins, which rejects octave-down errors
// on strongly harmonic input.
F0Track extract_f0(const Waveform& w, const AudioConfig& cfg);

}  // namespace cantus::dsp
