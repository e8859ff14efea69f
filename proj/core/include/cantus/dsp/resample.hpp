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

#include "cantus/dsp/audio.hpp"

namespace cantus::dsp {

// Sinc kernel extent, in zero crossings on each side of the center tap.
inline constexpr int kResampleZeroCrossings = 32;
// The anti-aliasing cutoff sits just below the tighter Nyquist bound.
inline constexpr double kResampleCutoffScale = 0.99;

// Hann-windowed-sinc sample rate conversion. Output length is
// round(n * target / source). The low-pass cutoff is
// kResampleCutoffScale * min(source, target) / 2, which anti-aliases
// downsampling and band-limits interpolation when upsampling. Resampling to
// the source rate returns the input unchanged. Throws std::invalid_argument
// for a non-positive target rate or an invalid waveform.
Waveform resample(const Waveform& w, int target_rate_hz);

}  // namespace cantus::dsp
