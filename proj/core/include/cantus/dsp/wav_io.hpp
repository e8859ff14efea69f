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

#include <stdexcept>
#include <string>

#include "cantus/dsp/audio.hpp"

namespace cantus::dsp {

struct WavFormatError : std::runtime_error {
  explicit WavFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Reads a 16-bit PCM mono RIFF WAV file. Samples map to [-1, 1) via s/32768.
// Multichannel or non-PCM16 content is rejected with a WavFormatError.
Waveform read_wav(const std::string& path);

// Writes 16-bit PCM mono. Samples are clipped to [-1, 1] and rounded.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace cantus::dsp
