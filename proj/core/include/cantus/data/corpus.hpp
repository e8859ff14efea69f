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
#include <string>
#include <vector>

#include "cantus/dsp/audio.hpp"
#include "cantus/score/score.hpp"

namespace cantus::data {

struct Utterance {
  std::string utt_id;
  std::string wav_path;
  std::string score_path;
  int speaker_id = 0;
};

// Parses "utt_id<TAB>wav_path<TAB>score_path<TAB>speaker_id" lines; '#' and
// blank lines are skipped. Relative paths are resolved against the manifest's
// directory. Duplicate utterance ids are an error.
std::vector<Utterance> load_manifest(const std::string& path);

struct LoadedUtterance {
  Utterance meta;
  dsp::Waveform wav;  // resampled to the requested rate
  score::MusicScore score;
};

// Reads the audio and score for one manifest entry, resampling the waveform
// to target_rate_hz when the file rate differs.
LoadedUtterance load_utterance(const Utterance& utt, const score::PhonemeInventory& inv,
                               int target_rate_hz);

// Deterministic epoch shuffle: a seeded Fisher-Yates permutation of
// [0, n_items) chunked into batches (the final batch may be short).
std::vector<std::vector<int>> shuffled_batches(int n_items, int batch_size, uint64_t seed,
                                               uint64_t epoch);

// Writes a tiny self-contained singing corpus into out_dir: a phoneme
// inventory, per-utterance 24 kHz WAVs (three harmonic partials with
// speaker-specific amplitude profiles, per-note fades, and a little noise),
// matching score files, and a manifest. Byte-deterministic for a fixed seed.
// Returns the manifest path.
std::string make_synthetic_corpus(uint64_t seed, int n_utts, int n_speakers,
                                  const std::string& out_dir);

// The phoneme symbols make_synthetic_corpus writes (index 0 is the rest).
const std::vector<std::string>& synthetic_phoneme_symbols();

}  // namespace cantus::data
