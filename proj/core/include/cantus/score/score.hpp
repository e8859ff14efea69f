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
#include <unordered_map>
#include <vector>

namespace cantus::score {

// Rests carry this sentinel pitch and the dedicated rest phoneme.
inline constexpr int kRestPitch = -1;
inline constexpr const char* kRestPhoneme = "SP";
// Guard against absurd inputs; a desk corpus never comes close.
inline constexpr double kMaxScoreDurationSec = 30.0;

// Phoneme symbol table: one symbol per line, id = line number (0-based).
class PhonemeInventory {
 public:
  static PhonemeInventory from_file(const std::string& path);
  static PhonemeInventory from_symbols(std::vector<std::string> symbols);

  int index_of(const std::string& symbol) const;  // -1 if unknown
  const std::string& symbol(int id) const;
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct ScoreEvent {
  int phoneme_id = 0;
  int midi_pitch = kRestPitch;  // [0, 127] or kRestPitch
  double duration_sec = 0.0;
};

struct MusicScore {
  std::string utterance_id;
  int speaker_id = 0;
  std::vector<ScoreEvent> events;
  double total_duration_sec() const;
};

struct ScoreParseError : std::runtime_error {
  ScoreParseError(const std::string& msg, int line) : std::runtime_error(msg), line_no(line) {}
  int line_no;
};

// Parses "phoneme<TAB>midi<TAB>duration_sec" lines (UTF-8). Lines starting
// with '#' and blank lines are skipped. Unknown phonemes, out-of-range
// pitches, non-positive durations, and empty scores raise ScoreParseError
// with the offending line number.
MusicScore parse_score(const std::string& text, const PhonemeInventory& inv,
                       const std::string& utterance_id = "", int speaker_id = 0);

// Re-checks a score against the inventory (bounds, durations, total length).
void validate(const MusicScore& s, const PhonemeInventory& inv);

struct FrameScore {
  std::vector<int> phoneme_per_frame;
  std::vector<int> pitch_per_frame;  // midi, kRestPitch on rests
  int n_frames = 0;
};

struct DegenerateDurationError : std::runtime_error {
  DegenerateDurationError(const std::string& msg, int index)
      : std::runtime_error(msg), event_index(index) {}
  int event_index;
};

// Expands events to frame-level labels at frame_rate_hz. Per-event frame
// counts come from cumulative rounding (differences of round(cumsum * rate))
// so the total is exactly round(total_duration * rate) with no drift. An
// event that rounds to zero frames raises DegenerateDurationError naming the
// event index.
FrameScore length_regulate(const MusicScore& s, double frame_rate_hz);

// MIDI note to Hz: 440 * 2^((midi - 69) / 12). Rests map to 0.
double midi_to_hz(int midi_pitch);

}  // namespace cantus::score
