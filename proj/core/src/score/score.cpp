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

#include "cantus/score/score.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cantus::score {

PhonemeInventory PhonemeInventory::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("phoneme inventory: cannot open " + path);
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    symbols.push_back(line);
  }
  while (!symbols.empty() && symbols.back().empty()) symbols.pop_back();
  return from_symbols(std::move(symbols));
}

PhonemeInventory PhonemeInventory::from_symbols(std::vector<std::string> symbols) {
  PhonemeInventory inv;
  inv.symbols_ = std::move(symbols);
  for (size_t i = 0; i < inv.symbols_.size(); ++i) {
    if (inv.symbols_[i].empty()) {
      throw std::runtime_error("phoneme inventory: empty symbol at line " + std::to_string(i + 1));
    }
    if (!inv.index_.emplace(inv.symbols_[i], static_cast<int>(i)).second) {
      throw std::runtime_error("phoneme inventory: duplicate symbol '" + inv.symbols_[i] + "'");
    }
  }
  if (inv.symbols_.empty()) throw std::runtime_error("phoneme inventory: no symbols");
  return inv;
}

int PhonemeInventory::index_of(const std::string& symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

const std::string& PhonemeInventory::symbol(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("phoneme inventory: bad id");
  return symbols_[id];
}

double MusicScore::total_duration_sec() const {
  double total = 0.0;
  for (const auto& e : events) total += e.duration_sec;
  return total;
}

MusicScore parse_score(const std::string& text, const PhonemeInventory& inv,
                       const std::string& utterance_id, int speaker_id) {
  MusicScore s;
  s.utterance_id = utterance_id;
  s.speaker_id = speaker_id;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      const size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (fields.size() != 3) {
      throw ScoreParseError("score line " + std::to_string(line_no) +
                                ": expected phoneme<TAB>midi<TAB>duration",
                            line_no);
    }

    ScoreEvent ev;
    ev.phoneme_id = inv.index_of(fields[0]);
    if (ev.phoneme_id < 0) {
      throw ScoreParseError(
          "score line " + std::to_string(line_no) + ": unknown phoneme '" + fields[0] + "'",
          line_no);
    }
    try {
      size_t used = 0;
      ev.midi_pitch = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw ScoreParseError("score line " + std::to_string(line_no) + ": bad midi field", line_no);
    }
    if (ev.midi_pitch != kRestPitch && (ev.midi_pitch < 0 || ev.midi_pitch > 127)) {
      throw ScoreParseError(
          "score line " + std::to_string(line_no) + ": midi pitch out of range [0,127]", line_no);
    }
    try {
      size_t used = 0;
      ev.duration_sec = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw ScoreParseError("score line " + std::to_string(line_no) + ": bad duration field",
                            line_no);
    }
    if (!(ev.duration_sec > 0.0) || !std::isfinite(ev.duration_sec)) {
      throw ScoreParseError(
          "score line " + std::to_string(line_no) + ": duration must be positive", line_no);
    }
    s.events.push_back(ev);
  }

  if (s.events.empty()) throw ScoreParseError("score: no events", line_no);
  if (s.total_duration_sec() > kMaxScoreDurationSec) {
    throw ScoreParseError("score: total duration exceeds " +
                              std::to_string(kMaxScoreDurationSec) + " s",
                          line_no);
  }
  return s;
}

void validate(const MusicScore& s, const PhonemeInventory& inv) {
  if (s.events.empty()) throw std::invalid_argument("score: no events");
  for (size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    if (e.phoneme_id < 0 || e.phoneme_id >= inv.size()) {
      throw std::invalid_argument("score event " + std::to_string(i) + ": bad phoneme id");
    }
    if (e.midi_pitch != kRestPitch && (e.midi_pitch < 0 || e.midi_pitch > 127)) {
      throw std::invalid_argument("score event " + std::to_string(i) + ": bad midi pitch");
    }
    if (!(e.duration_sec > 0.0) || !std::isfinite(e.duration_sec)) {
      throw std::invalid_argument("score event " + std::to_string(i) + ": bad duration");
    }
  }
  if (s.total_duration_sec() > kMaxScoreDurationSec) {
    throw std::invalid_argument("score: total duration exceeds guard");
  }
}

FrameScore length_regulate(const MusicScore& s, double frame_rate_hz) {
  if (s.events.empty()) throw std::invalid_argument("length_regulate: empty score");
  if (!(frame_rate_hz > 0.0)) throw std::invalid_argument("length_regulate: bad frame rate");

  FrameScore fs;
  double cumsum = 0.0;
  long prev = 0;
  for (size_t i = 0; i < s.events.size(); ++i) {
    cumsum += s.events[i].duration_sec;
    const long cur = std::llround(cumsum * frame_rate_hz);
    const long k = cur - prev;
    if (k <= 0) {
      throw DegenerateDurationError(
          "length_regulate: event " + std::to_string(i) + " rounds to zero frames",
          static_cast<int>(i));
    }
    for (long j = 0; j < k; ++j) {
      fs.phoneme_per_frame.push_back(s.events[i].phoneme_id);
      fs.pitch_per_frame.push_back(s.events[i].midi_pitch);
    }
    prev = cur;
  }
  fs.n_frames = static_cast<int>(fs.phoneme_per_frame.size());
  return fs;
}

double midi_to_hz(int midi_pitch) {
  if (midi_pitch == kRestPitch) return 0.0;
  return 440.0 * std::pow(2.0, (midi_pitch - 69) / 12.0);
}

}  // namespace cantus::score
