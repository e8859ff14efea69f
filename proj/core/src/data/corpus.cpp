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

#include "cantus/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cantus/common/rng.hpp"
#include "cantus/dsp/resample.hpp"
#include "cantus/dsp/wav_io.hpp"

namespace cantus::data {

namespace fs = std::filesystem;

std::vector<Utterance> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<Utterance> out;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 4) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": expected 4 tab-separated columns");
    }
    Utterance u;
    u.utt_id = cols[0];
    u.wav_path = resolve(cols[1]);
    u.score_path = resolve(cols[2]);
    try {
      size_t pos = 0;
      u.speaker_id = std::stoi(cols[3], &pos);
      if (pos != cols[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": bad speaker id '" + cols[3] + "'");
    }
    if (u.utt_id.empty() || u.speaker_id < 0) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": invalid entry");
    }
    if (!seen.insert(u.utt_id).second) {
      throw std::runtime_error("manifest: duplicate utterance id '" + u.utt_id + "'");
    }
    if (!fs::exists(u.wav_path)) {
      throw std::runtime_error("utterance '" + u.utt_id + "': missing waveform file " +
                               u.wav_path);
    }
    if (!fs::exists(u.score_path)) {
      throw std::runtime_error("utterance '" + u.utt_id + "': missing score file " +
                               u.score_path);
    }
    out.push_back(std::move(u));
  }
  if (out.empty()) throw std::runtime_error("manifest is empty: " + path);
  return out;
}

LoadedUtterance load_utterance(const Utterance& utt, const score::PhonemeInventory& inv,
                               int target_rate_hz) {
  LoadedUtterance lu;
  lu.meta = utt;
  dsp::Waveform w = dsp::read_wav(utt.wav_path);
  lu.wav = w.sample_rate_hz == target_rate_hz ? std::move(w) : dsp::resample(w, target_rate_hz);

  std::ifstream is(utt.score_path);
  if (!is) throw std::runtime_error("cannot open score: " + utt.score_path);
  std::stringstream buf;
  buf << is.rdbuf();
  lu.score = score::parse_score(buf.str(), inv, utt.utt_id, utt.speaker_id);
  return lu;
}

std::vector<std::vector<int>> shuffled_batches(int n_items, int batch_size, uint64_t seed,
                                               uint64_t epoch) {
  if (n_items <= 0 || batch_size <= 0) {
    throw std::invalid_argument("shuffled_batches: counts must be > 0");
  }
  std::vector<int> idx(n_items);
  for (int i = 0; i < n_items; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, mix_seed(0x6261746368ULL, epoch)));  // "batch"
  deterministic_shuffle(idx, rng);
  std::vector<std::vector<int>> batches;
  for (int i = 0; i < n_items; i += batch_size) {
    batches.emplace_back(idx.begin() + i, idx.begin() + std::min(n_items, i + batch_size));
  }
  return batches;
}

const std::vector<std::string>& synthetic_phoneme_symbols() {
  static const std::vector<std::string> syms{"SP", "a",  "e",  "i",  "o", "u",
                                             "ka", "ki", "ku", "ke", "ko"};
  return syms;
}

namespace {

constexpr int kCorpusRate = 24000;
constexpr int kNumPartials = 3;

// Per-speaker harmonic amplitude profiles; speakers beyond the table get a
// seeded random profile. Contrasting spectra keep speakers separable for
// similarity metrics even after heavy compression by a tiny model.
const double kProfiles[4][kNumPartials] = {
    {1.00, 0.12, 0.04},
    {0.30, 0.85, 0.55},
    {0.55, 0.20, 0.90},
    {0.80, 0.50, 0.15},
};

std::vector<double> speaker_profile(int speaker) {
  std::vector<double> p(kNumPartials);
  if (speaker < 4) {
    for (int i = 0; i < kNumPartials; ++i) p[i] = kProfiles[speaker][i];
  } else {
    Rng rng(mix_seed(777, static_cast<uint64_t>(speaker)));
    for (auto& v : p) v = rng.uniform(0.1, 1.0);
  }
  return p;
}

}  // namespace

std::string make_synthetic_corpus(uint64_t seed, int n_utts, int n_speakers,
                                  const std::string& out_dir) {
  if (n_utts <= 0 || n_speakers <= 0) {
    throw std::invalid_argument("synthetic corpus: counts must be > 0");
  }
  fs::create_directories(out_dir);
  const fs::path root(out_dir);

  {
    std::ofstream os(root / "phonemes.txt");
    if (!os) throw std::runtime_error("cannot write phoneme inventory");
    for (const auto& s : synthetic_phoneme_symbols()) os << s << "\n";
  }

  std::ostringstream manifest;
  manifest << "# utt_id\twav\tscore\tspeaker\n";

  const auto& syms = synthetic_phoneme_symbols();
  for (int u = 0; u < n_utts; ++u) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(u)));
    const int speaker = u % n_speakers;
    const std::vector<double> profile = speaker_profile(speaker);
    const int n_events = rng.uniform_int(2, 4);

    struct Note {
      int phoneme;
      int midi;
      double dur;
    };
    std::vector<Note> notes(n_events);
    double total = 0.0;
    for (auto& nt : notes) {
      nt.phoneme = rng.uniform_int(1, static_cast<int>(syms.size()) - 1);
      nt.midi = rng.uniform_int(57, 72);
      nt.dur = rng.uniform(0.2, 0.4);
      total += nt.dur;
    }

    // Cumulative rounding so note boundaries tile the waveform exactly.
    const long n_total = std::llround(total * kCorpusRate);
    std::vector<double> samples(static_cast<size_t>(n_total), 0.0);
    double phase[kNumPartials] = {0.0, 0.0, 0.0};
    double cum = 0.0;
    long start = 0;
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (const auto& nt : notes) {
      cum += nt.dur;
      const long end = std::min<long>(std::llround(cum * kCorpusRate), n_total);
      const double f0 = score::midi_to_hz(nt.midi);
      const long len = end - start;
      const long fade = std::min<long>(len / 2, kCorpusRate / 100);  // 10 ms
      for (long s = start; s < end; ++s) {
        double v = 0.0;
        for (int h = 0; h < kNumPartials; ++h) {
          phase[h] += two_pi * f0 * (h + 1) / kCorpusRate;
          if (phase[h] > two_pi) phase[h] -= two_pi;
          v += profile[h] * std::sin(phase[h]);
        }
        const long local = s - start;
        double env = 1.0;
        if (fade > 0 && local < fade) {
          env = 0.5 - 0.5 * std::cos(3.14159265358979323846 * local / fade);
        } else if (fade > 0 && end - 1 - s < fade) {
          env = 0.5 - 0.5 * std::cos(3.14159265358979323846 * (end - 1 - s) / fade);
        }
        samples[static_cast<size_t>(s)] = v * env;
      }
      start = end;
    }
    double peak = 0.0;
    for (double s : samples) peak = std::max(peak, std::fabs(s));
    const double scale = peak > 0.0 ? 0.5 / peak : 1.0;
    for (auto& s : samples) s = s * scale + 0.005 * rng.uniform(-1.0, 1.0);

    char wav_name[64], score_name[64];
    std::snprintf(wav_name, sizeof wav_name, "utt_%03d.wav", u);
    std::snprintf(score_name, sizeof score_name, "utt_%03d.score", u);
    dsp::Waveform wf;
    wf.sample_rate_hz = kCorpusRate;
    wf.samples = std::move(samples);
    dsp::write_wav((root / wav_name).string(), wf);

    {
      std::ofstream os(root / score_name);
      if (!os) throw std::runtime_error("cannot write score file");
      os << "# phoneme\tmidi\tduration_sec\n";
      char buf[128];
      for (const auto& nt : notes) {
        std::snprintf(buf, sizeof buf, "%s\t%d\t%.6f\n", syms[nt.phoneme].c_str(), nt.midi,
                      nt.dur);
        os << buf;
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "utt_%03d", u);
    manifest << id << '\t' << wav_name << '\t' << score_name << '\t' << speaker << "\n";
  }

  const std::string manifest_path = (root / "manifest.tsv").string();
  std::ofstream os(manifest_path);
  if (!os) throw std::runtime_error("cannot write manifest");
  os << manifest.str();
  return manifest_path;
}

}  // namespace cantus::data
