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
#include <stdexcept>
#include <string>
#include <vector>

#include "cantus/common/mat.hpp"
#include "cantus/dsp/audio.hpp"
#include "cantus/dsp/pitch.hpp"

namespace cantus::metrics {

// Raised when two F0 tracks share no mutually voiced frames.
struct NoOverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a waveform produces an all-zero speaker embedding.
struct DegenerateEmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Number of cepstral coefficients compared (DCT coefficients 1..13; the
// energy coefficient 0 is excluded).
inline constexpr int kNumCepstra = 13;

// Mel cepstra: orthonormal DCT-II of each log-mel frame, keeping
// coefficients 1..kNumCepstra. frames x kNumCepstra.
MatD mel_cepstra(const dsp::Waveform& w, const dsp::AudioConfig& cfg);

// Mel cepstral distortion in dB: (10 / ln 10) * sqrt(2) * mean Euclidean
// cepstral distance along the DTW alignment path. The DTW minimizes total
// path cost with steps {diagonal, up, left}; cost ties during backtracking
// prefer diagonal, then up (ref advance), then left.
double mcd_db_from_cepstra(const MatD& ref, const MatD& syn);
double mcd_db(const dsp::Waveform& ref, const dsp::Waveform& syn, const dsp::AudioConfig& cfg);

// RMSE of ln(F0) over mutually voiced frames (frame-wise on the shorter
// track). Throws NoOverlapError when no frame is voiced in both.
double f0_rmse_log(const dsp::F0Track& ref, const dsp::F0Track& syn);

// Nearest MIDI note of a frequency: llround(69 + 12 log2(f / 440)).
int semitone_of(double f0_hz);

// Fraction of mutually voiced frames whose nearest semitone matches.
double semitone_accuracy(const dsp::F0Track& ref, const dsp::F0Track& syn);

// Fixed-dimension speaker embedding: per-band mean and variance of a
// 32-band log mel spectrogram at 16 kHz, unit-normalized. 64 dims.
inline constexpr int kEmbeddingDim = 64;
std::vector<double> speaker_embedding(const dsp::Waveform& w);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Speaker embedding cosine similarity of two waveforms.
double secs(const dsp::Waveform& ref, const dsp::Waveform& syn);

// Embedding files reuse the feature-file layout with 1 layer and 1 frame.
void write_embedding(const std::string& path, const std::vector<double>& emb);
std::vector<double> read_embedding(const std::string& path);

struct UttMetrics {
  std::string utt_id;
  bool ok = false;
  std::string error;       // set when !ok
  double mcd_db = 0.0;
  double f0_rmse_log = 0.0;
  bool f0_valid = false;   // false when tracks had no voiced overlap
  double st_acc = 0.0;
  double secs = 0.0;
};

struct MetricsReport {
  std::vector<UttMetrics> utts;
  int n_failed = 0;
  int n_f0 = 0;  // utterances contributing to the F0 means
  double mean_mcd_db = 0.0;
  double mean_f0_rmse_log = 0.0;
  double mean_st_acc = 0.0;
  double mean_secs = 0.0;
};

struct EvalOptions {
  uint64_t seed = 99;
  std::string emb_dump_dir;  // when set, per-utterance embeddings are written
};

// Synthesizes every manifest utterance from its score with the checkpointed
// model and scores it against the reference audio. Per-utterance synthesis
// failures are recorded and excluded from the means.
MetricsReport evaluate_corpus(const std::string& manifest_path,
                              const std::string& checkpoint_path, const EvalOptions& opts);

// key=value summary plus a per-utterance TSV table.
std::string format_report(const MetricsReport& report);

}  // namespace cantus::metrics
