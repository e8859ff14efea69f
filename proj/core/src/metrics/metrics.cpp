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

#include "cantus/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cantus/common/rng.hpp"
#include "cantus/data/corpus.hpp"
#include "cantus/dsp/mel.hpp"
#include "cantus/dsp/resample.hpp"
#include "cantus/ssl/provider.hpp"
#include "cantus/train/trainer.hpp"

namespace cantus::metrics {

namespace {

// Orthonormal DCT-II over one row.
void dct_row(const double* x, int n, double* out, int n_keep_from1) {
  const double pi = 3.14159265358979323846;
  for (int k = 1; k <= n_keep_from1; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += x[i] * std::cos(pi * (i + 0.5) * k / n);
    out[k - 1] = acc * std::sqrt(2.0 / n);
  }
}

double cep_dist(const MatD& a, int i, const MatD& b, int j) {
  double acc = 0.0;
  for (int c = 0; c < a.cols; ++c) {
    const double d = a.at(i, c) - b.at(j, c);
    acc += d * d;
  }
  return std::sqrt(acc);
}

dsp::AudioConfig embedder_config() {
  dsp::AudioConfig c;
  c.sample_rate_hz = 16000;
  c.hop = 320;
  c.n_fft = 1024;
  c.win_length = 1024;
  c.n_mels = kEmbeddingDim / 2;
  c.fmin_hz = 0.0;
  c.fmax_hz = 8000.0;
  return c;
}

}  // namespace

MatD mel_cepstra(const dsp::Waveform& w, const dsp::AudioConfig& cfg) {
  const MatD mel = dsp::melspectrogram(w, cfg).values;
  MatD out(mel.rows, kNumCepstra);
  for (int t = 0; t < mel.rows; ++t) {
    dct_row(&mel.v[static_cast<size_t>(t) * mel.cols], mel.cols,
            &out.v[static_cast<size_t>(t) * kNumCepstra], kNumCepstra);
  }
  return out;
}

double mcd_db_from_cepstra(const MatD& ref, const MatD& syn) {
  if (ref.rows <= 0 || syn.rows <= 0 || ref.cols != syn.cols) {
    throw std::invalid_argument("mcd: empty or mismatched cepstra");
  }
  const int n = ref.rows, m = syn.rows;
  // Full DP table of accumulated costs.
  MatD acc(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = cep_dist(ref, i, syn, j);
      if (i == 0 && j == 0) {
        acc.at(i, j) = c;
      } else {
        double best = std::numeric_limits<double>::infinity();
        if (i > 0 && j > 0) best = std::min(best, acc.at(i - 1, j - 1));
        if (i > 0) best = std::min(best, acc.at(i - 1, j));
        if (j > 0) best = std::min(best, acc.at(i, j - 1));
        acc.at(i, j) = c + best;
      }
    }
  }
  // Backtrack; ties prefer diagonal, then up, then left.
  int i = n - 1, j = m - 1;
  double total = cep_dist(ref, i, syn, j);
  long steps = 1;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double d = acc.at(i - 1, j - 1), u = acc.at(i - 1, j), l = acc.at(i, j - 1);
      if (d <= u && d <= l) {
        --i;
        --j;
      } else if (u <= l) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    total += cep_dist(ref, i, syn, j);
    ++steps;
  }
  return (10.0 / std::log(10.0)) * std::sqrt(2.0) * (total / static_cast<double>(steps));
}

double mcd_db(const dsp::Waveform& ref, const dsp::Waveform& syn, const dsp::AudioConfig& cfg) {
  return mcd_db_from_cepstra(mel_cepstra(ref, cfg), mel_cepstra(syn, cfg));
}

double f0_rmse_log(const dsp::F0Track& ref, const dsp::F0Track& syn) {
  const size_t n = std::min(ref.frames(), syn.frames());
  double acc = 0.0;
  long count = 0;
  for (size_t t = 0; t < n; ++t) {
    if (ref.voiced[t] && syn.voiced[t]) {
      const double d = std::log(ref.f0_hz[t]) - std::log(syn.f0_hz[t]);
      acc += d * d;
      ++count;
    }
  }
  if (count == 0) throw NoOverlapError("f0 tracks share no mutually voiced frames");
  return std::sqrt(acc / static_cast<double>(count));
}

int semitone_of(double f0_hz) {
  if (f0_hz <= 0.0) throw std::invalid_argument("semitone_of: frequency must be > 0");
  return static_cast<int>(std::llround(69.0 + 12.0 * std::log2(f0_hz / 440.0)));
}

double semitone_accuracy(const dsp::F0Track& ref, const dsp::F0Track& syn) {
  const size_t n = std::min(ref.frames(), syn.frames());
  long match = 0, count = 0;
  for (size_t t = 0; t < n; ++t) {
    if (ref.voiced[t] && syn.voiced[t]) {
      if (semitone_of(ref.f0_hz[t]) == semitone_of(syn.f0_hz[t])) ++match;
      ++count;
    }
  }
  if (count == 0) throw NoOverlapError("f0 tracks share no mutually voiced frames");
  return static_cast<double>(match) / static_cast<double>(count);
}

std::vector<double> speaker_embedding(const dsp::Waveform& w) {
  const dsp::AudioConfig cfg = embedder_config();
  const dsp::Waveform w16 =
      w.sample_rate_hz == cfg.sample_rate_hz ? w : dsp::resample(w, cfg.sample_rate_hz);
  const MatD mel = dsp::melspectrogram(w16, cfg).values;
  std::vector<double> emb(kEmbeddingDim, 0.0);
  const int bands = mel.cols;
  for (int c = 0; c < bands; ++c) {
    double mean = 0.0;
    for (int t = 0; t < mel.rows; ++t) mean += mel.at(t, c);
    mean /= mel.rows;
    double var = 0.0;
    for (int t = 0; t < mel.rows; ++t) {
      const double d = mel.at(t, c) - mean;
      var += d * d;
    }
    var /= mel.rows;
    emb[c] = mean;
    emb[bands + c] = var;
  }
  double norm = 0.0;
  for (double v : emb) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw DegenerateEmbeddingError("all-zero speaker embedding");
  for (auto& v : emb) v /= norm;
  return emb;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("cosine_similarity: size mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) throw DegenerateEmbeddingError("zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double secs(const dsp::Waveform& ref, const dsp::Waveform& syn) {
  return cosine_similarity(speaker_embedding(ref), speaker_embedding(syn));
}

void write_embedding(const std::string& path, const std::vector<double>& emb) {
  ssl::SSLFeatureStack stack;
  stack.frame_rate_hz = 1.0;
  stack.layers.emplace_back(1, static_cast<int>(emb.size()));
  stack.layers[0].v = emb;
  ssl::write_feature_file(path, stack);
}

std::vector<double> read_embedding(const std::string& path) {
  const ssl::SSLFeatureStack stack = ssl::read_feature_file(path);
  if (stack.num_layers() != 1 || stack.frames() != 1) {
    throw std::runtime_error("embedding file: expected a single 1-frame layer");
  }
  return stack.layers[0].v;
}

MetricsReport evaluate_corpus(const std::string& manifest_path,
                              const std::string& checkpoint_path, const EvalOptions& opts) {
  const train::CheckpointData ckpt = train::load_checkpoint(checkpoint_path);
  const train::LoadedModel model = train::load_model(ckpt);
  const auto manifest = data::load_manifest(manifest_path);

  MetricsReport report;
  double sum_mcd = 0.0, sum_f0 = 0.0, sum_st = 0.0, sum_secs = 0.0;
  int n_ok = 0;

  for (const auto& u : manifest) {
    UttMetrics um;
    um.utt_id = u.utt_id;
    try {
      const data::LoadedUtterance lu =
          data::load_utterance(u, model.inventory, model.cfg.audio.sample_rate_hz);
      const uint64_t seed = mix_seed(opts.seed, fnv1a(u.utt_id));
      const dsp::Waveform syn = model.gen->synthesize(lu.score, u.speaker_id, seed);

      um.mcd_db = mcd_db(lu.wav, syn, model.cfg.audio);
      const dsp::F0Track f_ref = dsp::extract_f0(lu.wav, model.cfg.audio);
      const dsp::F0Track f_syn = dsp::extract_f0(syn, model.cfg.audio);
      try {
        um.f0_rmse_log = f0_rmse_log(f_ref, f_syn);
        um.st_acc = semitone_accuracy(f_ref, f_syn);
        um.f0_valid = true;
      } catch (const NoOverlapError&) {
        um.f0_valid = false;
      }
      um.secs = secs(lu.wav, syn);
      um.ok = true;

      if (!opts.emb_dump_dir.empty()) {
        write_embedding(opts.emb_dump_dir + "/" + u.utt_id + "_ref.emb",
                        speaker_embedding(lu.wav));
        write_embedding(opts.emb_dump_dir + "/" + u.utt_id + "_syn.emb",
                        speaker_embedding(syn));
      }

      sum_mcd += um.mcd_db;
      sum_secs += um.secs;
      ++n_ok;
      if (um.f0_valid) {
        sum_f0 += um.f0_rmse_log;
        sum_st += um.st_acc;
        ++report.n_f0;
      }
    } catch (const std::exception& e) {
      um.ok = false;
      um.error = e.what();
      ++report.n_failed;
    }
    report.utts.push_back(std::move(um));
  }
  if (n_ok > 0) {
    report.mean_mcd_db = sum_mcd / n_ok;
    report.mean_secs = sum_secs / n_ok;
  }
  if (report.n_f0 > 0) {
    report.mean_f0_rmse_log = sum_f0 / report.n_f0;
    report.mean_st_acc = sum_st / report.n_f0;
  }
  return report;
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  char buf[256];
  os << "# f0_rmse_log is RMSE of natural-log F0 over mutually voiced frames\n";
  os << "n_utterances=" << r.utts.size() << "\n";
  os << "n_failed=" << r.n_failed << "\n";
  os << "n_f0_scored=" << r.n_f0 << "\n";
  std::snprintf(buf, sizeof buf, "mcd_db=%.6f\n", r.mean_mcd_db);
  os << buf;
  std::snprintf(buf, sizeof buf, "f0_rmse_log=%.6f\n", r.mean_f0_rmse_log);
  os << buf;
  std::snprintf(buf, sizeof buf, "st_acc=%.6f\n", r.mean_st_acc);
  os << buf;
  std::snprintf(buf, sizeof buf, "secs=%.6f\n", r.mean_secs);
  os << buf;
  os << "\nutt_id\tmcd_db\tf0_rmse_log\tst_acc\tsecs\tstatus\n";
  for (const auto& u : r.utts) {
    if (!u.ok) {
      os << u.utt_id << "\t-\t-\t-\t-\tfailed: " << u.error << "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.6f", u.mcd_db);
    os << u.utt_id << '\t' << buf << '\t';
    if (u.f0_valid) {
      std::snprintf(buf, sizeof buf, "%.6f", u.f0_rmse_log);
      os << buf << '\t';
      std::snprintf(buf, sizeof buf, "%.6f", u.st_acc);
      os << buf << '\t';
    } else {
      os << "-\t-\t";
    }
    std::snprintf(buf, sizeof buf, "%.6f", u.secs);
    os << buf << "\tok\n";
  }
  return os.str();
}

}  // namespace cantus::metrics
