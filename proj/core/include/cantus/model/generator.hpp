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

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cantus/common/mat.hpp"
#include "cantus/common/rng.hpp"
#include "cantus/dsp/audio.hpp"
#include "cantus/model/config.hpp"
#include "cantus/nn/adamw.hpp"
#include "cantus/nn/layers.hpp"
#include "cantus/nn/param.hpp"
#include "cantus/nn/tape.hpp"
#include "cantus/score/score.hpp"

namespace cantus::model {

// Clamp applied to predicted log-variances before any exp().
inline constexpr double kLogVarClampAbs = 14.0;

// Pitch embedding vocabulary: midi 0..127, index 128 = rest, 129 spare.
inline constexpr int kPitchVocab = 130;
inline constexpr int kRestPitchIndex = 128;

template <class T>
struct GaussianParams {
  Mat<T> mean;     // frames x latent
  Mat<T> log_var;  // frames x latent
};

// Conditional VAE generator: a score-driven prior encoder, a posterior
// encoder over fused speech features, and an upsampling decoder driven by a
// harmonic excitation. Templated on the scalar type so training runs float
// while finite-difference gradient checks instantiate double.
template <class T>
class Generator {
 public:
  using Tape = nn::Tape<T>;
  using Var = typename Tape::Var;

  struct EncodedGaussian {
    Var mean = nullptr;     // {latent, frames}
    Var log_var = nullptr;  // {latent, frames}
  };

  explicit Generator(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const uint64_t s = cfg_.init_seed;
    const int h = cfg_.hidden_channels;
    const int half = h / 2;

    spk_emb_ = nn::Embedding<T>(ps_, "gen.spk", cfg_.n_speakers, cfg_.speaker_emb_dim, s);
    logits_ = &ps_.create("gen.ssl.logits", {cfg_.ssl_layers});  // zero init: uniform mixture

    phon_emb_ = nn::Embedding<T>(ps_, "gen.prior.phon", cfg_.inventory_size, half, s);
    pitch_emb_ = nn::Embedding<T>(ps_, "gen.prior.pitch", kPitchVocab, half, s);
    prior_in_ = nn::Conv1d<T>(ps_, "gen.prior.in", h, h, 1, 1, s);
    prior_spk_ = nn::Linear<T>(ps_, "gen.prior.spk", cfg_.speaker_emb_dim, h, s);
    for (int i = 0; i < kNumResBlocks; ++i) {
      prior_res_[i] = nn::Conv1d<T>(ps_, "gen.prior.res" + std::to_string(i), h, h, kResKernel,
                                    1 << i, s);
    }
    prior_out_ = nn::Conv1d<T>(ps_, "gen.prior.out", h, 2 * cfg_.latent_dim, 1, 1, s);

    post_in_ = nn::Conv1d<T>(ps_, "gen.post.in", cfg_.ssl_dim + cfg_.n_mels, h, 1, 1, s);
    post_spk_ = nn::Linear<T>(ps_, "gen.post.spk", cfg_.speaker_emb_dim, h, s);
    for (int i = 0; i < kNumResBlocks; ++i) {
      post_res_[i] =
          nn::Conv1d<T>(ps_, "gen.post.res" + std::to_string(i), h, h, kResKernel, 1 << i, s);
    }
    post_out_ = nn::Conv1d<T>(ps_, "gen.post.out", h, 2 * cfg_.latent_dim, 1, 1, s);

    const int dec_in = cfg_.latent_dim + cfg_.speaker_emb_dim + cfg_.hop;
    dec_pre_ = nn::Conv1d<T>(ps_, "gen.dec.pre", dec_in, h, 3, 1, s);
    int ch = h;
    for (int i = 0; i < kNumUpStages; ++i) {
      dec_up_[i] = nn::ConvTranspose1d<T>(ps_, "gen.dec.up" + std::to_string(i), ch, ch / 2,
                                          kUpKernel[i], kUpStride[i], kUpPad[i], s);
      ch /= 2;
    }
    dec_post_ = nn::Conv1d<T>(ps_, "gen.dec.post", ch, 1, 7, 1, s);
  }

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }
  nn::Param<T>& layer_logits() { return *logits_; }
  const nn::Param<T>& layer_logits() const { return *logits_; }

  // Current softmax mixture over representation layers.
  std::vector<double> layer_weights() const {
    std::vector<double> l(logits_->val.begin(), logits_->val.end());
    const double mx = *std::max_element(l.begin(), l.end());
    double denom = 0.0;
    for (auto& v : l) {
      v = std::exp(v - mx);
      denom += v;
    }
    for (auto& v : l) v /= denom;
    return l;
  }

  // ---- graph builders (training / shared with inference) -------------------

  EncodedGaussian build_prior(Tape& tape, const score::FrameScore& fs, int speaker) const {
    check_speaker(speaker);
    if (fs.n_frames <= 0) throw std::invalid_argument("prior encoder: empty frame score");
    std::vector<int> pitch_ids(fs.n_frames);
    for (int t = 0; t < fs.n_frames; ++t) {
      const int m = fs.pitch_per_frame[t];
      pitch_ids[t] = m == score::kRestPitch ? kRestPitchIndex : m;
    }
    Var ph = phon_emb_.forward(tape, fs.phoneme_per_frame);
    Var pi = pitch_emb_.forward(tape, pitch_ids);
    Var x = prior_in_.forward(tape, tape.concat_rows({ph, pi}));
    x = tape.add_col(x, prior_spk_.forward(tape, speaker_vec(tape, speaker)));
    for (int i = 0; i < kNumResBlocks; ++i) {
      x = tape.add(tape.leaky_relu(prior_res_[i].forward(tape, x), T(0.1)), x);
    }
    return split_gaussian(tape, prior_out_.forward(tape, x));
  }

  // ssl_stack {L, D, frames} (usually a constant), mel {n_mels, frames}.
  // The layer mixture is computed inside so logit gradients flow.
  EncodedGaussian build_posterior(Tape& tape, Var ssl_stack, Var mel, int speaker) const {
    check_speaker(speaker);
    Var alpha = tape.softmax_vec(tape.leaf(*logits_));
    Var r = tape.layer_combine(ssl_stack, alpha);
    Var e = tape.concat_rows({r, mel});
    return build_posterior_from_fused(tape, e, speaker);
  }

  // e {ssl_dim + n_mels, frames}: already fused features.
  EncodedGaussian build_posterior_from_fused(Tape& tape, Var e, int speaker) const {
    check_speaker(speaker);
    Var x = post_in_.forward(tape, e);
    x = tape.add_col(x, post_spk_.forward(tape, speaker_vec(tape, speaker)));
    for (int i = 0; i < kNumResBlocks; ++i) {
      x = tape.add(tape.leaky_relu(post_res_[i].forward(tape, x), T(0.1)), x);
    }
    return split_gaussian(tape, post_out_.forward(tape, x));
  }

  // z = mean + exp(log_var / 2) * noise, noise constant {latent, frames}.
  Var reparameterize_graph(Tape& tape, const EncodedGaussian& g,
                           const std::vector<T>& noise) const {
    Var eps = tape.constant(g.mean->shape, noise);
    return tape.add(g.mean, tape.mul(tape.exp_(tape.mul_scalar(g.log_var, T(0.5))), eps));
  }

  // z {latent, frames} -> waveform {frames * hop}. The frame score supplies
  // the pitch curve for the harmonic excitation.
  Var build_decoder(Tape& tape, Var z, int speaker, const score::FrameScore& fs) const {
    check_speaker(speaker);
    if (z->shape.size() != 2 || z->shape[0] != cfg_.latent_dim) {
      throw std::logic_error("decoder: latent shape mismatch");
    }
    const int frames = z->shape[1];
    if (fs.n_frames < frames) {
      throw std::logic_error("decoder: frame score shorter than latent sequence");
    }
    Var spk = tape.repeat_col(spk_emb_.forward(tape, {speaker}), frames);
    Var exc = tape.constant({cfg_.hop, frames}, sine_excitation(fs, frames));
    Var x = dec_pre_.forward(tape, tape.concat_rows({z, spk, exc}));
    for (int i = 0; i < kNumUpStages; ++i) {
      x = tape.leaky_relu(dec_up_[i].forward(tape, x), T(0.1));
    }
    x = tape.tanh_(dec_post_.forward(tape, x));
    return tape.reshape(x, {x->shape[1]});
  }

  // ---- plain (inference) API ------------------------------------------------

  GaussianParams<T> encode_prior(const score::FrameScore& fs, int speaker) const {
    Tape tape;
    tape.param_grads_enabled(false);
    return to_host(build_prior(tape, fs, speaker));
  }

  // e: frames x (ssl_dim + n_mels), as produced by the fusion stage.
  GaussianParams<T> encode_posterior(const MatD& e, int speaker) const {
    if (e.cols != cfg_.ssl_dim + cfg_.n_mels) {
      throw std::invalid_argument("posterior encoder: fused width mismatch");
    }
    Tape tape;
    tape.param_grads_enabled(false);
    std::vector<T> em(e.v.size());
    for (int t = 0; t < e.rows; ++t)
      for (int c = 0; c < e.cols; ++c)
        em[static_cast<size_t>(c) * e.rows + t] = static_cast<T>(e.at(t, c));
    Var ev = tape.constant({e.cols, e.rows}, std::move(em));
    return to_host(build_posterior_from_fused(tape, ev, speaker));
  }

  // z = mean + exp(log_var / 2) * eps with seeded standard-normal eps.
  static Mat<T> reparameterize(const GaussianParams<T>& g, uint64_t seed) {
    Mat<T> z(g.mean.rows, g.mean.cols);
    Rng rng(seed);
    for (size_t i = 0; i < z.v.size(); ++i) {
      z.v[i] = g.mean.v[i] +
               std::exp(g.log_var.v[i] * T(0.5)) * static_cast<T>(rng.normal());
    }
    return z;
  }

  dsp::Waveform decode_waveform(const Mat<T>& z, int speaker, const score::FrameScore& fs) const {
    if (z.cols != cfg_.latent_dim) throw std::invalid_argument("decode: latent width mismatch");
    Tape tape;
    tape.param_grads_enabled(false);
    std::vector<T> zm(z.v.size());
    for (int t = 0; t < z.rows; ++t)
      for (int c = 0; c < z.cols; ++c)
        zm[static_cast<size_t>(c) * z.rows + t] = z.at(t, c);
    Var zv = tape.constant({cfg_.latent_dim, z.rows}, std::move(zm));
    Var wav = build_decoder(tape, zv, speaker, fs);
    dsp::Waveform out;
    out.sample_rate_hz = cfg_.sample_rate_hz;
    out.samples.assign(wav->val.begin(), wav->val.end());
    return out;
  }

  // Score -> audio: regulate, sample the prior with a seeded noise draw,
  // decode. Fully deterministic for a fixed (score, speaker, seed).
  dsp::Waveform synthesize(const score::MusicScore& sc, int speaker, uint64_t seed) const {
    const double frame_rate = static_cast<double>(cfg_.sample_rate_hz) / cfg_.hop;
    const score::FrameScore fs = score::length_regulate(sc, frame_rate);
    const GaussianParams<T> prior = encode_prior(fs, speaker);
    const Mat<T> z = reparameterize(prior, seed);
    return decode_waveform(z, speaker, fs);
  }

  // Standard-normal noise for the graph-side reparameterization, laid out
  // {latent, frames} channel-major.
  std::vector<T> sample_noise(int frames, uint64_t seed) const {
    std::vector<T> n(static_cast<size_t>(cfg_.latent_dim) * frames);
    Rng rng(seed);
    for (auto& v : n) v = static_cast<T>(rng.normal());
    return n;
  }

  // Sample-rate sine excitation folded to {hop, frames}: column t holds the
  // hop samples under frame t. Phase accumulates across voiced frames and
  // holds through rests (rest samples are zero).
  std::vector<T> sine_excitation(const score::FrameScore& fs, int frames) const {
    if (fs.n_frames < frames) throw std::logic_error("excitation: frame score too short");
    const size_t n = static_cast<size_t>(frames) * cfg_.hop;
    std::vector<T> flat(n, T(0));
    double phase = 0.0;
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (size_t s = 0; s < n; ++s) {
      const int t = static_cast<int>(s / cfg_.hop);
      const double f = score::midi_to_hz(fs.pitch_per_frame[t]);
      if (f > 0.0) {
        phase += two_pi * f / cfg_.sample_rate_hz;
        if (phase > two_pi) phase -= two_pi;
        flat[s] = static_cast<T>(std::sin(phase));
      }
    }
    std::vector<T> exc(n);
    for (int t = 0; t < frames; ++t)
      for (int j = 0; j < cfg_.hop; ++j)
        exc[static_cast<size_t>(j) * frames + t] = flat[static_cast<size_t>(t) * cfg_.hop + j];
    return exc;
  }

 private:
  static constexpr int kNumResBlocks = 4;
  static constexpr int kResKernel = 5;
  static constexpr int kNumUpStages = 4;
  static constexpr std::array<int, 4> kUpStride{8, 6, 5, 2};
  static constexpr std::array<int, 4> kUpKernel{16, 12, 15, 4};
  static constexpr std::array<int, 4> kUpPad{4, 3, 5, 1};

  void check_speaker(int speaker) const {
    if (speaker < 0 || speaker >= cfg_.n_speakers) {
      throw std::invalid_argument("unknown speaker id " + std::to_string(speaker));
    }
  }

  Var speaker_vec(Tape& tape, int speaker) const {
    return spk_emb_.forward(tape, {speaker});  // {spk_dim, 1}
  }

  EncodedGaussian split_gaussian(Tape& tape, Var stats) const {
    EncodedGaussian g;
    g.mean = tape.slice_rows(stats, 0, cfg_.latent_dim);
    g.log_var = tape.clamp(tape.slice_rows(stats, cfg_.latent_dim, cfg_.latent_dim),
                           T(-kLogVarClampAbs), T(kLogVarClampAbs));
    return g;
  }

  GaussianParams<T> to_host(const EncodedGaussian& g) const {
    const int latent = g.mean->shape[0], frames = g.mean->shape[1];
    GaussianParams<T> out;
    out.mean = Mat<T>(frames, latent);
    out.log_var = Mat<T>(frames, latent);
    for (int c = 0; c < latent; ++c) {
      for (int t = 0; t < frames; ++t) {
        out.mean.at(t, c) = g.mean->val[static_cast<size_t>(c) * frames + t];
        out.log_var.at(t, c) = g.log_var->val[static_cast<size_t>(c) * frames + t];
      }
    }
    return out;
  }

  ModelConfig cfg_;
  nn::ParamStore<T> ps_;
  nn::Embedding<T> spk_emb_;
  nn::Param<T>* logits_ = nullptr;
  nn::Embedding<T> phon_emb_;
  nn::Embedding<T> pitch_emb_;
  nn::Conv1d<T> prior_in_;
  nn::Linear<T> prior_spk_;
  std::array<nn::Conv1d<T>, kNumResBlocks> prior_res_;
  nn::Conv1d<T> prior_out_;
  nn::Conv1d<T> post_in_;
  nn::Linear<T> post_spk_;
  std::array<nn::Conv1d<T>, kNumResBlocks> post_res_;
  nn::Conv1d<T> post_out_;
  nn::Conv1d<T> dec_pre_;
  std::array<nn::ConvTranspose1d<T>, kNumUpStages> dec_up_;
  nn::Conv1d<T> dec_post_;
};

}  // namespace cantus::model
