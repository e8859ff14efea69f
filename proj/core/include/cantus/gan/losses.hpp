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
#include <vector>

#include "cantus/common/mat.hpp"
#include "cantus/dsp/audio.hpp"
#include "cantus/dsp/mel.hpp"
#include "cantus/gan/discriminator.hpp"
#include "cantus/model/generator.hpp"
#include "cantus/nn/tape.hpp"

namespace cantus::gan {

// Loss mixing weights for the generator objective
// total_g = lambda_kl * kl + lambda_mel * mel_l1 + adv_g + lambda_fm * fm.
struct LossWeights {
  double lambda_kl = 1.0;
  double lambda_mel = 45.0;
  double lambda_fm = 2.0;
};

// Least-squares GAN discriminator loss:
// sum over sub-discriminators of mean((s_real - 1)^2) + mean(s_fake^2).
template <class T>
typename nn::Tape<T>::Var lsgan_d_loss(nn::Tape<T>& tape, const DiscOutput<T>& real,
                                       const DiscOutput<T>& fake) {
  if (real.scores.size() != fake.scores.size() || real.scores.empty()) {
    throw std::logic_error("lsgan_d_loss: mismatched discriminator outputs");
  }
  typename nn::Tape<T>::Var total = nullptr;
  for (size_t i = 0; i < real.scores.size(); ++i) {
    auto r = tape.mean_all(tape.square(tape.add_scalar(real.scores[i], T(-1))));
    auto f = tape.mean_all(tape.square(fake.scores[i]));
    auto term = tape.add(r, f);
    total = total ? tape.add(total, term) : term;
  }
  return total;
}

// Least-squares GAN generator adversarial loss:
// sum over sub-discriminators of mean((s_fake - 1)^2).
template <class T>
typename nn::Tape<T>::Var lsgan_g_loss(nn::Tape<T>& tape, const DiscOutput<T>& fake) {
  if (fake.scores.empty()) throw std::logic_error("lsgan_g_loss: no discriminator outputs");
  typename nn::Tape<T>::Var total = nullptr;
  for (size_t i = 0; i < fake.scores.size(); ++i) {
    auto term = tape.mean_all(tape.square(tape.add_scalar(fake.scores[i], T(-1))));
    total = total ? tape.add(total, term) : term;
  }
  return total;
}

// Feature matching: mean absolute difference between real and fake
// activations, averaged over every recorded layer of every sub-discriminator.
template <class T>
typename nn::Tape<T>::Var feature_matching_loss(nn::Tape<T>& tape, const DiscOutput<T>& real,
                                                const DiscOutput<T>& fake) {
  if (real.features.size() != fake.features.size() || real.features.empty()) {
    throw std::logic_error("feature_matching_loss: mismatched discriminator outputs");
  }
  typename nn::Tape<T>::Var total = nullptr;
  int count = 0;
  for (size_t i = 0; i < real.features.size(); ++i) {
    if (real.features[i].size() != fake.features[i].size()) {
      throw std::logic_error("feature_matching_loss: layer count mismatch");
    }
    for (size_t l = 0; l < real.features[i].size(); ++l) {
      auto term = tape.mean_all(tape.abs_(tape.sub(fake.features[i][l], real.features[i][l])));
      total = total ? tape.add(total, term) : term;
      ++count;
    }
  }
  return tape.mul_scalar(total, T(1) / static_cast<T>(count));
}

// KL(q || p) between diagonal Gaussians, averaged over all latent elements:
// mean( 0.5 (lv_p - lv_q) + (exp(lv_q) + (mu_q - mu_p)^2) / (2 exp(lv_p)) - 0.5 ).
template <class T>
typename nn::Tape<T>::Var kl_loss(nn::Tape<T>& tape,
                                  const typename model::Generator<T>::EncodedGaussian& q,
                                  const typename model::Generator<T>::EncodedGaussian& p) {
  auto lv_diff = tape.mul_scalar(tape.sub(p.log_var, q.log_var), T(0.5));
  auto num = tape.add(tape.exp_(q.log_var), tape.square(tape.sub(q.mean, p.mean)));
  auto den = tape.mul_scalar(tape.exp_(p.log_var), T(2));
  auto elem = tape.add_scalar(tape.add(lv_diff, tape.div(num, den)), T(-0.5));
  return tape.mean_all(elem);
}

// Closed-form KL on host matrices (same element mean as kl_loss).
double kl_divergence_mean(const MatD& mu_q, const MatD& lv_q, const MatD& mu_p, const MatD& lv_p);

// L1 distance between log mel spectrograms, built on the differentiable
// spectrogram so gradients reach the synthesized waveform. Both inputs are
// {N} at cfg.sample_rate_hz; the reference is typically a constant node.
template <class T>
typename nn::Tape<T>::Var mel_l1_loss(nn::Tape<T>& tape, typename nn::Tape<T>::Var wav_hat,
                                      typename nn::Tape<T>::Var wav_ref,
                                      const dsp::AudioConfig& cfg) {
  cfg.validate();
  if (wav_hat->shape != wav_ref->shape) throw std::logic_error("mel_l1_loss: length mismatch");
  const MatD fb = dsp::mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate_hz, cfg.fmin_hz,
                                      cfg.fmax_hz);
  std::vector<T> fbt(fb.v.begin(), fb.v.end());
  auto filt = tape.constant({fb.rows, fb.cols}, std::move(fbt));
  const std::vector<double> window = dsp::make_hann_periodic(cfg.win_length);
  auto logmel = [&](typename nn::Tape<T>::Var w) {
    auto power = tape.stft_power(w, cfg.n_fft, cfg.hop, window, /*centered=*/true);
    auto melp = tape.clamp_min(tape.matmul(filt, power), T(dsp::kMelPowerFloor));
    return tape.log_(melp);
  };
  return tape.mean_all(tape.abs_(tape.sub(logmel(wav_hat), logmel(wav_ref))));
}

}  // namespace cantus::gan
