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

#include "cantus/dsp/mel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "cantus/dsp/fft.hpp"

namespace cantus::dsp {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies_hz(int n_mels, double fmin_hz, double fmax_hz) {
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    // Edges sit at mel_lo + k * step for k = 0 .. n_mels + 1; centers are the
    // interior points.
    const double mel = mel_lo + (mel_hi - mel_lo) * (m + 1) / (n_mels + 1);
    centers[m] = mel_to_hz(mel);
  }
  return centers;
}

MatD mel_filterbank(int n_mels, int n_fft, int sample_rate_hz, double fmin_hz, double fmax_hz) {
  const int bins = n_fft / 2 + 1;
  MatD fb(n_mels, bins, 0.0);

  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edge_hz(n_mels + 2);
  for (int k = 0; k < n_mels + 2; ++k) {
    edge_hz[k] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * k / (n_mels + 1));
  }

  for (int m = 0; m < n_mels; ++m) {
    const double left = edge_hz[m];
    const double center = edge_hz[m + 1];
    const double right = edge_hz[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate_hz / n_fft;
      double wgt = 0.0;
      if (f > left && f < right) {
        wgt = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      }
      fb.at(m, b) = wgt;
    }
  }
  return fb;
}

MelSpectrogram melspectrogram(const Waveform& w, const AudioConfig& cfg) {
  validate(w);
  cfg.validate();
  if (w.sample_rate_hz != cfg.sample_rate_hz) {
    throw std::invalid_argument("melspectrogram: waveform rate does not match config");
  }
  if (w.samples.empty()) {
    throw std::invalid_argument("melspectrogram: empty input");
  }

  const int frames = frame_count(w.samples.size(), cfg.hop);
  const int bins = cfg.n_fft / 2 + 1;
  const std::vector<double> window = make_hann_periodic(cfg.win_length);
  const MatD fb = mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate_hz, cfg.fmin_hz, cfg.fmax_hz);

  MelSpectrogram mel;
  mel.frame_rate_hz = cfg.frame_rate_hz();
  mel.values = MatD(frames, cfg.n_mels, 0.0);

  const long n = static_cast<long>(w.samples.size());
  const int woff = (cfg.n_fft - cfg.win_length) / 2;
  std::vector<double> buf(cfg.n_fft);
  std::vector<std::complex<double>> spec(cfg.n_fft);
  std::vector<double> power(bins);

  for (int t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const long start = static_cast<long>(t) * cfg.hop - cfg.win_length / 2;
    for (int j = 0; j < cfg.win_length; ++j) {
      const long src = reflect_index(start + j, n);
      buf[woff + j] = w.samples[src] * window[j];
    }
    for (int i = 0; i < cfg.n_fft; ++i) spec[i] = std::complex<double>(buf[i], 0.0);
    fft_inplace(spec.data(), spec.size(), -1);
    for (int b = 0; b < bins; ++b) {
      power[b] = spec[b].real() * spec[b].real() + spec[b].imag() * spec[b].imag();
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      const double* row = &fb.v[static_cast<size_t>(m) * bins];
      for (int b = 0; b < bins; ++b) acc += row[b] * power[b];
      mel.values.at(t, m) = std::log(std::max(acc, kMelPowerFloor));
    }
  }
  return mel;
}

}  // namespace cantus::dsp
