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

#include <string>
#include <vector>

#include "cantus/dsp/audio.hpp"
#include "cantus/nn/layers.hpp"
#include "cantus/nn/param.hpp"
#include "cantus/nn/tape.hpp"

namespace cantus::gan {

struct DiscConfig {
  int base_channels = 8;
  std::vector<int> mrsd_fft_sizes{512, 1024, 2048};  // hop = fft / 4
  std::vector<int> mpd_periods{2, 3, 5, 7, 11};
  std::vector<int> msd_pools{1, 2, 4};

  // Shortest waveform the spectral branch can frame.
  int min_input_samples() const {
    int m = 1;
    for (int f : mrsd_fft_sizes) m = std::max(m, f);
    return m;
  }
};

// Scores plus the intermediate activations used for feature matching, one
// entry per sub-discriminator.
template <class T>
struct DiscOutput {
  std::vector<typename nn::Tape<T>::Var> scores;
  std::vector<std::vector<typename nn::Tape<T>::Var>> features;
};

// Ensemble discriminator over three views of the waveform: multi-resolution
// power spectrograms, period-folded sample grids, and average-pooled
// multi-scale raw audio. All sub-networks are small strided conv2d stacks.
template <class T>
class Discriminator {
 public:
  using Tape = nn::Tape<T>;
  using Var = typename Tape::Var;

  explicit Discriminator(DiscConfig cfg, uint64_t seed = 2) : cfg_(cfg) {
    const int c = cfg_.base_channels;
    if (c <= 0) throw std::invalid_argument("discriminator: base_channels must be > 0");
    for (size_t i = 0; i < cfg_.mrsd_fft_sizes.size(); ++i) {
      const std::string p = "disc.spec" + std::to_string(i);
      spec_.push_back(Stack{
          nn::Conv2d<T>(ps_, p + ".c1", 1, c, 3, 3, 1, 1, 1, 1, seed),
          nn::Conv2d<T>(ps_, p + ".c2", c, 2 * c, 3, 3, 2, 2, 1, 1, seed),
          nn::Conv2d<T>(ps_, p + ".c3", 2 * c, 4 * c, 3, 3, 2, 2, 1, 1, seed),
          nn::Conv2d<T>(ps_, p + ".out", 4 * c, 1, 3, 3, 1, 1, 1, 1, seed),
      });
      windows_.push_back(dsp::make_hann_periodic(cfg_.mrsd_fft_sizes[i]));
    }
    for (size_t i = 0; i < cfg_.mpd_periods.size(); ++i) {
      const std::string p = "disc.period" + std::to_string(i);
      period_.push_back(Stack{
          nn::Conv2d<T>(ps_, p + ".c1", 1, c, 5, 1, 3, 1, 2, 0, seed),
          nn::Conv2d<T>(ps_, p + ".c2", c, 2 * c, 5, 1, 3, 1, 2, 0, seed),
          nn::Conv2d<T>(ps_, p + ".c3", 2 * c, 4 * c, 5, 1, 3, 1, 2, 0, seed),
          nn::Conv2d<T>(ps_, p + ".out", 4 * c, 1, 3, 1, 1, 1, 1, 0, seed),
      });
    }
    for (size_t i = 0; i < cfg_.msd_pools.size(); ++i) {
      const std::string p = "disc.scale" + std::to_string(i);
      scale_.push_back(Stack{
          nn::Conv2d<T>(ps_, p + ".c1", 1, c, 1, 15, 1, 1, 0, 7, seed),
          nn::Conv2d<T>(ps_, p + ".c2", c, 2 * c, 1, 15, 1, 4, 0, 7, seed),
          nn::Conv2d<T>(ps_, p + ".c3", 2 * c, 4 * c, 1, 15, 1, 4, 0, 7, seed),
          nn::Conv2d<T>(ps_, p + ".out", 4 * c, 1, 1, 5, 1, 1, 0, 2, seed),
      });
    }
  }

  const DiscConfig& config() const { return cfg_; }
  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  // wav: {N}. N must be at least min_input_samples().
  DiscOutput<T> forward(Tape& tape, Var wav) const {
    if (wav->shape.size() != 1) throw std::logic_error("discriminator: expected 1-d input");
    const int n = wav->shape[0];
    if (n < cfg_.min_input_samples()) {
      throw std::invalid_argument("discriminator: input shorter than the largest analysis frame");
    }
    DiscOutput<T> out;
    for (size_t i = 0; i < spec_.size(); ++i) {
      const int nfft = cfg_.mrsd_fft_sizes[i];
      Var p = tape.stft_power(wav, nfft, nfft / 4, windows_[i], /*centered=*/false);
      Var mag = tape.sqrt_(tape.add_scalar(p, T(1e-9)));
      run_stack(tape, spec_[i], tape.reshape(mag, {1, mag->shape[0], mag->shape[1]}), out);
    }
    for (size_t i = 0; i < period_.size(); ++i) {
      const int prd = cfg_.mpd_periods[i];
      Var x2 = tape.reshape(wav, {1, n});
      const int padded = (n + prd - 1) / prd * prd;
      if (padded != n) x2 = tape.pad_cols(x2, padded);
      run_stack(tape, period_[i], tape.reshape(x2, {1, padded / prd, prd}), out);
    }
    for (size_t i = 0; i < scale_.size(); ++i) {
      const int pool = cfg_.msd_pools[i];
      Var x2 = tape.reshape(wav, {1, n});
      if (pool > 1) x2 = tape.avg_pool1d(x2, pool);
      run_stack(tape, scale_[i], tape.reshape(x2, {1, 1, x2->shape[1]}), out);
    }
    return out;
  }

 private:
  struct Stack {
    nn::Conv2d<T> c1, c2, c3, out;
  };

  void run_stack(Tape& tape, const Stack& st, Var x, DiscOutput<T>& out) const {
    std::vector<Var> feats;
    x = tape.leaky_relu(st.c1.forward(tape, x), T(0.1));
    feats.push_back(x);
    x = tape.leaky_relu(st.c2.forward(tape, x), T(0.1));
    feats.push_back(x);
    x = tape.leaky_relu(st.c3.forward(tape, x), T(0.1));
    feats.push_back(x);
    out.scores.push_back(st.out.forward(tape, x));
    out.features.push_back(std::move(feats));
  }

  DiscConfig cfg_;
  nn::ParamStore<T> ps_;
  std::vector<Stack> spec_, period_, scale_;
  std::vector<std::vector<double>> windows_;
};

}  // namespace cantus::gan
