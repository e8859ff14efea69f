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

#include "cantus/dsp/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cantus::dsp {

namespace {

// Keep every candidate whose correlation reaches this fraction of the global
// maximum, then take the smallest lag among them.
constexpr double kPeakTolerance = 0.985;

struct FrameResult {
  bool voiced = false;
  double f0_hz = 0.0;
};

FrameResult analyze_frame(const std::vector<double>& x, int sample_rate_hz) {
  const int w = static_cast<int>(x.size());
  FrameResult res;

  double energy = 0.0;
  for (double s : x) energy += s * s;
  const double rms = std::sqrt(energy / w);
  if (rms < kVoicingRmsThreshold) return res;

  int tau_min = static_cast<int>(std::ceil(sample_rate_hz / kF0MaxHz));
  int tau_max = static_cast<int>(std::floor(sample_rate_hz / kF0MinHz));
  tau_min = std::max(tau_min, 2);
  tau_max = std::min(tau_max, w / 2);
  if (tau_max <= tau_min + 1) return res;

  // Prefix sums of x^2 make the two energy terms O(1) per lag.
  std::vector<double> e2(w + 1, 0.0);
  for (int i = 0; i < w; ++i) e2[i + 1] = e2[i] + x[i] * x[i];

  std::vector<double> ncc(tau_max + 1, 0.0);
  double best = 0.0;
  for (int tau = tau_min; tau <= tau_max; ++tau) {
    double num = 0.0;
    const int span = w - tau;
    for (int i = 0; i < span; ++i) num += x[i] * x[i + tau];
    const double ea = e2[span];
    const double eb = e2[w] - e2[tau];
    ncc[tau] = num / std::sqrt(ea * eb + 1e-30);
    best = std::max(best, ncc[tau]);
  }
  if (best < kVoicingNccThreshold) return res;

  // Smallest local maximum that comes close to the global one.
  int pick = -1;
  for (int tau = tau_min; tau <= tau_max; ++tau) {
    if (ncc[tau] < kPeakTolerance * best) continue;
    const double left = tau > tau_min ? ncc[tau - 1] : -2.0;
    const double right = tau < tau_max ? ncc[tau + 1] : -2.0;
    if (ncc[tau] >= left && ncc[tau] >= right) {
      pick = tau;
      break;
    }
  }
  if (pick < 0) return res;

  double tau_star = pick;
  if (pick > tau_min && pick < tau_max) {
    const double s0 = ncc[pick - 1], s1 = ncc[pick], s2 = ncc[pick + 1];
    const double denom = s0 - 2.0 * s1 + s2;
    if (std::fabs(denom) > 1e-12) {
      const double delta = 0.5 * (s0 - s2) / denom;
      if (std::fabs(delta) < 1.0) tau_star += delta;
    }
  }

  const double f0 = sample_rate_hz / tau_star;
  if (f0 < kF0MinHz || f0 > kF0MaxHz) return res;
  res.voiced = true;
  res.f0_hz = f0;
  return res;
}

}  // namespace

F0Track extract_f0(const Waveform& w, const AudioConfig& cfg) {
  validate(w);
  cfg.validate();
  if (w.samples.empty()) {
    throw std::invalid_argument("extract_f0: empty input");
  }

  const int frames = frame_count(w.samples.size(), cfg.hop);
  const long n = static_cast<long>(w.samples.size());
  const int fw = cfg.win_length;

  F0Track track;
  track.f0_hz.assign(frames, 0.0);
  track.voiced.assign(frames, 0);

  std::vector<double> frame(fw);
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * cfg.hop - fw / 2;
    for (int j = 0; j < fw; ++j) {
      frame[j] = w.samples[reflect_index(start + j, n)];
    }
    const FrameResult r = analyze_frame(frame, w.sample_rate_hz);
    if (r.voiced) {
      track.f0_hz[t] = r.f0_hz;
      track.voiced[t] = 1;
    }
  }
  return track;
}

}  // namespace cantus::dsp
