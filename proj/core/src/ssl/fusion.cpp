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

#include "cantus/ssl/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace cantus::ssl {

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (auto& v : out) v /= denom;
  return out;
}

std::vector<double> LayerWeights::weights() const { return softmax(logits); }

MatD weighted_sum(const SSLFeatureStack& stack, const std::vector<double>& weights) {
  stack.validate();
  if (static_cast<int>(weights.size()) != stack.num_layers()) {
    throw std::invalid_argument("weighted_sum: weight count does not match layer count");
  }
  MatD out(stack.frames(), stack.dim());
  for (int l = 0; l < stack.num_layers(); ++l) {
    const double w = weights[l];
    const MatD& layer = stack.layers[l];
    for (size_t i = 0; i < layer.v.size(); ++i) out.v[i] += w * layer.v[i];
  }
  return out;
}

MatD align_frames(const MatD& features, int target_frames) {
  if (features.rows <= 0 || features.cols <= 0) {
    throw std::invalid_argument("align_frames: empty input");
  }
  if (target_frames <= 0) throw std::invalid_argument("align_frames: target must be > 0");
  if (features.rows == target_frames) return features;

  if (std::abs(features.rows - target_frames) <= kAlignTruncationTolerance &&
      features.rows > target_frames) {
    MatD out(target_frames, features.cols);
    std::copy(features.v.begin(), features.v.begin() + out.v.size(), out.v.begin());
    return out;
  }

  // Endpoint-aligned linear interpolation along the time axis.
  MatD out(target_frames, features.cols);
  for (int t = 0; t < target_frames; ++t) {
    double pos = target_frames == 1
                     ? 0.0
                     : static_cast<double>(t) * (features.rows - 1) / (target_frames - 1);
    int i0 = static_cast<int>(pos);
    if (i0 >= features.rows - 1) i0 = features.rows - 2;
    if (i0 < 0) i0 = 0;
    const int i1 = std::min(i0 + 1, features.rows - 1);
    const double frac = pos - i0;
    for (int c = 0; c < features.cols; ++c) {
      out.at(t, c) = (1.0 - frac) * features.at(i0, c) + frac * features.at(i1, c);
    }
  }
  return out;
}

MatD fuse(const MatD& weighted_features, const MatD& mel) {
  if (weighted_features.rows <= 0 || mel.rows <= 0) {
    throw std::invalid_argument("fuse: empty input");
  }
  if (std::abs(weighted_features.rows - mel.rows) > kAlignTruncationTolerance) {
    throw std::logic_error("fuse: frame counts differ by more than the truncation tolerance");
  }
  const int frames = std::min(weighted_features.rows, mel.rows);
  MatD out(frames, weighted_features.cols + mel.cols);
  for (int t = 0; t < frames; ++t) {
    for (int c = 0; c < weighted_features.cols; ++c) out.at(t, c) = weighted_features.at(t, c);
    for (int c = 0; c < mel.cols; ++c) out.at(t, weighted_features.cols + c) = mel.at(t, c);
  }
  return out;
}

}  // namespace cantus::ssl
