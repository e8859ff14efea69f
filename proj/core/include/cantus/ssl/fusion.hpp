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

#include <vector>

#include "cantus/common/mat.hpp"
#include "cantus/ssl/types.hpp"

namespace cantus::ssl {

// Frame-count slack absorbed by truncation when aligning feature streams;
// larger mismatches are resampled (align_frames) or rejected (fuse).
inline constexpr int kAlignTruncationTolerance = 2;

// Learnable softmax mixture over representation layers.
struct LayerWeights {
  std::vector<double> logits;

  explicit LayerWeights(int n_layers) : logits(n_layers, 0.0) {}
  explicit LayerWeights(std::vector<double> l) : logits(std::move(l)) {}

  // softmax(logits); sums to 1 by construction.
  std::vector<double> weights() const;
};

std::vector<double> softmax(const std::vector<double>& logits);

// r = sum_l alpha_l * layer_l -> frames x dim. Layer count must match the
// weight count (std::invalid_argument otherwise).
MatD weighted_sum(const SSLFeatureStack& stack, const std::vector<double>& weights);

// Brings a feature matrix to target_frames rows: small mismatches
// (<= kAlignTruncationTolerance) truncate, larger ones are endpoint-aligned
// linearly interpolated along time.
MatD align_frames(const MatD& features, int target_frames);

// e = concat(r, mel) along the feature axis -> frames x (dim_r + n_mels).
// Frame counts may differ by at most kAlignTruncationTolerance (both are
// truncated to the shorter); beyond that the caller's framing is broken and
// std::logic_error is thrown.
MatD fuse(const MatD& weighted_features, const MatD& mel);

}  // namespace cantus::ssl
