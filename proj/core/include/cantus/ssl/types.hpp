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

#include "cantus/common/mat.hpp"

namespace cantus::ssl {

// A stack of per-layer hidden feature matrices from a speech representation
// model. Every layer is frames x dim with a shared frame rate.
struct SSLFeatureStack {
  std::vector<MatD> layers;  // each frames x dim
  double frame_rate_hz = 0.0;
  std::string provider_name;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int frames() const { return layers.empty() ? 0 : layers[0].rows; }
  int dim() const { return layers.empty() ? 0 : layers[0].cols; }

  // Throws std::invalid_argument unless all layers share one shape and the
  // frame rate is positive.
  void validate() const;
};

}  // namespace cantus::ssl
