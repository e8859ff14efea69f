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

namespace cantus::model {

// Everything the generator needs to size its parameters. ssl_layers/ssl_dim
// come from the feature provider; inventory_size from the phoneme set.
struct ModelConfig {
  int latent_dim = 32;
  int hidden_channels = 64;
  int speaker_emb_dim = 16;
  int n_speakers = 1;
  int inventory_size = 0;
  int ssl_layers = 4;
  int ssl_dim = 8;
  int n_mels = 80;
  int hop = 480;
  int sample_rate_hz = 24000;
  uint64_t init_seed = 1;

  void validate() const {
    if (latent_dim <= 0 || hidden_channels <= 0 || speaker_emb_dim <= 0) {
      throw std::invalid_argument("model config: dims must be > 0");
    }
    if (hidden_channels % 16 != 0) {
      throw std::invalid_argument("model config: hidden_channels must be divisible by 16");
    }
    if (hidden_channels % 2 != 0) {
      throw std::invalid_argument("model config: hidden_channels must be even");
    }
    if (n_speakers <= 0) throw std::invalid_argument("model config: n_speakers must be > 0");
    if (inventory_size <= 0) {
      throw std::invalid_argument("model config: phoneme inventory must be non-empty");
    }
    if (ssl_layers <= 0 || ssl_dim <= 0) {
      throw std::invalid_argument("model config: feature dims must be > 0");
    }
    if (n_mels <= 0 || hop <= 0 || sample_rate_hz <= 0) {
      throw std::invalid_argument("model config: audio dims must be > 0");
    }
    if (hop != 480) {
      // The decoder's upsampling chain (8 * 6 * 5 * 2) is tied to this frame
      // hop; other hops would need a different stage layout.
      throw std::invalid_argument("model config: decoder requires hop 480");
    }
  }
};

}  // namespace cantus::model
