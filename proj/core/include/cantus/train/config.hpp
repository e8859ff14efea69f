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
#include <string>
#include <vector>

#include "cantus/dsp/audio.hpp"
#include "cantus/ssl/provider.hpp"

namespace cantus::train {

struct TrainSection {
  double lr = 2e-4;
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-9;
  double weight_decay = 0.0;
  double lr_gamma = 0.998;  // per-epoch exponential decay
  int epochs = 5;
  int iterations_per_epoch = 100;
  int batch_size = 2;
  int segment_frames = 32;
  uint64_t seed = 1234;
};

struct GanSection {
  double lambda_kl = 1.0;
  double lambda_mel = 45.0;
  double lambda_fm = 2.0;
  bool adversarial = true;  // 0 disables the discriminator path entirely
  int disc_base_channels = 8;
};

struct ModelSection {
  int latent_dim = 32;
  int hidden_channels = 64;
  int speaker_emb_dim = 16;
  int n_speakers = 0;  // 0 = infer from the manifest at training time
};

// Whole-system configuration, serialized as flat "section.key=value" lines.
// The resolved phoneme inventory is part of the config so checkpoints are
// self-contained.
struct FullConfig {
  dsp::AudioConfig audio;
  ModelSection model;
  TrainSection train;
  GanSection gan;
  ssl::ProviderConfig provider;
  std::vector<std::string> phoneme_symbols;  // score.phoneme_set, comma-joined
};

// Parses config text. Unknown keys, malformed lines, and unparsable values
// raise std::runtime_error naming the offender; '#' and blank lines are
// skipped. Keys not present keep their defaults.
FullConfig parse_config(const std::string& text);

FullConfig load_config_file(const std::string& path);

// Applies one "section.key=value" override in place.
void apply_override(FullConfig& cfg, const std::string& assignment);

// Canonical serialization: every key, fixed order, doubles at full
// round-trip precision. parse_config(serialize_config(c)) == c.
std::string serialize_config(const FullConfig& cfg);

}  // namespace cantus::train
