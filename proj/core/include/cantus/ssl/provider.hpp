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
#include <memory>
#include <string>

#include "cantus/dsp/audio.hpp"
#include "cantus/ssl/types.hpp"

namespace cantus::ssl {

struct ProviderConfig {
  std::string name = "synthetic";
  uint64_t seed = 17;
  int layers = 4;
  int dim = 8;
  std::string dir;  // feature directory for the file-backed provider
};

// Source of layerwise speech features. Implementations declare the input
// sample rate they need, their layer count, feature dim, and frame rate up
// front so the model can be sized before any audio is seen.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;

  virtual int required_input_rate_hz() const = 0;
  virtual int num_layers() const = 0;
  virtual int feature_dim() const = 0;
  virtual double frame_rate_hz() const = 0;
  virtual std::string name() const = 0;

  // Extracts the full layer stack for one utterance. The waveform must
  // already be at required_input_rate_hz(); utt_id is used by file-backed
  // providers to locate the matching feature file.
  virtual SSLFeatureStack extract(const dsp::Waveform& wav,
                                  const std::string& utt_id = "") const = 0;
};

// Deterministic stand-in provider: a seeded random affine map per layer over
// an internal 16 kHz log filterbank. Cheap, reproducible, and shaped exactly
// like a real representation model (layers x frames x dim at ~50 fps).
class SyntheticProvider final : public FeatureProvider {
 public:
  SyntheticProvider(uint64_t seed, int layers, int dim);

  int required_input_rate_hz() const override { return 16000; }
  int num_layers() const override { return layers_; }
  int feature_dim() const override { return dim_; }
  double frame_rate_hz() const override { return 50.0; }
  std::string name() const override { return "synthetic"; }
  SSLFeatureStack extract(const dsp::Waveform& wav, const std::string& utt_id) const override;

 private:
  int layers_;
  int dim_;
  // proj_[l] is dim x 64 row-major; bias_[l] is dim.
  std::vector<std::vector<double>> proj_;
  std::vector<std::vector<double>> bias_;
};

// Reads precomputed feature files (<dir>/<utt_id>.sslfeat) written by
// write_feature_file. Declared dims come from the config and are checked
// against every file.
class ExternalFileProvider final : public FeatureProvider {
 public:
  ExternalFileProvider(std::string dir, int layers, int dim, double frame_rate_hz);

  int required_input_rate_hz() const override { return 16000; }
  int num_layers() const override { return layers_; }
  int feature_dim() const override { return dim_; }
  double frame_rate_hz() const override { return frame_rate_; }
  std::string name() const override { return "external"; }
  SSLFeatureStack extract(const dsp::Waveform& wav, const std::string& utt_id) const override;

 private:
  std::string dir_;
  int layers_;
  int dim_;
  double frame_rate_;
};

// Registry keyed by ProviderConfig::name ("synthetic" or "external");
// throws std::invalid_argument for unknown names.
std::unique_ptr<FeatureProvider> create_provider(const ProviderConfig& cfg);

// Binary feature-file round trip. Layout: u32 layer count, u32 frames,
// u32 dim, f32 frame rate, then layer-major row-major f32 data,
// little-endian throughout.
void write_feature_file(const std::string& path, const SSLFeatureStack& stack);
SSLFeatureStack read_feature_file(const std::string& path);

}  // namespace cantus::ssl
