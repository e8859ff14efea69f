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

#include "cantus/ssl/provider.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cantus/common/rng.hpp"
#include "cantus/dsp/mel.hpp"

namespace cantus::ssl {

void SSLFeatureStack::validate() const {
  if (layers.empty()) throw std::invalid_argument("feature stack: no layers");
  if (frame_rate_hz <= 0.0) throw std::invalid_argument("feature stack: frame rate must be > 0");
  const int r = layers[0].rows, c = layers[0].cols;
  if (r <= 0 || c <= 0) throw std::invalid_argument("feature stack: empty layer");
  for (const auto& l : layers) {
    if (l.rows != r || l.cols != c) {
      throw std::invalid_argument("feature stack: layer shapes differ");
    }
  }
}

namespace {

// Internal acoustic frontend for the synthetic provider: 16 kHz, hop 320
// (50 fps), 64 log filterbank channels.
dsp::AudioConfig synthetic_frontend_config() {
  dsp::AudioConfig c;
  c.sample_rate_hz = 16000;
  c.hop = 320;
  c.n_fft = 1024;
  c.win_length = 1024;
  c.n_mels = 64;
  c.fmin_hz = 0.0;
  c.fmax_hz = 8000.0;
  return c;
}

constexpr int kSyntheticBankDim = 64;

}  // namespace

SyntheticProvider::SyntheticProvider(uint64_t seed, int layers, int dim)
    : layers_(layers), dim_(dim) {
  if (layers <= 0 || dim <= 0) {
    throw std::invalid_argument("synthetic provider: layers and dim must be > 0");
  }
  proj_.resize(layers_);
  bias_.resize(layers_);
  for (int l = 0; l < layers_; ++l) {
    Rng rng(mix_seed(seed, 0x100 + static_cast<uint64_t>(l)));
    proj_[l].resize(static_cast<size_t>(dim_) * kSyntheticBankDim);
    bias_[l].resize(dim_);
    for (auto& v : proj_[l]) v = rng.uniform(-0.5, 0.5);
    for (auto& v : bias_[l]) v = rng.uniform(-0.1, 0.1);
  }
}

SSLFeatureStack SyntheticProvider::extract(const dsp::Waveform& wav,
                                           const std::string& /*utt_id*/) const {
  if (wav.sample_rate_hz != required_input_rate_hz()) {
    throw std::invalid_argument("synthetic provider: expected 16 kHz input");
  }
  const MatD bank = dsp::melspectrogram(wav, synthetic_frontend_config()).values;
  SSLFeatureStack out;
  out.frame_rate_hz = frame_rate_hz();
  out.provider_name = name();
  out.layers.resize(layers_);
  for (int l = 0; l < layers_; ++l) {
    MatD& m = out.layers[l];
    m = MatD(bank.rows, dim_);
    for (int f = 0; f < bank.rows; ++f) {
      for (int d = 0; d < dim_; ++d) {
        double acc = bias_[l][d];
        const double* prow = &proj_[l][static_cast<size_t>(d) * kSyntheticBankDim];
        for (int k = 0; k < kSyntheticBankDim; ++k) acc += prow[k] * bank.at(f, k);
        m.at(f, d) = acc;
      }
    }
  }
  out.validate();
  return out;
}

ExternalFileProvider::ExternalFileProvider(std::string dir, int layers, int dim,
                                           double frame_rate_hz)
    : dir_(std::move(dir)), layers_(layers), dim_(dim), frame_rate_(frame_rate_hz) {
  if (dir_.empty()) throw std::invalid_argument("external provider: feature dir required");
  if (layers_ <= 0 || dim_ <= 0 || frame_rate_ <= 0.0) {
    throw std::invalid_argument("external provider: invalid declared dims");
  }
}

SSLFeatureStack ExternalFileProvider::extract(const dsp::Waveform& /*wav*/,
                                              const std::string& utt_id) const {
  if (utt_id.empty()) {
    throw std::invalid_argument("external provider: utterance id required");
  }
  SSLFeatureStack stack = read_feature_file(dir_ + "/" + utt_id + ".sslfeat");
  if (stack.num_layers() != layers_ || stack.dim() != dim_) {
    throw std::invalid_argument("external provider: file dims do not match declared dims for " +
                                utt_id);
  }
  stack.provider_name = name();
  return stack;
}

std::unique_ptr<FeatureProvider> create_provider(const ProviderConfig& cfg) {
  if (cfg.name == "synthetic") {
    return std::make_unique<SyntheticProvider>(cfg.seed, cfg.layers, cfg.dim);
  }
  if (cfg.name == "external") {
    return std::make_unique<ExternalFileProvider>(cfg.dir, cfg.layers, cfg.dim, 50.0);
  }
  throw std::invalid_argument("unknown feature provider: " + cfg.name);
}

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("feature file: truncated header");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}

float get_f32(std::istream& is) {
  const uint32_t u = get_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

void write_feature_file(const std::string& path, const SSLFeatureStack& stack) {
  stack.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  put_u32(os, static_cast<uint32_t>(stack.num_layers()));
  put_u32(os, static_cast<uint32_t>(stack.frames()));
  put_u32(os, static_cast<uint32_t>(stack.dim()));
  put_f32(os, static_cast<float>(stack.frame_rate_hz));
  for (const auto& layer : stack.layers) {
    for (double v : layer.v) put_f32(os, static_cast<float>(v));
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

SSLFeatureStack read_feature_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open feature file: " + path);
  const uint32_t n_layers = get_u32(is);
  const uint32_t frames = get_u32(is);
  const uint32_t dim = get_u32(is);
  const float rate = get_f32(is);
  if (n_layers == 0 || frames == 0 || dim == 0 || !(rate > 0.0f)) {
    throw std::runtime_error("feature file: invalid header in " + path);
  }
  SSLFeatureStack stack;
  stack.frame_rate_hz = rate;
  stack.layers.resize(n_layers);
  for (uint32_t l = 0; l < n_layers; ++l) {
    MatD& m = stack.layers[l];
    m = MatD(static_cast<int>(frames), static_cast<int>(dim));
    for (auto& v : m.v) v = get_f32(is);
  }
  if (!is) throw std::runtime_error("feature file: truncated body in " + path);
  stack.validate();
  return stack;
}

}  // namespace cantus::ssl
