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

#include "cantus/train/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cantus::train {

namespace {

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<uint64_t>(x);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad unsigned integer for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string join_csv(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

void set_key(FullConfig& c, const std::string& key, const std::string& v) {
  // audio
  if (key == "audio.sample_rate_hz") c.audio.sample_rate_hz = parse_int(key, v);
  else if (key == "audio.hop") c.audio.hop = parse_int(key, v);
  else if (key == "audio.n_fft") c.audio.n_fft = parse_int(key, v);
  else if (key == "audio.win_length") c.audio.win_length = parse_int(key, v);
  else if (key == "audio.n_mels") c.audio.n_mels = parse_int(key, v);
  else if (key == "audio.fmin_hz") c.audio.fmin_hz = parse_double(key, v);
  else if (key == "audio.fmax_hz") c.audio.fmax_hz = parse_double(key, v);
  else if (key == "audio.ssl_input_rate_hz") c.audio.ssl_input_rate_hz = parse_int(key, v);
  // model
  else if (key == "model.latent_dim") c.model.latent_dim = parse_int(key, v);
  else if (key == "model.hidden_channels") c.model.hidden_channels = parse_int(key, v);
  else if (key == "model.speaker_emb_dim") c.model.speaker_emb_dim = parse_int(key, v);
  else if (key == "model.n_speakers") c.model.n_speakers = parse_int(key, v);
  // train
  else if (key == "train.lr") c.train.lr = parse_double(key, v);
  else if (key == "train.beta1") c.train.beta1 = parse_double(key, v);
  else if (key == "train.beta2") c.train.beta2 = parse_double(key, v);
  else if (key == "train.eps") c.train.eps = parse_double(key, v);
  else if (key == "train.weight_decay") c.train.weight_decay = parse_double(key, v);
  else if (key == "train.lr_gamma") c.train.lr_gamma = parse_double(key, v);
  else if (key == "train.epochs") c.train.epochs = parse_int(key, v);
  else if (key == "train.iterations_per_epoch") c.train.iterations_per_epoch = parse_int(key, v);
  else if (key == "train.batch_size") c.train.batch_size = parse_int(key, v);
  else if (key == "train.segment_frames") c.train.segment_frames = parse_int(key, v);
  else if (key == "train.seed") c.train.seed = parse_u64(key, v);
  // gan
  else if (key == "gan.lambda_kl") c.gan.lambda_kl = parse_double(key, v);
  else if (key == "gan.lambda_mel") c.gan.lambda_mel = parse_double(key, v);
  else if (key == "gan.lambda_fm") c.gan.lambda_fm = parse_double(key, v);
  else if (key == "gan.adversarial") c.gan.adversarial = parse_bool(key, v);
  else if (key == "gan.disc_base_channels") c.gan.disc_base_channels = parse_int(key, v);
  // provider
  else if (key == "provider.name") c.provider.name = v;
  else if (key == "provider.seed") c.provider.seed = parse_u64(key, v);
  else if (key == "provider.layers") c.provider.layers = parse_int(key, v);
  else if (key == "provider.dim") c.provider.dim = parse_int(key, v);
  else if (key == "provider.dir") c.provider.dir = v;
  // score
  else if (key == "score.phoneme_set") c.phoneme_symbols = split_csv(v);
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FullConfig parse_config(const std::string& text) {
  FullConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key=value");
    }
    set_key(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

FullConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

void apply_override(FullConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::runtime_error("override must be key=value: '" + assignment + "'");
  }
  set_key(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string serialize_config(const FullConfig& c) {
  std::ostringstream os;
  os << "audio.sample_rate_hz=" << c.audio.sample_rate_hz << "\n";
  os << "audio.hop=" << c.audio.hop << "\n";
  os << "audio.n_fft=" << c.audio.n_fft << "\n";
  os << "audio.win_length=" << c.audio.win_length << "\n";
  os << "audio.n_mels=" << c.audio.n_mels << "\n";
  os << "audio.fmin_hz=" << fmt_double(c.audio.fmin_hz) << "\n";
  os << "audio.fmax_hz=" << fmt_double(c.audio.fmax_hz) << "\n";
  os << "audio.ssl_input_rate_hz=" << c.audio.ssl_input_rate_hz << "\n";
  os << "model.latent_dim=" << c.model.latent_dim << "\n";
  os << "model.hidden_channels=" << c.model.hidden_channels << "\n";
  os << "model.speaker_emb_dim=" << c.model.speaker_emb_dim << "\n";
  os << "model.n_speakers=" << c.model.n_speakers << "\n";
  os << "train.lr=" << fmt_double(c.train.lr) << "\n";
  os << "train.beta1=" << fmt_double(c.train.beta1) << "\n";
  os << "train.beta2=" << fmt_double(c.train.beta2) << "\n";
  os << "train.eps=" << fmt_double(c.train.eps) << "\n";
  os << "train.weight_decay=" << fmt_double(c.train.weight_decay) << "\n";
  os << "train.lr_gamma=" << fmt_double(c.train.lr_gamma) << "\n";
  os << "train.epochs=" << c.train.epochs << "\n";
  os << "train.iterations_per_epoch=" << c.train.iterations_per_epoch << "\n";
  os << "train.batch_size=" << c.train.batch_size << "\n";
  os << "train.segment_frames=" << c.train.segment_frames << "\n";
  os << "train.seed=" << c.train.seed << "\n";
  os << "gan.lambda_kl=" << fmt_double(c.gan.lambda_kl) << "\n";
  os << "gan.lambda_mel=" << fmt_double(c.gan.lambda_mel) << "\n";
  os << "gan.lambda_fm=" << fmt_double(c.gan.lambda_fm) << "\n";
  os << "gan.adversarial=" << (c.gan.adversarial ? 1 : 0) << "\n";
  os << "gan.disc_base_channels=" << c.gan.disc_base_channels << "\n";
  os << "provider.name=" << c.provider.name << "\n";
  os << "provider.seed=" << c.provider.seed << "\n";
  os << "provider.layers=" << c.provider.layers << "\n";
  os << "provider.dim=" << c.provider.dim << "\n";
  os << "provider.dir=" << c.provider.dir << "\n";
  os << "score.phoneme_set=" << join_csv(c.phoneme_symbols) << "\n";
  return os.str();
}

}  // namespace cantus::train
