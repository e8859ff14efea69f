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

#include "cantus/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace cantus::train {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("checkpoint: truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::istream& is) {
  const uint64_t lo = get_u32(is);
  const uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kCheckpointMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u64(os, ckpt.iteration);
  put_u64(os, ckpt.epoch);
  put_u32(os, static_cast<uint32_t>(ckpt.config_text.size()));
  os.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
  put_u32(os, static_cast<uint32_t>(ckpt.blobs.size()));
  for (const auto& [name, blob] : ckpt.blobs) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(blob.dims.size()));
    size_t numel = 1;
    for (uint32_t d : blob.dims) {
      put_u32(os, d);
      numel *= d;
    }
    if (numel != blob.data.size()) {
      throw std::logic_error("checkpoint: blob '" + name + "' dims do not match data size");
    }
    for (float f : blob.data) {
      uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(os, u);
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic in " + path);
  }
  const uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  CheckpointData ckpt;
  ckpt.iteration = get_u64(is);
  ckpt.epoch = get_u64(is);
  const uint32_t cfg_len = get_u32(is);
  ckpt.config_text.resize(cfg_len);
  is.read(ckpt.config_text.data(), cfg_len);
  if (!is) throw FormatError("checkpoint: truncated config");
  const uint32_t n_blobs = get_u32(is);
  for (uint32_t i = 0; i < n_blobs; ++i) {
    const uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw FormatError("checkpoint: truncated blob name");
    Blob blob;
    const uint32_t ndim = get_u32(is);
    blob.dims.resize(ndim);
    size_t numel = 1;
    for (auto& d : blob.dims) {
      d = get_u32(is);
      numel *= d;
    }
    blob.data.resize(numel);
    for (auto& f : blob.data) {
      const uint32_t u = get_u32(is);
      std::memcpy(&f, &u, 4);
    }
    if (!ckpt.blobs.emplace(std::move(name), std::move(blob)).second) {
      throw FormatError("checkpoint: duplicate blob name");
    }
  }
  return ckpt;
}

}  // namespace cantus::train
