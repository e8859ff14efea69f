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
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cantus::train {

// Binary checkpoint, magic "V2P1", all integers little-endian, tensor data
// float32. Layout: magic, u32 version, u64 iteration, u64 epoch,
// u32 config_len + config text, u32 blob count, then per blob
// u32 name_len + name, u32 ndim, u32 dims[], f32 data.
inline constexpr char kCheckpointMagic[4] = {'V', '2', 'P', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Blob {
  std::vector<uint32_t> dims;
  std::vector<float> data;
};

struct CheckpointData {
  uint64_t iteration = 0;
  uint64_t epoch = 0;
  std::string config_text;  // full serialized configuration
  std::map<std::string, Blob> blobs;
};

void save_checkpoint(const std::string& path, const CheckpointData& ckpt);

// Throws FormatError on bad magic/version/truncation.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace cantus::train
