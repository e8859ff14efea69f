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

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "cantus/data/corpus.hpp"
#include "cantus/gan/discriminator.hpp"
#include "cantus/model/generator.hpp"
#include "cantus/nn/adamw.hpp"
#include "cantus/score/score.hpp"
#include "cantus/train/checkpoint.hpp"
#include "cantus/train/config.hpp"

namespace cantus::train {

struct LossBreakdown {
  double kl = 0.0;
  double mel_l1 = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double feat_match = 0.0;
  double total_g = 0.0;
  double total_d = 0.0;
};

// Per-utterance tensors cached once before training. All streams are
// truncated to one shared frame count so any segment is consistent across
// the waveform, the mel target, the fused features, and the frame score.
struct TrainItem {
  std::string utt_id;
  int speaker = 0;
  int frames = 0;
  std::vector<float> wav;      // frames * hop samples
  std::vector<float> mel;      // {n_mels, frames} channel-major
  std::vector<float> ssl;      // {layers, dim, frames} flattened
  score::FrameScore fscore;    // truncated to frames
};

// Alternating least-squares-GAN training: one discriminator update then one
// generator update per step. Every random draw (segment choice, latent
// noise) is keyed by (seed, step, utterance id), so per-item losses do not
// depend on batch composition and runs resume bit-for-bit from checkpoints.
class Trainer {
 public:
  // The config's phoneme set must be resolved; n_speakers == 0 is inferred
  // from the manifest.
  Trainer(FullConfig cfg, const std::string& manifest_path);

  LossBreakdown step(const std::vector<int>& item_indices);

  const FullConfig& config() const { return cfg_; }
  const std::vector<TrainItem>& items() const { return items_; }
  uint64_t global_step() const { return global_step_; }
  uint64_t epoch() const { return epoch_; }
  void set_epoch(uint64_t e) { epoch_ = e; }
  void set_lr(double lr);
  double learning_rate() const;

  model::Generator<float>& generator() { return *gen_; }
  gan::Discriminator<float>& discriminator() { return *disc_; }

  CheckpointData to_checkpoint() const;
  void restore(const CheckpointData& ckpt);

 private:
  struct Segment {
    int start = 0;
    int len = 0;
    std::vector<float> noise;
  };
  Segment draw_segment(const TrainItem& item) const;
  score::FrameScore slice_score(const TrainItem& item, int start, int len) const;
  void check_finite(double v, const char* role) const;

  FullConfig cfg_;
  score::PhonemeInventory inventory_;
  std::vector<TrainItem> items_;
  std::unique_ptr<model::Generator<float>> gen_;
  std::unique_ptr<gan::Discriminator<float>> disc_;
  std::unique_ptr<nn::AdamW<float>> opt_g_;
  std::unique_ptr<nn::AdamW<float>> opt_d_;
  uint64_t global_step_ = 0;
  uint64_t epoch_ = 0;
  double lr_ = 0.0;
};

struct TrainRunOptions {
  std::string out_dir;       // checkpoints go here
  std::ostream* log = nullptr;  // per-step loss lines (optional)
};

// Runs the configured epoch schedule with per-epoch exponential lr decay,
// writing ckpt_epoch<k>.v2p after each epoch and final.v2p at the end.
// Returns the final checkpoint path.
std::string run_training(Trainer& trainer, const TrainRunOptions& opts);

// One log line per optimization step.
std::string format_loss_line(uint64_t step, const LossBreakdown& lb, double lr);

// Generator-only reconstruction from a checkpoint for synthesis and
// evaluation. Never constructs a feature provider and never reads audio.
struct LoadedModel {
  FullConfig cfg;
  score::PhonemeInventory inventory;
  std::unique_ptr<model::Generator<float>> gen;
};
LoadedModel load_model(const CheckpointData& ckpt);

// Model sizing shared by the trainer and load_model.
model::ModelConfig make_model_config(const FullConfig& cfg, int inventory_size);

}  // namespace cantus::train
