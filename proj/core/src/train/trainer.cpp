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

#include "cantus/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "cantus/common/rng.hpp"
#include "cantus/dsp/mel.hpp"
#include "cantus/dsp/resample.hpp"
#include "cantus/gan/losses.hpp"
#include "cantus/ssl/fusion.hpp"
#include "cantus/ssl/provider.hpp"

namespace cantus::train {

namespace {

using Tape = nn::Tape<float>;
using Var = Tape::Var;

std::vector<float> slice_channels(const std::vector<float>& src, int channels, int frames,
                                  int start, int len) {
  std::vector<float> out(static_cast<size_t>(channels) * len);
  for (int c = 0; c < channels; ++c) {
    const float* row = &src[static_cast<size_t>(c) * frames];
    std::copy(row + start, row + start + len, out.begin() + static_cast<size_t>(c) * len);
  }
  return out;
}

void copy_blob_into(const CheckpointData& ckpt, const std::string& name,
                    std::vector<float>& dst) {
  auto it = ckpt.blobs.find(name);
  if (it == ckpt.blobs.end()) {
    throw FormatError("checkpoint: missing blob '" + name + "'");
  }
  if (it->second.data.size() != dst.size()) {
    throw FormatError("checkpoint: blob '" + name + "' has wrong size");
  }
  std::copy(it->second.data.begin(), it->second.data.end(), dst.begin());
}

Blob make_blob(const std::vector<int>& shape, const std::vector<float>& data) {
  Blob b;
  b.dims.assign(shape.begin(), shape.end());
  b.data = data;
  return b;
}

void restore_optimizer(const CheckpointData& ckpt, const std::string& prefix,
                       nn::AdamW<float>& opt) {
  for (size_t i = 0; i < opt.params().size(); ++i) {
    const std::string& pname = opt.params()[i]->name;
    copy_blob_into(ckpt, prefix + ".m." + pname, opt.moment1(i));
    copy_blob_into(ckpt, prefix + ".v." + pname, opt.moment2(i));
  }
  auto it = ckpt.blobs.find(prefix + ".step");
  if (it == ckpt.blobs.end() || it->second.data.size() != 1) {
    throw FormatError("checkpoint: missing optimizer step for " + prefix);
  }
  opt.set_step_count(static_cast<uint64_t>(it->second.data[0]));
}

void dump_optimizer(CheckpointData& ckpt, const std::string& prefix, nn::AdamW<float>& opt) {
  for (size_t i = 0; i < opt.params().size(); ++i) {
    const std::string& pname = opt.params()[i]->name;
    ckpt.blobs[prefix + ".m." + pname] =
        make_blob(opt.params()[i]->shape, opt.moment1(i));
    ckpt.blobs[prefix + ".v." + pname] =
        make_blob(opt.params()[i]->shape, opt.moment2(i));
  }
  Blob step;
  step.dims = {1};
  step.data = {static_cast<float>(opt.step_count())};
  ckpt.blobs[prefix + ".step"] = std::move(step);
}

}  // namespace

model::ModelConfig make_model_config(const FullConfig& cfg, int inventory_size) {
  model::ModelConfig mc;
  mc.latent_dim = cfg.model.latent_dim;
  mc.hidden_channels = cfg.model.hidden_channels;
  mc.speaker_emb_dim = cfg.model.speaker_emb_dim;
  mc.n_speakers = cfg.model.n_speakers;
  mc.inventory_size = inventory_size;
  mc.ssl_layers = cfg.provider.layers;
  mc.ssl_dim = cfg.provider.dim;
  mc.n_mels = cfg.audio.n_mels;
  mc.hop = cfg.audio.hop;
  mc.sample_rate_hz = cfg.audio.sample_rate_hz;
  mc.init_seed = cfg.train.seed;
  return mc;
}

Trainer::Trainer(FullConfig cfg, const std::string& manifest_path) : cfg_(std::move(cfg)) {
  cfg_.audio.validate();
  if (cfg_.phoneme_symbols.empty()) {
    throw std::runtime_error("trainer: phoneme set is unresolved (score.phoneme_set empty)");
  }
  inventory_ = score::PhonemeInventory::from_symbols(cfg_.phoneme_symbols);

  const auto manifest = data::load_manifest(manifest_path);
  if (cfg_.model.n_speakers == 0) {
    int mx = 0;
    for (const auto& u : manifest) mx = std::max(mx, u.speaker_id);
    cfg_.model.n_speakers = mx + 1;
  }

  const auto provider = ssl::create_provider(cfg_.provider);
  if (provider->num_layers() != cfg_.provider.layers ||
      provider->feature_dim() != cfg_.provider.dim) {
    throw std::runtime_error("trainer: provider dims do not match the config");
  }

  gen_ = std::make_unique<model::Generator<float>>(make_model_config(cfg_, inventory_.size()));
  gan::DiscConfig dc;
  dc.base_channels = cfg_.gan.disc_base_channels;
  disc_ = std::make_unique<gan::Discriminator<float>>(dc);

  const int min_seg_frames =
      (disc_->config().min_input_samples() + cfg_.audio.hop - 1) / cfg_.audio.hop;
  const double frame_rate = cfg_.audio.frame_rate_hz();

  for (const auto& u : manifest) {
    data::LoadedUtterance lu = data::load_utterance(u, inventory_, cfg_.audio.sample_rate_hz);
    if (lu.meta.speaker_id >= cfg_.model.n_speakers) {
      throw std::runtime_error("trainer: speaker id out of range in " + u.utt_id);
    }
    TrainItem item;
    item.utt_id = u.utt_id;
    item.speaker = u.speaker_id;

    const MatD mel = dsp::melspectrogram(lu.wav, cfg_.audio).values;
    dsp::Waveform wav16 = lu.wav.sample_rate_hz == provider->required_input_rate_hz()
                              ? lu.wav
                              : dsp::resample(lu.wav, provider->required_input_rate_hz());
    ssl::SSLFeatureStack stack = provider->extract(wav16, u.utt_id);
    score::FrameScore fs = score::length_regulate(lu.score, frame_rate);

    const int f_mel = mel.rows;
    const int f_samp = static_cast<int>(lu.wav.samples.size()) / cfg_.audio.hop;
    int frames = std::min({f_mel, fs.n_frames, f_samp});

    // Bring the feature stack to the mel frame grid, then to the common count.
    std::vector<MatD> aligned(stack.layers.size());
    for (size_t l = 0; l < stack.layers.size(); ++l) {
      aligned[l] = ssl::align_frames(stack.layers[l], f_mel);
    }
    frames = std::min(frames, aligned.empty() ? 0 : aligned[0].rows);
    if (frames < std::max(min_seg_frames, 1)) {
      throw std::runtime_error("trainer: utterance too short to train on: " + u.utt_id);
    }
    item.frames = frames;

    item.wav.resize(static_cast<size_t>(frames) * cfg_.audio.hop);
    for (size_t i = 0; i < item.wav.size(); ++i) {
      item.wav[i] = static_cast<float>(lu.wav.samples[i]);
    }
    item.mel.resize(static_cast<size_t>(cfg_.audio.n_mels) * frames);
    for (int c = 0; c < cfg_.audio.n_mels; ++c) {
      for (int t = 0; t < frames; ++t) {
        item.mel[static_cast<size_t>(c) * frames + t] = static_cast<float>(mel.at(t, c));
      }
    }
    const int layers = static_cast<int>(aligned.size());
    const int dim = aligned[0].cols;
    item.ssl.resize(static_cast<size_t>(layers) * dim * frames);
    for (int l = 0; l < layers; ++l) {
      for (int d = 0; d < dim; ++d) {
        for (int t = 0; t < frames; ++t) {
          item.ssl[(static_cast<size_t>(l) * dim + d) * frames + t] =
              static_cast<float>(aligned[l].at(t, d));
        }
      }
    }
    fs.phoneme_per_frame.resize(frames);
    fs.pitch_per_frame.resize(frames);
    fs.n_frames = frames;
    item.fscore = std::move(fs);
    items_.push_back(std::move(item));
  }

  nn::AdamWConfig<float> oc;
  oc.lr = static_cast<float>(cfg_.train.lr);
  oc.beta1 = static_cast<float>(cfg_.train.beta1);
  oc.beta2 = static_cast<float>(cfg_.train.beta2);
  oc.eps = static_cast<float>(cfg_.train.eps);
  oc.weight_decay = static_cast<float>(cfg_.train.weight_decay);
  opt_g_ = std::make_unique<nn::AdamW<float>>(gen_->params().all(), oc);
  opt_d_ = std::make_unique<nn::AdamW<float>>(disc_->params().all(), oc);
  lr_ = cfg_.train.lr;
}

void Trainer::set_lr(double lr) {
  lr_ = lr;
  opt_g_->set_lr(static_cast<float>(lr));
  opt_d_->set_lr(static_cast<float>(lr));
}

double Trainer::learning_rate() const { return lr_; }

Trainer::Segment Trainer::draw_segment(const TrainItem& item) const {
  Rng rng(mix_seed(mix_seed(cfg_.train.seed, global_step_), fnv1a(item.utt_id)));
  Segment seg;
  seg.len = std::min(cfg_.train.segment_frames, item.frames);
  seg.start = item.frames == seg.len ? 0 : rng.uniform_int(0, item.frames - seg.len);
  seg.noise.resize(static_cast<size_t>(cfg_.model.latent_dim) * seg.len);
  for (auto& v : seg.noise) v = static_cast<float>(rng.normal());
  return seg;
}

score::FrameScore Trainer::slice_score(const TrainItem& item, int start, int len) const {
  score::FrameScore fs;
  fs.n_frames = len;
  fs.phoneme_per_frame.assign(item.fscore.phoneme_per_frame.begin() + start,
                              item.fscore.phoneme_per_frame.begin() + start + len);
  fs.pitch_per_frame.assign(item.fscore.pitch_per_frame.begin() + start,
                            item.fscore.pitch_per_frame.begin() + start + len);
  return fs;
}

void Trainer::check_finite(double v, const char* role) const {
  if (!std::isfinite(v)) {
    throw std::runtime_error("training aborted: non-finite " + std::string(role) +
                             " loss at step " + std::to_string(global_step_ + 1));
  }
}

LossBreakdown Trainer::step(const std::vector<int>& item_indices) {
  if (item_indices.empty()) throw std::invalid_argument("step: empty batch");
  for (int idx : item_indices) {
    if (idx < 0 || idx >= static_cast<int>(items_.size())) {
      throw std::invalid_argument("step: item index out of range");
    }
  }
  const float inv_b = 1.0f / static_cast<float>(item_indices.size());
  const int n_mels = cfg_.audio.n_mels;
  const int layers = cfg_.provider.layers;
  const int dim = cfg_.provider.dim;
  const int hop = cfg_.audio.hop;
  LossBreakdown lb;

  // ---- discriminator update ------------------------------------------------
  if (cfg_.gan.adversarial) {
    disc_->params().zero_grad();
    for (int idx : item_indices) {
      const TrainItem& item = items_[idx];
      const Segment seg = draw_segment(item);
      Tape tape;

      tape.param_grads_enabled(false);
      Var stack = tape.constant({layers, dim, seg.len},
                                slice_channels(item.ssl, layers * dim, item.frames, seg.start,
                                               seg.len));
      Var mel = tape.constant({n_mels, seg.len},
                              slice_channels(item.mel, n_mels, item.frames, seg.start, seg.len));
      auto post = gen_->build_posterior(tape, stack, mel, item.speaker);
      Var z = gen_->reparameterize_graph(tape, post, seg.noise);
      const score::FrameScore fs = slice_score(item, seg.start, seg.len);
      Var wav_hat = gen_->build_decoder(tape, z, item.speaker, fs);

      std::vector<float> target(item.wav.begin() + static_cast<size_t>(seg.start) * hop,
                                item.wav.begin() + static_cast<size_t>(seg.start + seg.len) * hop);
      Var wav_ref = tape.constant({seg.len * hop}, std::move(target));

      tape.param_grads_enabled(true);
      auto real = disc_->forward(tape, wav_ref);
      auto fake = disc_->forward(tape, wav_hat);
      Var d_loss = gan::lsgan_d_loss(tape, real, fake);
      const double dv = static_cast<double>(d_loss->val[0]);
      check_finite(dv, "adv_d");
      tape.backward(tape.mul_scalar(d_loss, inv_b));
      lb.adv_d += dv;
    }
    opt_d_->step();
  }

  // ---- generator update ------------------------------------------------------
  gen_->params().zero_grad();
  for (int idx : item_indices) {
    const TrainItem& item = items_[idx];
    const Segment seg = draw_segment(item);  // same step index: identical draw
    Tape tape;

    Var stack = tape.constant({layers, dim, seg.len},
                              slice_channels(item.ssl, layers * dim, item.frames, seg.start,
                                             seg.len));
    Var mel = tape.constant({n_mels, seg.len},
                            slice_channels(item.mel, n_mels, item.frames, seg.start, seg.len));
    const score::FrameScore fs = slice_score(item, seg.start, seg.len);

    auto prior = gen_->build_prior(tape, fs, item.speaker);
    auto post = gen_->build_posterior(tape, stack, mel, item.speaker);
    Var z = gen_->reparameterize_graph(tape, post, seg.noise);
    Var wav_hat = gen_->build_decoder(tape, z, item.speaker, fs);

    std::vector<float> target(item.wav.begin() + static_cast<size_t>(seg.start) * hop,
                              item.wav.begin() + static_cast<size_t>(seg.start + seg.len) * hop);
    Var wav_ref = tape.constant({seg.len * hop}, std::move(target));

    Var kl = gan::kl_loss(tape, post, prior);
    Var mel_l1 = gan::mel_l1_loss(tape, wav_hat, wav_ref, cfg_.audio);
    const double kl_v = kl->val[0];
    const double mel_v = mel_l1->val[0];
    check_finite(kl_v, "kl");
    check_finite(mel_v, "mel");

    Var total = tape.add(tape.mul_scalar(kl, static_cast<float>(cfg_.gan.lambda_kl)),
                         tape.mul_scalar(mel_l1, static_cast<float>(cfg_.gan.lambda_mel)));
    double adv_v = 0.0, fm_v = 0.0;
    if (cfg_.gan.adversarial) {
      tape.param_grads_enabled(false);  // freeze D; gradients still reach G
      auto real = disc_->forward(tape, wav_ref);
      auto fake = disc_->forward(tape, wav_hat);
      Var adv_g = gan::lsgan_g_loss(tape, fake);
      Var fm = gan::feature_matching_loss(tape, real, fake);
      adv_v = adv_g->val[0];
      fm_v = fm->val[0];
      check_finite(adv_v, "adv_g");
      check_finite(fm_v, "fm");
      total = tape.add(total, adv_g);
      total = tape.add(total, tape.mul_scalar(fm, static_cast<float>(cfg_.gan.lambda_fm)));
    }
    const double total_v = total->val[0];
    check_finite(total_v, "total_g");
    tape.backward(tape.mul_scalar(total, inv_b));

    lb.kl += kl_v;
    lb.mel_l1 += mel_v;
    lb.adv_g += adv_v;
    lb.feat_match += fm_v;
    lb.total_g += total_v;
  }
  opt_g_->step();

  const double n = static_cast<double>(item_indices.size());
  lb.kl /= n;
  lb.mel_l1 /= n;
  lb.adv_g /= n;
  lb.adv_d /= n;
  lb.feat_match /= n;
  lb.total_g /= n;
  lb.total_d = lb.adv_d;
  ++global_step_;
  return lb;
}

CheckpointData Trainer::to_checkpoint() const {
  CheckpointData ckpt;
  ckpt.iteration = global_step_;
  ckpt.epoch = epoch_;
  ckpt.config_text = serialize_config(cfg_);
  for (auto* p : gen_->params().all()) ckpt.blobs[p->name] = make_blob(p->shape, p->val);
  for (auto* p : disc_->params().all()) ckpt.blobs[p->name] = make_blob(p->shape, p->val);
  dump_optimizer(ckpt, "opt_g", *opt_g_);
  dump_optimizer(ckpt, "opt_d", *opt_d_);
  return ckpt;
}

void Trainer::restore(const CheckpointData& ckpt) {
  for (auto* p : gen_->params().all()) copy_blob_into(ckpt, p->name, p->val);
  for (auto* p : disc_->params().all()) copy_blob_into(ckpt, p->name, p->val);
  restore_optimizer(ckpt, "opt_g", *opt_g_);
  restore_optimizer(ckpt, "opt_d", *opt_d_);
  global_step_ = ckpt.iteration;
  epoch_ = ckpt.epoch;
}

std::string format_loss_line(uint64_t step, const LossBreakdown& lb, double lr) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "step=%llu kl=%.6g mel=%.6g adv_g=%.6g adv_d=%.6g fm=%.6g lr=%.6g",
                static_cast<unsigned long long>(step), lb.kl, lb.mel_l1, lb.adv_g, lb.adv_d,
                lb.feat_match, lr);
  return buf;
}

std::string run_training(Trainer& trainer, const TrainRunOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.out_dir.empty()) throw std::invalid_argument("run_training: out_dir required");
  fs::create_directories(opts.out_dir);
  const FullConfig& cfg = trainer.config();
  const int n_items = static_cast<int>(trainer.items().size());

  for (uint64_t e = trainer.epoch(); e < static_cast<uint64_t>(cfg.train.epochs); ++e) {
    const double lr = cfg.train.lr * std::pow(cfg.train.lr_gamma, static_cast<double>(e));
    trainer.set_lr(lr);
    const auto batches =
        data::shuffled_batches(n_items, cfg.train.batch_size, cfg.train.seed, e);
    for (int it = 0; it < cfg.train.iterations_per_epoch; ++it) {
      const LossBreakdown lb = trainer.step(batches[it % batches.size()]);
      if (opts.log) {
        *opts.log << format_loss_line(trainer.global_step(), lb, lr) << "\n";
      }
    }
    trainer.set_epoch(e + 1);
    save_checkpoint((fs::path(opts.out_dir) / ("ckpt_epoch" + std::to_string(e) + ".v2p")).string(),
                    trainer.to_checkpoint());
  }
  const std::string final_path = (fs::path(opts.out_dir) / "final.v2p").string();
  save_checkpoint(final_path, trainer.to_checkpoint());
  return final_path;
}

LoadedModel load_model(const CheckpointData& ckpt) {
  LoadedModel lm;
  lm.cfg = parse_config(ckpt.config_text);
  if (lm.cfg.phoneme_symbols.empty()) {
    throw FormatError("checkpoint: config has no phoneme set");
  }
  lm.inventory = score::PhonemeInventory::from_symbols(lm.cfg.phoneme_symbols);
  lm.gen = std::make_unique<model::Generator<float>>(
      make_model_config(lm.cfg, lm.inventory.size()));
  for (auto* p : lm.gen->params().all()) copy_blob_into(ckpt, p->name, p->val);
  return lm;
}

}  // namespace cantus::train
