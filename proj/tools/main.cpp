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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cantus/common/rng.hpp"
#include "cantus/data/corpus.hpp"
#include "cantus/dsp/resample.hpp"
#include "cantus/dsp/wav_io.hpp"
#include "cantus/metrics/metrics.hpp"
#include "cantus/score/score.hpp"
#include "cantus/ssl/fusion.hpp"
#include "cantus/ssl/provider.hpp"
#include "cantus/train/checkpoint.hpp"
#include "cantus/train/config.hpp"
#include "cantus/train/trainer.hpp"

namespace {

using namespace cantus;

std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// Normalizes an existing corpus: every waveform is resampled to the target
// rate and every score is validated against the inventory before anything is
// written. The new manifest path is printed on the output stream.
int cmd_prepare_from_manifest(const std::string& manifest_in, const std::string& phonemes_path,
                              const std::string& out_dir, int target_rate_hz) {
  if (phonemes_path.empty()) {
    throw std::runtime_error("prepare-data --manifest requires --phonemes for score validation");
  }
  const score::PhonemeInventory inv = score::PhonemeInventory::from_file(phonemes_path);
  const auto utts = data::load_manifest(manifest_in);
  std::filesystem::create_directories(out_dir);
  std::ofstream phon_out(out_dir + "/phonemes.txt");
  for (const auto& s : inv.symbols()) phon_out << s << "\n";
  if (!phon_out) throw std::runtime_error("cannot write phoneme inventory to " + out_dir);
  std::ostringstream manifest_body;
  for (const auto& u : utts) {
    dsp::Waveform w = dsp::read_wav(u.wav_path);
    if (w.sample_rate_hz != target_rate_hz) w = dsp::resample(w, target_rate_hz);
    const std::string score_text = read_text_file(u.score_path);
    score::parse_score(score_text, inv, u.utt_id, u.speaker_id);  // validates
    dsp::write_wav(out_dir + "/" + u.utt_id + ".wav", w);
    std::ofstream score_out(out_dir + "/" + u.utt_id + ".score");
    score_out << score_text;
    if (!score_out) throw std::runtime_error("cannot write score for " + u.utt_id);
    manifest_body << u.utt_id << "\t" << u.utt_id << ".wav\t" << u.utt_id << ".score\t"
                  << u.speaker_id << "\n";
  }
  const std::string manifest_path = out_dir + "/manifest.tsv";
  std::ofstream mo(manifest_path);
  mo << manifest_body.str();
  if (!mo) throw std::runtime_error("cannot write manifest to " + out_dir);
  std::cerr << "normalized " << utts.size() << " utterances to " << target_rate_hz << " Hz\n";
  std::cout << manifest_path << "\n";
  return 0;
}

int cmd_prepare_data(uint64_t seed, int n_utts, int n_speakers, const std::string& out_dir,
                     const std::string& feat_dir, uint64_t feat_seed, int feat_layers,
                     int feat_dim) {
  const std::string manifest = data::make_synthetic_corpus(seed, n_utts, n_speakers, out_dir);
  if (!feat_dir.empty()) {
    std::filesystem::create_directories(feat_dir);
    const ssl::SyntheticProvider provider(feat_seed, feat_layers, feat_dim);
    const auto utts = data::load_manifest(manifest);
    for (const auto& u : utts) {
      dsp::Waveform w = dsp::read_wav(u.wav_path);
      if (w.sample_rate_hz != provider.required_input_rate_hz()) {
        w = dsp::resample(w, provider.required_input_rate_hz());
      }
      ssl::write_feature_file(feat_dir + "/" + u.utt_id + ".sslfeat",
                              provider.extract(w, u.utt_id));
    }
    std::cerr << "wrote feature files for " << utts.size() << " utterances to " << feat_dir
              << "\n";
  }
  std::cout << manifest << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& manifest,
              const std::string& phonemes_path, const std::string& out_dir,
              const std::string& resume_path, const std::vector<std::string>& overrides,
              bool quiet) {
  train::FullConfig cfg;
  std::unique_ptr<train::CheckpointData> resume;
  if (!resume_path.empty()) {
    if (!config_path.empty() || !overrides.empty() || !phonemes_path.empty()) {
      throw std::runtime_error(
          "--resume uses the checkpoint's own config; --config/--set/--phonemes not allowed");
    }
    resume = std::make_unique<train::CheckpointData>(train::load_checkpoint(resume_path));
    cfg = train::parse_config(resume->config_text);
  } else {
    if (!config_path.empty()) cfg = train::load_config_file(config_path);
    for (const auto& kv : overrides) train::apply_override(cfg, kv);
    if (!phonemes_path.empty()) {
      cfg.phoneme_symbols =
          score::PhonemeInventory::from_file(phonemes_path).symbols();
    }
  }
  train::Trainer trainer(std::move(cfg), manifest);
  if (resume) trainer.restore(*resume);

  train::TrainRunOptions opts;
  opts.out_dir = out_dir;
  opts.log = quiet ? nullptr : &std::cout;
  const std::string final_path = train::run_training(trainer, opts);
  std::cerr << "training complete: " << final_path << "\n";
  return 0;
}

int cmd_synth(const std::string& ckpt_path, const std::string& score_path, int speaker,
              const std::string& out_path, uint64_t seed) {
  const train::CheckpointData ckpt = train::load_checkpoint(ckpt_path);
  const train::LoadedModel model = train::load_model(ckpt);
  const score::MusicScore sc =
      score::parse_score(read_text_file(score_path), model.inventory, "synth", speaker);
  const dsp::Waveform wav = model.gen->synthesize(sc, speaker, seed);
  dsp::write_wav(out_path, wav);
  std::cerr << "wrote " << wav.samples.size() << " samples at " << wav.sample_rate_hz
            << " Hz to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& manifest,
             const std::string& out_path, uint64_t seed, const std::string& emb_dir) {
  metrics::EvalOptions opts;
  opts.seed = seed;
  opts.emb_dump_dir = emb_dir;
  if (!emb_dir.empty()) std::filesystem::create_directories(emb_dir);
  const metrics::MetricsReport report = metrics::evaluate_corpus(manifest, ckpt_path, opts);
  const std::string text = metrics::format_report(report);
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot write report: " + out_path);
    os << text;
  }
  if (report.n_failed > 0) {
    std::cerr << report.n_failed << " utterance(s) failed evaluation\n";
    return 1;
  }
  return 0;
}

int cmd_inspect_weights(const std::string& ckpt_path) {
  const train::CheckpointData ckpt = train::load_checkpoint(ckpt_path);
  const auto it = ckpt.blobs.find("gen.ssl.logits");
  if (it == ckpt.blobs.end()) {
    throw std::runtime_error("checkpoint has no layer-weight logits");
  }
  std::vector<double> logits(it->second.data.begin(), it->second.data.end());
  const std::vector<double> alpha = ssl::softmax(logits);
  std::vector<int> order(alpha.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return alpha[a] != alpha[b] ? alpha[a] > alpha[b] : a < b;
  });
  char buf[64];
  for (int i : order) {
    std::snprintf(buf, sizeof buf, "layer=%d alpha=%.6f\n", i, alpha[i]);
    std::cout << buf;
  }
  return 0;
}

int cmd_resample(const std::string& in_path, const std::string& out_path, int rate) {
  const dsp::Waveform w = dsp::read_wav(in_path);
  const dsp::Waveform r = dsp::resample(w, rate);
  dsp::write_wav(out_path, r);
  std::cerr << "resampled " << w.sample_rate_hz << " Hz -> " << rate << " Hz ("
            << r.samples.size() << " samples)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cantus: score-driven singing voice synthesis"};
  app.require_subcommand(1);
  int rc = 0;

  // prepare-data
  auto* prep = app.add_subcommand(
      "prepare-data",
      "Normalize an existing corpus (--manifest) or generate a synthetic one");
  uint64_t prep_seed = 7;
  int prep_utts = 4, prep_speakers = 2, prep_rate = 24000;
  std::string prep_out, prep_feat_dir, prep_manifest, prep_phonemes;
  uint64_t prep_feat_seed = 17;
  int prep_feat_layers = 4, prep_feat_dim = 8;
  prep->add_option("--out", prep_out, "Output directory")->required();
  prep->add_option("--manifest", prep_manifest,
                   "Normalize this corpus (resample + validate) instead of generating one");
  prep->add_option("--phonemes", prep_phonemes,
                   "Phoneme inventory for score validation (with --manifest)");
  prep->add_option("--rate", prep_rate, "Target sample rate for normalization (Hz)");
  prep->add_option("--seed", prep_seed, "Corpus seed (synthetic mode)");
  prep->add_option("--utts", prep_utts, "Number of utterances (synthetic mode)");
  prep->add_option("--speakers", prep_speakers, "Number of speakers (synthetic mode)");
  prep->add_option("--dump-features", prep_feat_dir,
                   "Also write .sslfeat files for the external provider into this directory");
  prep->add_option("--feat-seed", prep_feat_seed, "Feature extractor seed");
  prep->add_option("--feat-layers", prep_feat_layers, "Feature layer count");
  prep->add_option("--feat-dim", prep_feat_dim, "Feature dimension");
  prep->callback([&] {
    if (!prep_manifest.empty()) {
      rc = cmd_prepare_from_manifest(prep_manifest, prep_phonemes, prep_out, prep_rate);
    } else {
      rc = cmd_prepare_data(prep_seed, prep_utts, prep_speakers, prep_out, prep_feat_dir,
                            prep_feat_seed, prep_feat_layers, prep_feat_dim);
    }
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_config, tr_manifest, tr_phonemes, tr_out, tr_resume;
  std::vector<std::string> tr_sets;
  bool tr_quiet = false;
  tr->add_option("--config", tr_config, "Config file (section.key=value lines)");
  tr->add_option("--manifest", tr_manifest, "Training manifest")->required();
  tr->add_option("--phonemes", tr_phonemes, "Phoneme inventory file (one symbol per line)");
  tr->add_option("--out", tr_out, "Checkpoint output directory")->required();
  tr->add_option("--resume", tr_resume, "Resume from this checkpoint");
  tr->add_option("--set", tr_sets, "Override a config key (repeatable), e.g. train.epochs=1");
  tr->add_flag("--quiet", tr_quiet, "Suppress per-step loss lines");
  tr->callback([&] {
    rc = cmd_train(tr_config, tr_manifest, tr_phonemes, tr_out, tr_resume, tr_sets, tr_quiet);
  });

  // synth
  auto* sy = app.add_subcommand("synth", "Synthesize audio from a score");
  std::string sy_ckpt, sy_score, sy_out;
  int sy_speaker = 0;
  uint64_t sy_seed = 0;
  sy->add_option("--checkpoint", sy_ckpt, "Model checkpoint")->required();
  sy->add_option("--score", sy_score, "Score file")->required();
  sy->add_option("--speaker", sy_speaker, "Speaker id");
  sy->add_option("--out", sy_out, "Output WAV path")->required();
  sy->add_option("--seed", sy_seed, "Sampling seed");
  sy->callback([&] { rc = cmd_synth(sy_ckpt, sy_score, sy_speaker, sy_out, sy_seed); });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint against reference audio");
  std::string ev_ckpt, ev_manifest, ev_out, ev_emb;
  uint64_t ev_seed = 99;
  ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
  ev->add_option("--manifest", ev_manifest, "Evaluation manifest")->required();
  ev->add_option("--out", ev_out, "Also write the report to this file");
  ev->add_option("--seed", ev_seed, "Synthesis seed");
  ev->add_option("--dump-embeddings", ev_emb, "Write per-utterance speaker embeddings here");
  ev->callback([&] { rc = cmd_eval(ev_ckpt, ev_manifest, ev_out, ev_seed, ev_emb); });

  // inspect-weights
  auto* iw = app.add_subcommand("inspect-weights", "Print the learned layer mixture");
  std::string iw_ckpt;
  iw->add_option("--checkpoint", iw_ckpt, "Model checkpoint")->required();
  iw->callback([&] { rc = cmd_inspect_weights(iw_ckpt); });

  // resample
  auto* rs = app.add_subcommand("resample", "Resample a WAV file");
  std::string rs_in, rs_out;
  int rs_rate = 16000;
  rs->add_option("--in", rs_in, "Input WAV")->required();
  rs->add_option("--out", rs_out, "Output WAV")->required();
  rs->add_option("--rate", rs_rate, "Target sample rate (Hz)")->required();
  rs->callback([&] { rc = cmd_resample(rs_in, rs_out, rs_rate); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
