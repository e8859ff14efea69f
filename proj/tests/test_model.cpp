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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "cantus/model/generator.hpp"
#include "cantus/score/score.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cantus;

// A small but structurally complete model: every block present, all dims at
// or near their minimums so graph construction stays fast.
static model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.latent_dim = 4;
  cfg.hidden_channels = 16;
  cfg.speaker_emb_dim = 4;
  cfg.n_speakers = 2;
  cfg.inventory_size = 7;
  cfg.ssl_layers = 2;
  cfg.ssl_dim = 3;
  cfg.n_mels = 8;
  cfg.init_seed = 5;
  return cfg;
}

static score::FrameScore make_frame_score(int frames) {
  score::FrameScore fs;
  fs.n_frames = frames;
  fs.phoneme_per_frame.resize(frames);
  fs.pitch_per_frame.resize(frames);
  for (int t = 0; t < frames; ++t) {
    fs.phoneme_per_frame[t] = 1 + t % 5;
    fs.pitch_per_frame[t] = t % 7 == 6 ? score::kRestPitch : 57 + t % 12;
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Config validation
// ---------------------------------------------------------------------------

TEST_CASE("model config rejects bad dimensions") {
  auto cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.hidden_channels = 20;  // not divisible by 16
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.hop = 256;  // the upsampling chain is tied to 480
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.inventory_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.n_speakers = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(model::Generator<double>{bad}, std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Encoder shapes
// ---------------------------------------------------------------------------

TEST_CASE("prior and posterior emit frames x latent Gaussians") {
  model::Generator<double> gen(tiny_config());
  const auto fs = make_frame_score(50);
  const auto prior = gen.encode_prior(fs, 0);
  CHECK(prior.mean.rows == 50);
  CHECK(prior.mean.cols == 4);
  CHECK(prior.log_var.rows == 50);
  CHECK(prior.log_var.cols == 4);

  MatD e(50, 3 + 8, 0.25);
  const auto post = gen.encode_posterior(e, 0);
  CHECK(post.mean.rows == 50);
  CHECK(post.mean.cols == 4);

  // Frame counts are preserved, not rounded: 49 in, 49 out.
  MatD e49(49, 11, 0.25);
  CHECK(gen.encode_posterior(e49, 1).mean.rows == 49);
  const auto fs49 = make_frame_score(49);
  CHECK(gen.encode_prior(fs49, 1).mean.rows == 49);

  // Fused width must match the model.
  MatD ebad(50, 12, 0.0);
  CHECK_THROWS_AS(gen.encode_posterior(ebad, 0), std::invalid_argument);
}

TEST_CASE("log variances respect the clamp") {
  model::Generator<double> gen(tiny_config());
  const auto fs = make_frame_score(20);
  const auto prior = gen.encode_prior(fs, 0);
  for (double lv : prior.log_var.v) {
    CHECK(lv <= model::kLogVarClampAbs);
    CHECK(lv >= -model::kLogVarClampAbs);
    CHECK(std::isfinite(lv));
  }
}

TEST_CASE("zeroed posterior output weights reduce the Gaussian to its bias") {
  model::Generator<double> gen(tiny_config());
  auto* w = gen.params().find("gen.post.out.w");
  auto* b = gen.params().find("gen.post.out.b");
  REQUIRE(w != nullptr);
  REQUIRE(b != nullptr);
  std::fill(w->val.begin(), w->val.end(), 0.0);
  for (size_t i = 0; i < b->val.size(); ++i) b->val[i] = 0.01 * static_cast<double>(i);
  MatD e(9, 11, 0.5);
  const auto g = gen.encode_posterior(e, 0);
  for (int t = 0; t < 9; ++t) {
    for (int c = 0; c < 4; ++c) {
      CHECK(g.mean.at(t, c) == doctest::Approx(b->val[c]).epsilon(1e-12));
      CHECK(g.log_var.at(t, c) == doctest::Approx(b->val[4 + c]).epsilon(1e-12));
    }
  }
}

// ---------------------------------------------------------------------------
// Reparameterization
// ---------------------------------------------------------------------------

TEST_CASE("graph reparameterization is mean + exp(logvar/2) * noise") {
  model::Generator<double> gen(tiny_config());
  nn::Tape<double> tape;
  const int latent = 4, frames = 3;
  std::vector<double> meanv(latent * frames), noise(latent * frames);
  for (size_t i = 0; i < meanv.size(); ++i) {
    meanv[i] = 0.1 * static_cast<double>(i) - 0.4;
    noise[i] = std::sin(1.7 * static_cast<double>(i));
  }
  model::Generator<double>::EncodedGaussian g;
  g.mean = tape.constant({latent, frames}, meanv);

  SUBCASE("zero logvar, zero noise: z equals the mean") {
    g.log_var = tape.constant({latent, frames}, std::vector<double>(meanv.size(), 0.0));
    auto z = gen.reparameterize_graph(tape, g, std::vector<double>(meanv.size(), 0.0));
    for (size_t i = 0; i < meanv.size(); ++i) CHECK(z->val[i] == doctest::Approx(meanv[i]));
  }
  SUBCASE("zero logvar: z - mean equals the noise") {
    g.log_var = tape.constant({latent, frames}, std::vector<double>(meanv.size(), 0.0));
    auto z = gen.reparameterize_graph(tape, g, noise);
    for (size_t i = 0; i < meanv.size(); ++i) {
      CHECK(z->val[i] - meanv[i] == doctest::Approx(noise[i]).epsilon(1e-12));
    }
  }
  SUBCASE("logvar = 2 ln 2: z - mean equals twice the noise") {
    g.log_var =
        tape.constant({latent, frames}, std::vector<double>(meanv.size(), 2.0 * std::log(2.0)));
    auto z = gen.reparameterize_graph(tape, g, noise);
    for (size_t i = 0; i < meanv.size(); ++i) {
      CHECK(z->val[i] - meanv[i] == doctest::Approx(2.0 * noise[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("host reparameterization is seed-deterministic and variance-scaled") {
  model::GaussianParams<double> g;
  g.mean = MatD(5, 4, 0.3);
  g.log_var = MatD(5, 4, -80.0);  // exp(-40) ~ 0: z collapses to the mean
  const auto z0 = model::Generator<double>::reparameterize(g, 11);
  for (double v : z0.v) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));

  g.log_var = MatD(5, 4, 0.0);
  const auto a = model::Generator<double>::reparameterize(g, 11);
  const auto b = model::Generator<double>::reparameterize(g, 11);
  const auto c = model::Generator<double>::reparameterize(g, 12);
  CHECK(a.v == b.v);
  CHECK(a.v != c.v);
}

TEST_CASE("sampled noise is standard-normal shaped and keyed by seed") {
  model::Generator<double> gen(tiny_config());
  const auto n1 = gen.sample_noise(500, 3);
  const auto n2 = gen.sample_noise(500, 3);
  const auto n3 = gen.sample_noise(500, 4);
  CHECK(n1 == n2);
  CHECK(n1 != n3);
  CHECK(n1.size() == 4u * 500u);
  double mean = 0.0, var = 0.0;
  for (double v : n1) mean += v;
  mean /= static_cast<double>(n1.size());
  for (double v : n1) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n1.size());
  CHECK(std::abs(mean) < 0.1);
  CHECK(var == doctest::Approx(1.0).epsilon(0.1));
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

TEST_CASE("decoder turns frames into exactly hop samples per frame") {
  model::Generator<double> gen(tiny_config());
  const auto fs = make_frame_score(50);
  Mat<double> z(50, 4, 0.1);
  const auto wav = gen.decode_waveform(z, 0, fs);
  CHECK(wav.sample_rate_hz == 24000);
  CHECK(wav.samples.size() == 50u * 480u);
  for (double s : wav.samples) {
    CHECK(std::abs(s) <= 1.0);  // tanh output stage
    CHECK(std::isfinite(s));
  }
  // Short sequences too.
  Mat<double> z3(3, 4, 0.1);
  CHECK(gen.decode_waveform(z3, 0, fs).samples.size() == 3u * 480u);
}

TEST_CASE("decoder rejects mismatched latent width and short frame scores") {
  model::Generator<double> gen(tiny_config());
  const auto fs = make_frame_score(10);
  Mat<double> zbad(10, 5, 0.1);
  CHECK_THROWS_AS(gen.decode_waveform(zbad, 0, fs), std::invalid_argument);
  Mat<double> zlong(12, 4, 0.1);  // more latent frames than score frames
  CHECK_THROWS(gen.decode_waveform(zlong, 0, fs));
}

TEST_CASE("speakers must exist") {
  model::Generator<double> gen(tiny_config());
  const auto fs = make_frame_score(5);
  CHECK_THROWS_AS(gen.encode_prior(fs, 2), std::invalid_argument);
  CHECK_THROWS_AS(gen.encode_prior(fs, -1), std::invalid_argument);
  Mat<double> z(5, 4, 0.1);
  CHECK_THROWS_AS(gen.decode_waveform(z, 7, fs), std::invalid_argument);
}

TEST_CASE("sine excitation is voiced where the score is pitched") {
  model::Generator<double> gen(tiny_config());
  score::FrameScore fs;
  fs.n_frames = 4;
  fs.phoneme_per_frame = {1, 1, 0, 0};
  fs.pitch_per_frame = {69, 69, score::kRestPitch, score::kRestPitch};
  const auto exc = gen.sample_noise(0, 0);  // silence unused; fetch excitation directly
  const auto e = gen.sine_excitation(fs, 4);
  REQUIRE(e.size() == 4u * 480u);
  // Column layout {hop, frames}: sample j of frame t sits at j * frames + t.
  double voiced_energy = 0.0, rest_energy = 0.0;
  for (int j = 0; j < 480; ++j) {
    voiced_energy += std::abs(e[static_cast<size_t>(j) * 4 + 0]);
    rest_energy += std::abs(e[static_cast<size_t>(j) * 4 + 2]);
  }
  CHECK(voiced_energy > 100.0);  // a 440 Hz sine, mean |sin| ~ 0.64
  CHECK(rest_energy == 0.0);
  (void)exc;
}

// ---------------------------------------------------------------------------
// End-to-end synthesis
// ---------------------------------------------------------------------------

TEST_CASE("synthesize is deterministic in (score, speaker, seed)") {
  model::Generator<double> gen(tiny_config());
  const auto inv = score::PhonemeInventory::from_symbols({"SP", "a", "e", "i", "o", "u", "ka"});
  const auto sc = score::parse_score("a\t60\t0.3\ne\t64\t0.3\nSP\t-1\t0.2\n", inv, "u", 0);

  const auto w1 = gen.synthesize(sc, 0, 42);
  const auto w2 = gen.synthesize(sc, 0, 42);
  CHECK(w1.samples == w2.samples);

  const auto w3 = gen.synthesize(sc, 0, 43);
  CHECK(w1.samples != w3.samples);

  const auto w4 = gen.synthesize(sc, 1, 42);
  CHECK(w1.samples != w4.samples);

  // Duration: 0.8 s -> 40 frames -> 19200 samples.
  CHECK(w1.samples.size() == 40u * 480u);
  CHECK(w1.sample_rate_hz == 24000);
  for (double s : w1.samples) CHECK(std::abs(s) <= 1.0);
}

// ---------------------------------------------------------------------------
// Gradient flow through the full training graph
// ---------------------------------------------------------------------------

TEST_CASE("one joint forward/backward reaches every parameter group") {
  using Gen = model::Generator<double>;
  Gen gen(tiny_config());
  const auto& cfg = gen.config();
  const int frames = 6;
  const auto fs = make_frame_score(frames);

  nn::Tape<double> tape;
  // Random-but-fixed fused inputs, channel-major.
  std::mt19937_64 rgen(77);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> stackv(static_cast<size_t>(cfg.ssl_layers) * cfg.ssl_dim * frames);
  for (auto& v : stackv) v = d(rgen);
  std::vector<double> melv(static_cast<size_t>(cfg.n_mels) * frames);
  for (auto& v : melv) v = d(rgen);
  auto ssl_stack = tape.constant({cfg.ssl_layers, cfg.ssl_dim, frames}, stackv);
  auto mel = tape.constant({cfg.n_mels, frames}, melv);

  auto prior = gen.build_prior(tape, fs, 1);
  auto post = gen.build_posterior(tape, ssl_stack, mel, 1);
  auto z = gen.reparameterize_graph(tape, post, gen.sample_noise(frames, 9));
  auto wav = gen.build_decoder(tape, z, 1, fs);

  // A loss touching all outputs: waveform energy plus both Gaussians.
  auto loss = tape.add(tape.mean_all(tape.square(wav)),
                       tape.add(tape.mean_all(tape.square(tape.sub(post.mean, prior.mean))),
                                tape.mean_all(tape.square(tape.sub(post.log_var, prior.log_var)))));
  gen.params().zero_grad();
  tape.backward(loss);
  CHECK(tape.all_values_finite());

  auto group_grad_l1 = [&](const std::string& prefix) {
    double acc = 0.0;
    for (auto* p : gen.params().all()) {
      if (p->name.rfind(prefix, 0) == 0) {
        for (double g : p->grad) acc += std::abs(g);
      }
    }
    return acc;
  };
  CHECK(group_grad_l1("gen.prior.") > 0.0);
  CHECK(group_grad_l1("gen.post.") > 0.0);
  CHECK(group_grad_l1("gen.dec.") > 0.0);
  CHECK(group_grad_l1("gen.spk.") > 0.0);
  CHECK(group_grad_l1("gen.ssl.logits") > 0.0);
}

TEST_CASE("parameter census: the five groups partition the store") {
  model::Generator<float> gen(tiny_config());
  size_t counted = 0;
  for (auto* p : gen.params().all()) {
    const bool known = p->name.rfind("gen.prior.", 0) == 0 || p->name.rfind("gen.post.", 0) == 0 ||
                       p->name.rfind("gen.dec.", 0) == 0 || p->name.rfind("gen.spk.", 0) == 0 ||
                       p->name == "gen.ssl.logits";
    CHECK(known);
    counted += p->numel();
  }
  CHECK(counted == gen.params().total_numel());
  // Logits start at zero: a uniform layer mixture.
  const auto w = gen.layer_weights();
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(0.5));
}
