// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "core/enhancer.hpp"
#include "core/objectives.hpp"
#include "core/rng.hpp"
#include "grad_check.hpp"

using namespace sekws;

namespace {

EnhancerConfig tiny_config(bool causal) {
  EnhancerConfig cfg;
  cfg.kernel_len = 32;
  cfg.stride = 16;
  cfg.encoder_channels = 8;
  cfg.bottleneck_channels = 6;
  cfg.conv_channels = 8;
  cfg.n_blocks_per_repeat = 2;
  cfg.n_repeats = 1;
  cfg.causal = causal;
  return cfg;
}

Waveform random_wave(uint64_t seed, size_t n, double amp = 0.3) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = amp * rng.normal();
  return w;
}

}  // namespace

TEST_SUITE_BEGIN("enhancer");

TEST_CASE("config validation") {
  EnhancerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  EnhancerConfig bad = cfg;
  bad.stride = 150;  // must divide kernel_len
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.n_repeats = -1;
  CHECK_THROWS_AS(bad.validate(), Error);

  KvConfig kv;
  cfg.to_config(kv);
  EnhancerConfig back = EnhancerConfig::from_config(kv);
  CHECK(back.kernel_len == cfg.kernel_len);
  CHECK(back.stride == cfg.stride);
  CHECK(back.encoder_channels == cfg.encoder_channels);
  CHECK(back.causal == cfg.causal);
}

TEST_CASE("encoder frame count covers the full second") {
  Enhancer enh = Enhancer::init(EnhancerConfig{}, 1);
  Tensor repr = enh.encode(random_wave(1, 16000));
  CHECK(repr.dim(0) == 99);  // ceil((16000-320)/160)+1 with tail padding
  CHECK(repr.dim(1) == 64);
}

TEST_CASE("enhanced output preserves length for many lengths") {
  Enhancer enh = Enhancer::init(tiny_config(true), 2);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 64 + rng.uniform_int(4000);
    Waveform x = random_wave(1000 + trial, n);
    Waveform y = enh.enhance(x);
    CHECK(y.size() == n);
    CHECK(y.sample_rate_hz == x.sample_rate_hz);
  }
  // One full-length pass at the production shape.
  Enhancer full = Enhancer::init(EnhancerConfig{}, 4);
  Waveform x = random_wave(5, 16000);
  CHECK(full.enhance(x).size() == 16000);
}

TEST_CASE("zero input maps to zero output") {
  for (bool causal : {true, false}) {
    Enhancer enh = Enhancer::init(tiny_config(causal), 6);
    Waveform zero;
    zero.samples.assign(1600, 0.0);
    Waveform y = enh.enhance(zero);
    for (double s : y.samples) CHECK(s == 0.0);
  }
}

TEST_CASE("mask values live in the unit interval") {
  Enhancer enh = Enhancer::init(tiny_config(true), 7);
  Tensor repr = enh.encode(random_wave(8, 3200));
  Tensor m = enh.mask(repr);
  REQUIRE(m.size() == repr.size());
  for (int64_t i = 0; i < m.size(); ++i) {
    CHECK(m[i] > 0.0);
    CHECK(m[i] < 1.0);
  }
}

TEST_CASE("causal variant ignores future samples") {
  // Perturb the tail; everything the receptive field says is unaffected must
  // match bit for bit. 20 random probes.
  EnhancerConfig cfg = tiny_config(true);
  Enhancer enh = Enhancer::init(cfg, 9);
  Rng rng(10);
  for (int probe = 0; probe < 20; ++probe) {
    size_t n = 1600;
    Waveform x = random_wave(2000 + probe, n);
    size_t cut = 800 + rng.uniform_int(400);
    Waveform x2 = x;
    for (size_t i = cut; i < n; ++i) x2.samples[i] += rng.uniform(0.5, 1.5);
    Waveform y1 = enh.enhance(x);
    Waveform y2 = enh.enhance(x2);
    // Outputs before the first frame that can reach `cut` must be identical.
    // Frame f covers samples [f*stride, f*stride+kernel). Output sample i is
    // influenced by frames overlapping it, so the last safe sample is the end
    // of the last frame that ends before `cut`.
    int stride = cfg.stride;
    int kernel = cfg.kernel_len;
    int last_clean_frame = (int(cut) - kernel) / stride;  // frame fully before cut
    int safe_end = last_clean_frame * stride;             // conservative bound
    REQUIRE(safe_end > 0);
    for (int i = 0; i < safe_end; ++i) {
      CHECK(std::abs(y1.samples[i] - y2.samples[i]) <= 1e-12);
    }
  }
}

TEST_CASE("non-causal variant does look ahead") {
  Enhancer enh = Enhancer::init(tiny_config(false), 11);
  Waveform x = random_wave(12, 1600);
  Waveform x2 = x;
  for (size_t i = 1200; i < 1600; ++i) x2.samples[i] += 1.0;
  Waveform y1 = enh.enhance(x);
  Waveform y2 = enh.enhance(x2);
  bool early_changed = false;
  for (int i = 0; i < 400; ++i) {
    early_changed |= (y1.samples[i] != y2.samples[i]);
  }
  CHECK(early_changed);
}

TEST_CASE("receptive field formula") {
  EnhancerConfig cfg;
  cfg.kernel_len = 320;
  cfg.stride = 160;
  cfg.n_repeats = 1;
  cfg.n_blocks_per_repeat = 1;
  // One block at dilation 1: kernel + (k-1)*(2^1 - 1)*stride = 320 + 2*160.
  CHECK(receptive_field_samples(cfg) == 640);
  cfg.n_repeats = 0;  // hypothetical pure encoder: just the window
  CHECK(receptive_field_samples(cfg) == 320);
  // RF grows monotonically with depth.
  int prev = 0;
  for (int b = 1; b <= 4; ++b) {
    cfg.n_repeats = 2;
    cfg.n_blocks_per_repeat = b;
    int rf = receptive_field_samples(cfg);
    CHECK(rf > prev);
    prev = rf;
  }
}

TEST_CASE("deterministic init and forward") {
  Enhancer a = Enhancer::init(tiny_config(true), 42);
  Enhancer b = Enhancer::init(tiny_config(true), 42);
  Waveform x = random_wave(13, 1600);
  Waveform ya = a.enhance(x);
  Waveform yb = b.enhance(x);
  CHECK(ya.samples == yb.samples);
  Enhancer c = Enhancer::init(tiny_config(true), 43);
  CHECK(c.enhance(x).samples != ya.samples);
}

TEST_CASE("tape and forward-only enhance agree") {
  Enhancer enh = Enhancer::init(tiny_config(true), 14);
  Waveform x = random_wave(15, 1600);
  Waveform direct = enh.enhance(x);
  Graph g;
  Tensor taped = enh.enhance_node(g, g.leaf(x))->val;
  REQUIRE(size_t(taped.size()) == direct.size());
  for (int64_t i = 0; i < taped.size(); ++i) {
    CHECK(taped[i] == doctest::Approx(direct.samples[i]).epsilon(1e-12));
  }
}

TEST_CASE("fd: gradient through the full enhancer and sdr-style loss") {
  EnhancerConfig cfg = tiny_config(true);
  cfg.n_blocks_per_repeat = 1;
  Enhancer enh = Enhancer::init(cfg, 16);
  Waveform noisy = random_wave(17, 320);
  Waveform clean = random_wave(18, 320);

  testutil::GradCheck chk;
  chk.rel_tol = 5e-3;
  Rng pick(19);
  auto coords = testutil::sample_coords(enh.params(), 60, pick);
  auto out = chk.run(enh.params(), coords, [&](Graph& g) {
    Node* yhat = enh.enhance_node(g, g.leaf(noisy));
    Node* err = g.sub(g.leaf(clean), yhat);
    // log of the squared error, the core of the sdr objective
    return g.ln(g.add_const(g.sum_squares(err), 1e-9));
  });
  CHECK_MESSAGE(out.failed == 0, "enhancer grad: ", out.failed, " of ", out.checked,
                " failed, worst rel ", out.worst_rel, " at ", out.worst_at);
}

TEST_SUITE_END();
