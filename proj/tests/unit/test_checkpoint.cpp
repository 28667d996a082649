// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/enhancer.hpp"
#include "core/rng.hpp"
#include "core/spotter.hpp"

using namespace sekws;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "sekws_ckpt_test";
  fs::create_directories(d);
  return d;
}

ParamSet random_params(uint64_t seed) {
  ParamSet ps;
  Rng rng(seed);
  ps.add("layer.w", Tensor({3, 4}));
  ps.add("layer.b", Tensor({4}));
  ps.add("deep.block.gamma", Tensor({2, 2, 2}));
  for (size_t i = 0; i < ps.size(); ++i) {
    for (int64_t j = 0; j < ps[i].value.size(); ++j) ps[i].value[j] = rng.normal();
  }
  return ps;
}

}  // namespace

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("roundtrip is bit exact and preserves flags") {
  auto dir = work_dir();
  std::string path = (dir / "rt.ckpt").string();
  ParamSet ps = random_params(1);
  ps.at("layer.b").frozen = true;
  KvConfig cfg;
  cfg.set("model.kind", "toy");
  cfg.set("model.width", int64_t{4});
  save_checkpoint(path, ps, cfg, {{"note", "unit test"}, {"epoch", "3"}});

  ParamSet fresh = random_params(99);  // same shapes, different values
  fresh.at("layer.b").frozen = false;
  CheckpointMeta meta = load_checkpoint(path, fresh);
  CHECK(meta.config.get_str("model.kind") == "toy");
  CHECK(meta.config.get_int("model.width") == 4);
  CHECK(meta.metadata.at("note") == "unit test");
  CHECK(meta.metadata.at("epoch") == "3");
  CHECK(fresh.at("layer.b").frozen);
  CHECK_FALSE(fresh.at("layer.w").frozen);
  for (size_t i = 0; i < ps.size(); ++i) {
    const Tensor& a = ps[i].value;
    const Tensor& b = fresh.at(ps[i].name).value;
    REQUIRE(a.size() == b.size());
    for (int64_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
  }
  CHECK(params_hash(ps) == params_hash(fresh));
  fs::remove(path);
}

TEST_CASE("meta read does not need a matching param set") {
  auto dir = work_dir();
  std::string path = (dir / "meta.ckpt").string();
  ParamSet ps = random_params(2);
  KvConfig cfg;
  cfg.set("model.kind", "probe");
  save_checkpoint(path, ps, cfg, {});
  CheckpointMeta meta = read_checkpoint_meta(path);
  CHECK(meta.config.get_str("model.kind") == "probe");
  fs::remove(path);
}

TEST_CASE("mismatched shapes and names are rejected") {
  auto dir = work_dir();
  std::string path = (dir / "mm.ckpt").string();
  ParamSet ps = random_params(3);
  KvConfig cfg;
  save_checkpoint(path, ps, cfg, {});

  ParamSet wrong_shape;
  wrong_shape.add("layer.w", Tensor({4, 3}));  // transposed shape
  wrong_shape.add("layer.b", Tensor({4}));
  wrong_shape.add("deep.block.gamma", Tensor({2, 2, 2}));
  CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), Error);

  ParamSet wrong_name;
  wrong_name.add("layer.weights", Tensor({3, 4}));
  wrong_name.add("layer.b", Tensor({4}));
  wrong_name.add("deep.block.gamma", Tensor({2, 2, 2}));
  CHECK_THROWS_AS(load_checkpoint(path, wrong_name), Error);

  ParamSet missing;
  missing.add("layer.w", Tensor({3, 4}));
  CHECK_THROWS_AS(load_checkpoint(path, missing), Error);
  fs::remove(path);
}

TEST_CASE("corrupt files are rejected with io/baddata errors") {
  auto dir = work_dir();
  std::string path = (dir / "bad.ckpt").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "XXXXWRONGMAGIC and then some";
  }
  ParamSet ps = random_params(4);
  CHECK_THROWS_AS(load_checkpoint(path, ps), Error);
  CHECK_THROWS_AS(read_checkpoint_meta(path), Error);

  // Valid file truncated mid-blob.
  std::string good = (dir / "good.ckpt").string();
  save_checkpoint(good, ps, KvConfig{}, {});
  auto sz = fs::file_size(good);
  fs::resize_file(good, sz - 16);
  CHECK_THROWS_AS(load_checkpoint(good, ps), Error);

  CHECK_THROWS_AS(read_checkpoint_meta((dir / "missing.ckpt").string()), Error);
  fs::remove(path);
  fs::remove(good);
}

TEST_CASE("params_hash tracks values and names") {
  ParamSet a = random_params(5);
  ParamSet b = random_params(5);
  CHECK(params_hash(a) == params_hash(b));
  b.at("layer.w").value[0] += 1e-9;
  CHECK(params_hash(a) != params_hash(b));
}

TEST_CASE("model save/load restores behavior exactly") {
  auto dir = work_dir();

  EnhancerConfig ecfg;
  ecfg.kernel_len = 32;
  ecfg.stride = 16;
  ecfg.encoder_channels = 8;
  ecfg.bottleneck_channels = 6;
  ecfg.conv_channels = 8;
  ecfg.n_blocks_per_repeat = 1;
  ecfg.n_repeats = 1;
  Enhancer enh = Enhancer::init(ecfg, 21);
  std::string epath = (dir / "enh.ckpt").string();
  enh.save(epath, {{"stage", "test"}});
  Enhancer loaded = Enhancer::load(epath);
  CHECK(loaded.config().kernel_len == 32);
  Rng rng(22);
  Waveform x;
  x.samples.resize(800);
  for (auto& s : x.samples) s = 0.3 * rng.normal();
  Waveform y1 = enh.enhance(x);
  Waveform y2 = loaded.enhance(x);
  CHECK(y1.samples == y2.samples);

  SpotterConfig scfg;
  scfg.features.n_mels = 12;
  scfg.features.window_len = 128;
  scfg.features.hop = 64;
  scfg.features.fmin_hz = 50.0;
  scfg.features.fmax_hz = 7000.0;
  scfg.stem_channels = 4;
  scfg.block2_channels = 6;
  scfg.block3_channels = 8;
  Spotter sp = Spotter::init(scfg, 23);
  std::string spath = (dir / "sp.ckpt").string();
  sp.save(spath, {});
  Spotter sp2 = Spotter::load(spath);
  auto p1 = sp.classify(x);
  auto p2 = sp2.classify(x);
  for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);

  // Loading the wrong kind into a model class fails loudly.
  CHECK_THROWS_AS(Spotter::load(epath), Error);
  CHECK_THROWS_AS(Enhancer::load(spath), Error);
  fs::remove(epath);
  fs::remove(spath);
}

TEST_SUITE_END();
