// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/waveform.hpp"

using namespace sekws;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "sekws_wave_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("waveform");

TEST_CASE("mean power and power ratio") {
  Waveform a({1.0, -1.0, 1.0, -1.0}, 16000);
  Waveform b({0.5, -0.5, 0.5, -0.5}, 16000);
  CHECK(mean_power(a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_power(b) == doctest::Approx(0.25).epsilon(1e-15));
  // 10*log10(4) to full double precision.
  CHECK(power_ratio_db(a, b) == doctest::Approx(6.020599913279624).epsilon(1e-12));
  Waveform z({0.0, 0.0}, 16000);
  CHECK_THROWS_AS(power_ratio_db(a, z), Error);
}

TEST_CASE("validate rejects bad signals") {
  Waveform empty;
  CHECK_THROWS_AS(empty.validate("sig"), Error);
  Waveform nan_sig({0.1, std::nan("")}, 16000);
  CHECK_THROWS_AS(nan_sig.validate("sig"), Error);
  Waveform bad_rate({0.1}, 0);
  CHECK_THROWS_AS(bad_rate.validate("sig"), Error);
  Waveform ok({0.1, -0.2}, 16000);
  CHECK_NOTHROW(ok.validate("sig"));
}

TEST_CASE("fit_length pads the tail and truncates the head-keeping way") {
  Waveform w({1.0, 2.0, 3.0}, 16000);
  Waveform longer = fit_length(w, 5);
  REQUIRE(longer.size() == 5);
  CHECK(longer.samples[2] == 3.0);
  CHECK(longer.samples[3] == 0.0);
  CHECK(longer.samples[4] == 0.0);
  Waveform shorter = fit_length(w, 2);
  REQUIRE(shorter.size() == 2);
  CHECK(shorter.samples[0] == 1.0);
  CHECK(shorter.samples[1] == 2.0);
}

TEST_CASE("wav roundtrip at 16-bit quantization") {
  auto dir = temp_dir();
  std::string path = (dir / "rt.wav").string();
  Rng rng(202);
  Waveform w;
  w.samples.resize(1600);
  for (auto& s : w.samples) s = rng.uniform(-0.99, 0.99);
  write_wav(path, w);
  Waveform r = read_wav(path);
  CHECK(r.sample_rate_hz == 16000);
  REQUIRE(r.size() == w.size());
  // Quantizer step is 2/65536; roundtrip error is bounded by one step.
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) < 1.0 / 32767.0);
  }
  fs::remove(path);
}

TEST_CASE("wav read validates header") {
  auto dir = temp_dir();
  std::string path = (dir / "bad.wav").string();
  std::ofstream f(path, std::ios::binary);
  f << "not a wav file at all";
  f.close();
  CHECK_THROWS_AS(read_wav(path), Error);
  CHECK_THROWS_AS(read_wav((dir / "missing.wav").string()), Error);
  fs::remove(path);
}

TEST_CASE("read_wav_checked enforces the sample rate") {
  auto dir = temp_dir();
  std::string path = (dir / "rate.wav").string();
  Waveform w({0.1, 0.2, 0.3}, 8000);
  write_wav(path, w);
  CHECK_THROWS_AS(read_wav_checked(path, 16000), Error);
  CHECK_NOTHROW(read_wav_checked(path, 8000));
  fs::remove(path);
}

TEST_CASE("write clamps out-of-range samples") {
  auto dir = temp_dir();
  std::string path = (dir / "clip.wav").string();
  Waveform w({2.0, -2.0, 0.0}, 16000);
  write_wav(path, w);
  Waveform r = read_wav(path);
  CHECK(r.samples[0] <= 1.0);
  CHECK(r.samples[0] > 0.99);
  CHECK(r.samples[1] >= -1.0);
  CHECK(r.samples[1] < -0.99);
  CHECK(r.samples[2] == doctest::Approx(0.0).epsilon(1e-4));
  fs::remove(path);
}

TEST_SUITE_END();
