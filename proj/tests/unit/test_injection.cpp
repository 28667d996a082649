// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/injection.hpp"
#include "core/rng.hpp"
#include "core/spotter.hpp"

using namespace sekws;

namespace {

Waveform random_wave(uint64_t seed, size_t n, double amp = 0.3) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = amp * rng.normal();
  return w;
}

SpotterConfig tiny_spotter_config() {
  SpotterConfig cfg;
  cfg.features.n_mels = 12;
  cfg.features.window_len = 128;
  cfg.features.hop = 64;
  cfg.stem_channels = 4;
  cfg.block2_channels = 6;
  cfg.block3_channels = 8;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

int count_lines(const std::string& path, std::vector<std::string>* lines = nullptr) {
  std::ifstream in(path);
  REQUIRE(in.good());
  int n = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++n;
    if (lines != nullptr) lines->push_back(line);
  }
  return n;
}

}  // namespace

TEST_SUITE_BEGIN("injection");

TEST_CASE("uniform grid covers the unit interval in 21 steps") {
  AlphaGrid g = AlphaGrid::uniform_21();
  REQUIRE(g.values.size() == 21);
  CHECK(g.values.front() == 0.0);
  CHECK(g.values.back() == 1.0);
  CHECK(g.values[10] == 0.5);
  CHECK_NOTHROW(g.validate_full_range());
  for (size_t i = 0; i < g.values.size(); ++i) {
    CHECK(g.values[i] == doctest::Approx(0.05 * double(i)).epsilon(1e-12));
  }
}

TEST_CASE("grid validation rejects malformed grids") {
  AlphaGrid g;
  CHECK_THROWS_AS(g.validate(), Error);  // empty

  g.values = {0.2, 0.2};
  CHECK_THROWS_AS(g.validate(), Error);  // not strictly increasing

  g.values = {-0.1, 0.5};
  CHECK_THROWS_AS(g.validate(), Error);  // below range

  g.values = {0.0, 1.5};
  CHECK_THROWS_AS(g.validate(), Error);  // above range

  // A prediction grid may omit the endpoints, a sweep grid may not.
  g.values = {0.1, 0.9};
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(g.validate_full_range(), Error);
  g.values = {0.0, 0.9};
  CHECK_THROWS_AS(g.validate_full_range(), Error);
  g.values = {0.5};
  CHECK_NOTHROW(g.validate());
  CHECK_THROWS_AS(g.validate_full_range(), Error);
}

TEST_CASE("blend endpoints return bit-identical copies") {
  Waveform original = random_wave(1, 500);
  Waveform enhanced = random_wave(2, 500);
  CHECK(inject(enhanced, original, 0.0).samples == original.samples);
  CHECK(inject(enhanced, original, 1.0).samples == enhanced.samples);
}

TEST_CASE("blend interior is the convex combination") {
  Waveform original = random_wave(3, 400);
  Waveform enhanced = random_wave(4, 400);
  for (double alpha : {0.25, 0.5, 0.75}) {
    Waveform out = inject(enhanced, original, alpha);
    REQUIRE(out.size() == original.size());
    for (size_t i = 0; i < out.size(); ++i) {
      double expected = original.samples[i] +
                        alpha * (enhanced.samples[i] - original.samples[i]);
      CHECK(out.samples[i] == expected);
    }
  }
}

TEST_CASE("identity enhancement is invisible at every alpha") {
  Waveform x = random_wave(5, 300);
  for (double alpha : AlphaGrid::uniform_21().values) {
    CHECK(inject(x, x, alpha).samples == x.samples);
  }
}

TEST_CASE("inject rejects bad inputs") {
  Waveform a = random_wave(6, 100);
  Waveform b = random_wave(7, 101);
  try {
    inject(a, b, 0.5);
    FAIL("length mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
  Waveform c = random_wave(8, 100);
  for (double alpha : {-0.1, 1.1}) {
    try {
      inject(a, c, alpha);
      FAIL("out-of-range alpha accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
  }
  CHECK_THROWS_AS(inject(a, c, std::nan("")), Error);
}

TEST_CASE("sweep over an identity enhancer is a constant row") {
  // An untrained spotter has a zero head, so every input maps to the uniform
  // distribution and the argmax tie-break always picks class 0. Half the items
  // carry label 0, so accuracy must be exactly one half at every alpha.
  Spotter spot = Spotter::init(tiny_spotter_config(), 1);
  std::vector<NoisyEvalItem> items;
  for (int i = 0; i < 6; ++i) {
    NoisyEvalItem it;
    it.mixture = random_wave(100 + uint64_t(i), 800);
    it.clean = it.mixture;
    it.label = i % 2;
    items.push_back(std::move(it));
  }
  EnhanceFn identity = [](const Waveform& w) { return w; };
  AlphaGrid grid = AlphaGrid::uniform_21();
  auto rows = sweep_alpha(identity, spot, items, grid);
  REQUIRE(rows.size() == grid.values.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].alpha == grid.values[i]);
    CHECK(rows[i].accuracy == 0.5);
  }
}

TEST_CASE("sweep validates its inputs") {
  Spotter spot = Spotter::init(tiny_spotter_config(), 2);
  AlphaGrid grid = AlphaGrid::uniform_21();
  EnhanceFn identity = [](const Waveform& w) { return w; };

  std::vector<NoisyEvalItem> empty;
  CHECK_THROWS_AS(sweep_alpha(identity, spot, empty, grid), Error);

  std::vector<NoisyEvalItem> items(1);
  items[0].mixture = random_wave(9, 800);
  items[0].clean = items[0].mixture;
  CHECK_THROWS_AS(sweep_alpha(EnhanceFn{}, spot, items, grid), Error);

  EnhanceFn shrink = [](const Waveform& w) {
    Waveform out = w;
    out.samples.pop_back();
    return out;
  };
  CHECK_THROWS_AS(sweep_alpha(shrink, spot, items, grid), Error);
}

TEST_CASE("sweep csv header, append, and overwrite") {
  std::string path = temp_path("sekws_test_sweep.csv");
  std::filesystem::remove(path);

  std::vector<SweepRow> rows;
  for (double a : {0.0, 0.5, 1.0}) rows.push_back({a, 0.25 * (1.0 + a)});

  save_sweep_csv(path, "base", rows, false);
  {
    std::vector<std::string> lines;
    CHECK(count_lines(path, &lines) == 4);
    CHECK(lines[0] == "alpha,series,accuracy");
    CHECK(lines[1].rfind("0,base,", 0) == 0);
  }

  // Appending a second series adds rows under the same single header.
  save_sweep_csv(path, "joint", rows, true);
  {
    std::vector<std::string> lines;
    CHECK(count_lines(path, &lines) == 7);
    int headers = 0;
    int joint_rows = 0;
    for (const auto& l : lines) {
      if (l == "alpha,series,accuracy") ++headers;
      if (l.find(",joint,") != std::string::npos) ++joint_rows;
    }
    CHECK(headers == 1);
    CHECK(joint_rows == 3);
  }

  // Overwrite mode starts the file over.
  save_sweep_csv(path, "fresh", rows, false);
  {
    std::vector<std::string> lines;
    CHECK(count_lines(path, &lines) == 4);
    // Row values survive a parse round trip.
    std::istringstream ss(lines[2]);
    std::string alpha_s, series_s, acc_s;
    std::getline(ss, alpha_s, ',');
    std::getline(ss, series_s, ',');
    std::getline(ss, acc_s, ',');
    CHECK(std::stod(alpha_s) == 0.5);
    CHECK(series_s == "fresh");
    CHECK(std::stod(acc_s) == doctest::Approx(0.375).epsilon(1e-12));
  }

  CHECK_THROWS_AS(save_sweep_csv(path, "none", {}, true), Error);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
