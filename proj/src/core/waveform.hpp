// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace sekws {

constexpr int kDefaultSampleRate = 16000;

// 1-D audio signal. Samples are dimensionless amplitudes, nominal range [-1,1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate_hz(rate) {}

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Throws on empty signal, non-finite samples, or non-positive rate.
  void validate(const std::string& what) const;
};

// Mean squared amplitude over the whole signal.
double mean_power(const Waveform& w);

// 10*log10(P_a / P_b). Errors on zero-power inputs.
double power_ratio_db(const Waveform& a, const Waveform& b);

// Zero-pad at the tail or truncate (keeping the head) to exactly n samples.
Waveform fit_length(const Waveform& w, size_t n);

// 16-bit PCM WAV I/O. Readers accept any channel count and return the first
// channel only; writers always emit mono. Sample values are clamped to
// [-1, 1) at write time.
Waveform read_wav(const std::string& path);
Waveform read_wav_checked(const std::string& path, int expected_rate);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace sekws
