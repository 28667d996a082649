// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "core/graph.hpp"
#include "core/tensor.hpp"
#include "core/waveform.hpp"

namespace sekws {

// Log mel-filterbank frontend. Framing keeps only fully covered windows, so a
// 16000-sample input at 400/160 yields 98 frames.
struct FeatureConfig {
  int n_mels = 40;
  int window_len = 400;
  int hop = 160;
  double log_floor = 1e-10;
  double fmin_hz = 20.0;
  double fmax_hz = 8000.0;

  void validate() const;
  int n_fft() const;        // next power of two >= window_len
  int n_bins() const;       // n_fft()/2 + 1
  int frame_count(int n_samples) const;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// Triangular mel filterbank, {n_bins, n_mels}, HTK mel scale
// m = 2595*log10(1 + f/700), unit filter peaks.
Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate_hz, double fmin_hz, double fmax_hz);

// Tape op: windowed power spectrum of each frame row. frames {T,W} -> {T,B}
// with B = n_fft/2+1. Differentiable through the FFT.
Node* spectrum_power(Graph& g, Node* frames, const std::vector<double>& window, int n_fft);

// Full frontend on the tape: wave {L} -> log(mel power + floor), {T, n_mels}.
Node* logmel_node(Graph& g, Node* wave, const FeatureConfig& fc, int sample_rate_hz);

// Forward-only convenience, same math.
Tensor logmel(const Waveform& w, const FeatureConfig& fc);

}  // namespace sekws
