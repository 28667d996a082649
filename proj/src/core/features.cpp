// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/features.hpp"

#include <cmath>
#include <complex>

#include "core/errors.hpp"
#include "core/fft.hpp"

namespace sekws {

void FeatureConfig::validate() const {
  require(n_mels >= 1, ErrorKind::InvalidArgument, "features: n_mels must be >= 1");
  require(window_len > 0 && hop > 0, ErrorKind::InvalidArgument,
          "features: window and hop must be positive");
  require(hop <= window_len, ErrorKind::InvalidArgument, "features: hop must not exceed window");
  require(log_floor > 0.0, ErrorKind::InvalidArgument, "features: log_floor must be positive");
  require(fmin_hz >= 0.0 && fmin_hz < fmax_hz, ErrorKind::InvalidArgument,
          "features: need 0 <= fmin < fmax");
}

int FeatureConfig::n_fft() const { return next_pow2(window_len); }

int FeatureConfig::n_bins() const { return n_fft() / 2 + 1; }

int FeatureConfig::frame_count(int n_samples) const {
  require(n_samples >= window_len, ErrorKind::Shape,
          "features: input shorter than analysis window (" + std::to_string(n_samples) + " < " +
              std::to_string(window_len) + ")");
  return (n_samples - window_len) / hop + 1;
}

std::vector<double> hann_window(int n) {
  require(n > 0, ErrorKind::InvalidArgument, "hann_window: length must be positive");
  std::vector<double> w(static_cast<size_t>(n));
  const double two_pi = 6.283185307179586476925286766559;
  for (int i = 0; i < n; ++i) {
    w[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(two_pi * i / static_cast<double>(n));
  }
  return w;
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Tensor mel_filterbank(int n_mels, int n_fft, int sample_rate_hz, double fmin_hz, double fmax_hz) {
  require(n_mels >= 1, ErrorKind::InvalidArgument, "mel_filterbank: n_mels must be >= 1");
  require(fmax_hz <= sample_rate_hz / 2.0 + 1e-9, ErrorKind::InvalidArgument,
          "mel_filterbank: fmax above Nyquist");
  int n_bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(fmin_hz);
  double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (int m = 0; m < n_mels + 2; ++m) {
    edges[static_cast<size_t>(m)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / static_cast<double>(n_mels + 1));
  }
  Tensor fb({n_bins, n_mels});
  for (int k = 0; k < n_bins; ++k) {
    double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
    for (int m = 0; m < n_mels; ++m) {
      double lo = edges[static_cast<size_t>(m)];
      double mid = edges[static_cast<size_t>(m) + 1];
      double hi = edges[static_cast<size_t>(m) + 2];
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      fb[static_cast<int64_t>(k) * n_mels + m] = w;
    }
  }
  return fb;
}

Node* spectrum_power(Graph& g, Node* frames, const std::vector<double>& window, int n_fft) {
  require(frames->val.rank() == 2, ErrorKind::Shape, "spectrum_power: frames must be {T,W}");
  int t_len = frames->val.dim(0);
  int w_len = frames->val.dim(1);
  require(static_cast<int>(window.size()) == w_len, ErrorKind::Shape,
          "spectrum_power: window length mismatch");
  require(n_fft >= w_len && (n_fft & (n_fft - 1)) == 0, ErrorKind::InvalidArgument,
          "spectrum_power: n_fft must be a power of two covering the window");
  int n_bins = n_fft / 2 + 1;

  Tensor v({t_len, n_bins});
  // Spectra are kept for the backward pass.
  auto spectra = std::make_shared<std::vector<std::complex<double>>>(
      static_cast<size_t>(t_len) * static_cast<size_t>(n_bins));
  {
    std::vector<std::complex<double>> buf(static_cast<size_t>(n_fft));
    const double* pf = frames->val.data();
    double* pv = v.data();
    for (int t = 0; t < t_len; ++t) {
      const double* row = pf + static_cast<int64_t>(t) * w_len;
      for (int j = 0; j < w_len; ++j) buf[static_cast<size_t>(j)] = row[j] * window[static_cast<size_t>(j)];
      for (int j = w_len; j < n_fft; ++j) buf[static_cast<size_t>(j)] = 0.0;
      fft_radix2(buf);
      for (int k = 0; k < n_bins; ++k) {
        std::complex<double> xk = buf[static_cast<size_t>(k)];
        (*spectra)[static_cast<size_t>(t) * n_bins + static_cast<size_t>(k)] = xk;
        pv[static_cast<int64_t>(t) * n_bins + k] = std::norm(xk);
      }
    }
  }
  Node* out = g.make(std::move(v), frames->requires_grad);
  if (out->requires_grad) {
    std::vector<double> win = window;
    out->backward = [out, frames, spectra, win, t_len, w_len, n_fft, n_bins]() {
      // P_k = |X_k|^2 with X = DFT(x). dP_k/dx_n = 2 Re(conj(X_k) e^{-2πikn/N}),
      // so grad_x = 2 Re(DFT(y)) with y_k = g_k conj(X_k) on the kept bins and
      // zero elsewhere. One more forward FFT per frame does the job.
      const double* gr = out->grad.data();
      double* df = frames->grad.data();
      std::vector<std::complex<double>> y(static_cast<size_t>(n_fft));
      for (int t = 0; t < t_len; ++t) {
        bool any = false;
        const double* grow = gr + static_cast<int64_t>(t) * n_bins;
        for (int k = 0; k < n_bins; ++k) {
          if (grow[k] != 0.0) {
            any = true;
            break;
          }
        }
        if (!any) continue;
        for (int k = 0; k < n_fft; ++k) y[static_cast<size_t>(k)] = 0.0;
        for (int k = 0; k < n_bins; ++k) {
          y[static_cast<size_t>(k)] =
              grow[k] * std::conj((*spectra)[static_cast<size_t>(t) * n_bins + static_cast<size_t>(k)]);
        }
        fft_radix2(y);
        double* drow = df + static_cast<int64_t>(t) * w_len;
        for (int j = 0; j < w_len; ++j) {
          drow[j] += 2.0 * y[static_cast<size_t>(j)].real() * win[static_cast<size_t>(j)];
        }
      }
    };
  }
  return out;
}

Node* logmel_node(Graph& g, Node* wave, const FeatureConfig& fc, int sample_rate_hz) {
  fc.validate();
  Node* frames = g.unfold(wave, fc.window_len, fc.hop, /*pad_tail=*/false);
  Node* power = spectrum_power(g, frames, hann_window(fc.window_len), fc.n_fft());
  Node* fb = g.leaf(mel_filterbank(fc.n_mels, fc.n_fft(), sample_rate_hz, fc.fmin_hz, fc.fmax_hz));
  Node* mel = g.matmul(power, fb);
  return g.ln(g.add_const(mel, fc.log_floor));
}

Tensor logmel(const Waveform& w, const FeatureConfig& fc) {
  Graph g;
  return logmel_node(g, g.leaf(w), fc, w.sample_rate_hz)->val;
}

}  // namespace sekws
