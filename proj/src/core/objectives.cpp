// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace sekws {

double sdr_db(const Waveform& reference, const Waveform& estimate) {
  return sdr_db(reference, estimate, SdrVariant::Plain);
}

double sdr_db(const Waveform& reference, const Waveform& estimate, SdrVariant variant) {
  require(reference.size() == estimate.size(), ErrorKind::Shape,
          "sdr_db: length mismatch (" + std::to_string(reference.size()) + " vs " +
              std::to_string(estimate.size()) + ")");
  size_t n = reference.size();
  require(n > 0, ErrorKind::InvalidArgument, "sdr_db: empty signals");

  double signal_energy = 0.0;
  for (double s : reference.samples) signal_energy += s * s;
  require(signal_energy > 0.0, ErrorKind::Degenerate, "sdr_db: zero reference");

  // Scale-invariant variant rescales the target to the least-squares
  // projection of the estimate onto the reference.
  double target_gain = 1.0;
  if (variant == SdrVariant::ScaleInvariant) {
    double dot = 0.0;
    for (size_t i = 0; i < n; ++i) dot += reference.samples[i] * estimate.samples[i];
    target_gain = dot / signal_energy;
    if (target_gain == 0.0) {
      // Estimate orthogonal to the reference: no target component at all.
      return -std::numeric_limits<double>::infinity();
    }
  }

  double target_energy = 0.0;
  double error_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double t = target_gain * reference.samples[i];
    double e = estimate.samples[i] - t;
    target_energy += t * t;
    error_energy += e * e;
  }
  if (error_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(target_energy / error_energy);
}

double sdr_improvement_db(const Waveform& reference, const Waveform& mixture,
                          const Waveform& enhanced) {
  double base = sdr_db(reference, mixture);
  require(std::isfinite(base), ErrorKind::Degenerate,
          "sdr_improvement_db: mixture equals reference");
  return sdr_db(reference, enhanced) - base;
}

double clamp_sdr(double sdr) { return std::max(-kSdrCapDb, std::min(kSdrCapDb, sdr)); }

double cross_entropy(const std::vector<double>& probs, int label) {
  require(!probs.empty(), ErrorKind::InvalidArgument, "cross_entropy: empty distribution");
  require(label >= 0 && label < static_cast<int>(probs.size()), ErrorKind::InvalidArgument,
          "cross_entropy: label out of range");
  double p = std::max(probs[static_cast<size_t>(label)], kCeFloor);
  return -std::log(p);
}

LossValue combined_loss(double ce, double sdr_db_value, double beta) {
  require(std::isfinite(ce), ErrorKind::Numeric, "combined_loss: non-finite ce");
  require(beta >= 0.0, ErrorKind::InvalidArgument, "combined_loss: beta must be >= 0");
  double sdr_loss = -clamp_sdr(sdr_db_value);
  LossValue out;
  out.components["ce"] = ce;
  out.components["sdr_loss"] = sdr_loss;
  out.value = ce + beta * sdr_loss;
  require(std::isfinite(out.value), ErrorKind::Numeric, "combined_loss: non-finite value");
  return out;
}

double measure_snr_db(const Waveform& clean, const Waveform& noise_scaled) {
  require(clean.size() == noise_scaled.size(), ErrorKind::Shape, "measure_snr_db: length mismatch");
  return power_ratio_db(clean, noise_scaled);
}

}  // namespace sekws
