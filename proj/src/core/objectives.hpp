// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/waveform.hpp"

namespace sekws {

// Signal-to-distortion ratio in dB: 10*log10(||ref||^2 / ||ref - est||^2).
// Returns +infinity when the estimate equals the reference exactly.
// Errors on a zero reference or mismatched lengths.
double sdr_db(const Waveform& reference, const Waveform& estimate);

enum class SdrVariant { Plain, ScaleInvariant };

// Same contract with a selectable variant; ScaleInvariant projects the
// estimate onto the reference before measuring distortion.
double sdr_db(const Waveform& reference, const Waveform& estimate, SdrVariant variant);

// sdr_db(reference, enhanced) - sdr_db(reference, mixture). Errors when the
// mixture equals the reference (the baseline SDR is unbounded).
double sdr_improvement_db(const Waveform& reference, const Waveform& mixture,
                          const Waveform& enhanced);

// Cap applied to SDR values before they enter losses or aggregate metrics, so
// gradients and means stay finite near perfect reconstruction.
constexpr double kSdrCapDb = 60.0;

double clamp_sdr(double sdr);

// -log(probs[label]); probabilities are floored at kCeFloor before the log.
constexpr double kCeFloor = 1e-12;

double cross_entropy(const std::vector<double>& probs, int label);

// Combined objective: value = ce + beta * (-sdr). Minimizing the value raises
// SDR. The SDR input is clamped to +/-kSdrCapDb first.
struct LossValue {
  double value = 0.0;
  std::map<std::string, double> components;  // "ce", "sdr_loss"
};

LossValue combined_loss(double ce, double sdr_db_value, double beta);

// 10*log10(P_clean / P_noise). Used to verify mixtures; errors on zero power.
double measure_snr_db(const Waveform& clean, const Waveform& noise_scaled);

}  // namespace sekws
