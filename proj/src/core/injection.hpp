// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/datamix.hpp"
#include "core/spotter.hpp"
#include "core/waveform.hpp"

namespace sekws {

// Ordered blend weights in [0,1]. Sweeps require the full range (both
// endpoints present); a prediction head may use any non-empty grid.
struct AlphaGrid {
  std::vector<double> values;

  static AlphaGrid uniform_21();  // 0, 0.05, ..., 1.0

  void validate() const;             // non-empty, strictly increasing, within [0,1]
  void validate_full_range() const;  // validate() plus endpoints 0 and 1
};

// Convex blend of an enhanced signal into the original:
//   out = alpha * enhanced + (1 - alpha) * original.
// The alpha = 0 and alpha = 1 endpoints return bit-identical copies.
Waveform inject(const Waveform& enhanced, const Waveform& original, double alpha);

// Signal transform under test; identity and model-backed closures both fit.
using EnhanceFn = std::function<Waveform(const Waveform&)>;

struct SweepRow {
  double alpha = 0.0;
  double accuracy = 0.0;
};

// For each grid alpha: enhance every item once, blend at alpha, classify, and
// record accuracy. Rows come back in grid order.
std::vector<SweepRow> sweep_alpha(const EnhanceFn& enhance, const Spotter& backend,
                                  const std::vector<NoisyEvalItem>& items,
                                  const AlphaGrid& grid);

// CSV with header alpha,series,accuracy; series tags one configuration so
// several sweeps can share a file.
void save_sweep_csv(const std::string& path, const std::string& series,
                    const std::vector<SweepRow>& rows, bool append);

}  // namespace sekws
