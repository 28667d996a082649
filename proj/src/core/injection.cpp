// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/injection.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace sekws {

AlphaGrid AlphaGrid::uniform_21() {
  AlphaGrid g;
  g.values.reserve(21);
  // Exact endpoints; interior points land on the usual 0.05 lattice.
  for (int i = 0; i <= 20; ++i) g.values.push_back(static_cast<double>(i) / 20.0);
  g.values.front() = 0.0;
  g.values.back() = 1.0;
  return g;
}

void AlphaGrid::validate() const {
  require(!values.empty(), ErrorKind::InvalidArgument, "alpha grid: empty");
  double prev = -1.0;
  for (double v : values) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument,
            "alpha grid: values must lie in [0,1]");
    require(v > prev, ErrorKind::InvalidArgument, "alpha grid: values must strictly increase");
    prev = v;
  }
}

void AlphaGrid::validate_full_range() const {
  validate();
  require(values.front() == 0.0 && values.back() == 1.0, ErrorKind::InvalidArgument,
          "alpha grid: sweep grids must include both endpoints 0 and 1");
}

Waveform inject(const Waveform& enhanced, const Waveform& original, double alpha) {
  require(enhanced.size() == original.size(), ErrorKind::Shape,
          "inject: length mismatch (" + std::to_string(enhanced.size()) + " vs " +
              std::to_string(original.size()) + ")");
  require(std::isfinite(alpha) && alpha >= 0.0 && alpha <= 1.0, ErrorKind::InvalidArgument,
          "inject: alpha must lie in [0,1]");
  // Endpoint branches keep the identities exact at bit level.
  if (alpha == 0.0) return original;
  if (alpha == 1.0) return enhanced;
  Waveform out = original;
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] += alpha * (enhanced.samples[i] - original.samples[i]);
  }
  return out;
}

std::vector<SweepRow> sweep_alpha(const EnhanceFn& enhance, const Spotter& backend,
                                  const std::vector<NoisyEvalItem>& items,
                                  const AlphaGrid& grid) {
  grid.validate();
  require(enhance != nullptr, ErrorKind::InvalidArgument, "sweep_alpha: missing enhance fn");
  require(!items.empty(), ErrorKind::InvalidArgument, "sweep_alpha: empty evaluation set");

  // Enhance once per item; each grid point only re-blends and re-classifies.
  std::vector<Waveform> enhanced;
  enhanced.reserve(items.size());
  for (const auto& it : items) {
    Waveform e = enhance(it.mixture);
    require(e.size() == it.mixture.size(), ErrorKind::Shape,
            "sweep_alpha: enhancer changed the signal length");
    enhanced.push_back(std::move(e));
  }

  std::vector<SweepRow> rows;
  rows.reserve(grid.values.size());
  for (double alpha : grid.values) {
    int correct = 0;
    for (size_t i = 0; i < items.size(); ++i) {
      Waveform blended = inject(enhanced[i], items[i].mixture, alpha);
      if (argmax_class(backend.classify(blended)) == items[i].label) ++correct;
    }
    rows.push_back({alpha, static_cast<double>(correct) / static_cast<double>(items.size())});
  }
  return rows;
}

void save_sweep_csv(const std::string& path, const std::string& series,
                    const std::vector<SweepRow>& rows, bool append) {
  require(!rows.empty(), ErrorKind::InvalidArgument, "save_sweep_csv: no rows");
  bool fresh = !append || !std::filesystem::exists(path);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write sweep csv: " + path);
  if (fresh) out << "alpha,series,accuracy\n";
  out.precision(12);
  for (const auto& r : rows) out << r.alpha << "," << series << "," << r.accuracy << "\n";
  require(out.good(), ErrorKind::Io, "failed writing sweep csv: " + path);
}

}  // namespace sekws
