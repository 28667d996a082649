// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "core/config.hpp"
#include "core/features.hpp"
#include "core/graph.hpp"
#include "core/injection.hpp"
#include "core/params.hpp"
#include "core/waveform.hpp"

namespace sekws {

// Per-utterance blend-weight predictor. Consumes log-mel features of the
// original and enhanced signals concatenated along the feature axis, runs
// stacked bidirectional LSTM layers, pools over time with learned attention,
// and emits a softmax over a discrete alpha grid; the prediction is the
// expected alpha under that distribution, so it always lies inside the grid.
struct SwitchConfig {
  int n_mels = 64;
  int window_len = 400;
  int hop = 160;
  int hidden = 32;   // per-direction recurrent width
  int n_layers = 3;
  int attn_dim = 32;
  int fc_dim = 32;
  AlphaGrid grid = AlphaGrid::uniform_21();
  double log_floor = 1e-10;
  double fmin_hz = 20.0;
  double fmax_hz = 8000.0;
  double standardize_eps = 1e-5;

  void validate() const;
  FeatureConfig feature_config() const;
  void to_config(KvConfig& cfg) const;
  static SwitchConfig from_config(const KvConfig& cfg);
};

class SwitchNet {
 public:
  static SwitchNet init(const SwitchConfig& cfg, uint64_t seed);

  const SwitchConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Tape path: alpha as a size-1 node, differentiable wrt the switch params.
  Node* alpha_node(Graph& g, const Waveform& original, const Waveform& enhanced);

  // Forward-only prediction; equals alpha_node's value exactly.
  double predict_alpha(const Waveform& original, const Waveform& enhanced) const;

  void save(const std::string& path, const std::map<std::string, std::string>& metadata) const;
  static SwitchNet load(const std::string& path);

 private:
  SwitchNet() = default;

  SwitchConfig cfg_;
  ParamSet params_;
};

}  // namespace sekws
