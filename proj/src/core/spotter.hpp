// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/features.hpp"
#include "core/graph.hpp"
#include "core/labels.hpp"
#include "core/params.hpp"
#include "core/waveform.hpp"

namespace sekws {

// Keyword classifier: log-mel frontend, small residual conv net, global
// average pooling, linear 12-way head. The head is zero-initialized so an
// untrained model emits the uniform distribution.
struct SpotterConfig {
  FeatureConfig features;
  int stem_channels = 12;
  int block2_channels = 16;
  int block3_channels = 24;
  double standardize_eps = 1e-5;

  void validate() const;
  void to_config(KvConfig& cfg) const;
  static SpotterConfig from_config(const KvConfig& cfg);
};

class Spotter {
 public:
  static Spotter init(const SpotterConfig& cfg, uint64_t seed);

  const SpotterConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Tape path: waveform node {L} -> logits {1,12}.
  Node* logits_node(Graph& g, Node* wave);

  // Forward-only: probabilities over the 12 classes (sum to 1).
  std::vector<double> classify(const Waveform& x) const;

  void save(const std::string& path, const std::map<std::string, std::string>& metadata) const;
  static Spotter load(const std::string& path);

 private:
  Spotter() = default;
  SpotterConfig cfg_;
  ParamSet params_;
};

// Lowest index wins ties, making accuracy deterministic.
int argmax_class(const std::vector<double>& probs);

struct EvalExample {
  const Waveform* audio = nullptr;
  int label = 0;
};

// Fraction of examples whose argmax matches the label. Errors on empty input.
double accuracy(const Spotter& model, const std::vector<EvalExample>& examples);

}  // namespace sekws
