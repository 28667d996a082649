// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "core/config.hpp"
#include "core/graph.hpp"
#include "core/params.hpp"
#include "core/tensor.hpp"
#include "core/waveform.hpp"

namespace sekws {

// Time-domain masking enhancer: learned convolutional encoder, dilated-conv
// separator predicting a sigmoid mask over the encoded representation, and an
// overlap-add decoder. The causal variant uses left-only padding and
// cumulative normalization so output frame t never sees the future.
struct EnhancerConfig {
  int kernel_len = 320;           // encoder window, samples
  int stride = 160;               // encoder hop, samples
  int encoder_channels = 64;      // representation width
  int bottleneck_channels = 32;   // separator residual width
  int conv_channels = 64;         // separator block width
  int n_blocks_per_repeat = 2;    // dilations 1, 2, 4, ... per repeat
  int n_repeats = 2;
  bool causal = true;
  double norm_eps = 1e-8;

  void validate() const;
  void to_config(KvConfig& cfg) const;
  static EnhancerConfig from_config(const KvConfig& cfg);
};

class Enhancer {
 public:
  static Enhancer init(const EnhancerConfig& cfg, uint64_t seed);

  const EnhancerConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Tape paths (parameters enter as trainable leaves unless frozen).
  Node* encode_node(Graph& g, Node* x);
  Node* mask_node(Graph& g, Node* repr);
  Node* enhance_node(Graph& g, Node* x);

  // Forward-only paths.
  Tensor encode(const Waveform& x) const;
  Tensor mask(const Tensor& repr) const;
  Waveform enhance(const Waveform& x) const;

  void save(const std::string& path, const std::map<std::string, std::string>& metadata) const;
  static Enhancer load(const std::string& path);

 private:
  Enhancer() = default;
  EnhancerConfig cfg_;
  ParamSet params_;
};

// Closed-form receptive field of the causal stack in samples: the encoder
// window plus the frames reached by every dilated conv, times the hop.
int receptive_field_samples(const EnhancerConfig& cfg);

}  // namespace sekws
