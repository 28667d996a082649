// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/enhancer.hpp"

#include <cmath>
#include <functional>

#include "core/checkpoint.hpp"
#include "core/errors.hpp"

namespace sekws {

void EnhancerConfig::validate() const {
  require(kernel_len > 0 && stride > 0, ErrorKind::InvalidArgument,
          "enhancer: kernel and stride must be positive");
  require(kernel_len % stride == 0, ErrorKind::InvalidArgument,
          "enhancer: stride must divide kernel_len");
  require(encoder_channels > 0 && bottleneck_channels > 0 && conv_channels > 0,
          ErrorKind::InvalidArgument, "enhancer: channel counts must be positive");
  require(n_blocks_per_repeat >= 0 && n_repeats >= 0, ErrorKind::InvalidArgument,
          "enhancer: block and repeat counts must be non-negative");
  require(norm_eps > 0.0, ErrorKind::InvalidArgument, "enhancer: norm_eps must be positive");
}

void EnhancerConfig::to_config(KvConfig& cfg) const {
  cfg.set("enhancer.kernel_len", static_cast<int64_t>(kernel_len));
  cfg.set("enhancer.stride", static_cast<int64_t>(stride));
  cfg.set("enhancer.encoder_channels", static_cast<int64_t>(encoder_channels));
  cfg.set("enhancer.bottleneck_channels", static_cast<int64_t>(bottleneck_channels));
  cfg.set("enhancer.conv_channels", static_cast<int64_t>(conv_channels));
  cfg.set("enhancer.blocks", static_cast<int64_t>(n_blocks_per_repeat));
  cfg.set("enhancer.repeats", static_cast<int64_t>(n_repeats));
  cfg.set("enhancer.causal", causal);
  cfg.set("enhancer.norm_eps", norm_eps);
}

EnhancerConfig EnhancerConfig::from_config(const KvConfig& cfg) {
  EnhancerConfig c;
  c.kernel_len = static_cast<int>(cfg.get_int("enhancer.kernel_len", c.kernel_len));
  c.stride = static_cast<int>(cfg.get_int("enhancer.stride", c.stride));
  c.encoder_channels = static_cast<int>(cfg.get_int("enhancer.encoder_channels", c.encoder_channels));
  c.bottleneck_channels =
      static_cast<int>(cfg.get_int("enhancer.bottleneck_channels", c.bottleneck_channels));
  c.conv_channels = static_cast<int>(cfg.get_int("enhancer.conv_channels", c.conv_channels));
  c.n_blocks_per_repeat = static_cast<int>(cfg.get_int("enhancer.blocks", c.n_blocks_per_repeat));
  c.n_repeats = static_cast<int>(cfg.get_int("enhancer.repeats", c.n_repeats));
  c.causal = cfg.get_bool("enhancer.causal", c.causal);
  c.norm_eps = cfg.get_double("enhancer.norm_eps", c.norm_eps);
  c.validate();
  return c;
}

namespace {

constexpr int kConvKernel = 3;  // separator depthwise taps

std::string block_prefix(int r, int b) {
  return "separator.r" + std::to_string(r) + ".b" + std::to_string(b) + ".";
}

}  // namespace

Enhancer Enhancer::init(const EnhancerConfig& cfg, uint64_t seed) {
  cfg.validate();
  Enhancer e;
  e.cfg_ = cfg;
  Rng rng(seed);
  int n = cfg.encoder_channels, b = cfg.bottleneck_channels, h = cfg.conv_channels;
  int k = cfg.kernel_len;

  // Encoder and decoder are bias-free so silence maps to silence exactly.
  e.params_.add("encoder.w", init_he(rng, {k, n}, k));
  e.params_.add("separator.ln0.gamma", init_const({n}, 1.0));
  e.params_.add("separator.ln0.beta", init_zeros({n}));
  e.params_.add("separator.in.w", init_he(rng, {n, b}, n));
  for (int r = 0; r < cfg.n_repeats; ++r) {
    for (int bl = 0; bl < cfg.n_blocks_per_repeat; ++bl) {
      std::string p = block_prefix(r, bl);
      e.params_.add(p + "w1", init_he(rng, {b, h}, b));
      e.params_.add(p + "prelu1", init_const({1}, 0.25));
      e.params_.add(p + "norm1.gamma", init_const({h}, 1.0));
      e.params_.add(p + "norm1.beta", init_zeros({h}));
      e.params_.add(p + "dconv", init_he(rng, {kConvKernel, h}, kConvKernel));
      e.params_.add(p + "prelu2", init_const({1}, 0.25));
      e.params_.add(p + "norm2.gamma", init_const({h}, 1.0));
      e.params_.add(p + "norm2.beta", init_zeros({h}));
      e.params_.add(p + "w2", init_he(rng, {h, b}, h));
    }
  }
  e.params_.add("separator.out.prelu", init_const({1}, 0.25));
  // Small mask head so the initial mask sits near 0.5 with live gradients.
  e.params_.add("separator.out.w", init_normal(rng, {b, n}, 0.05));
  e.params_.add("decoder.w", init_he(rng, {n, k}, n));
  return e;
}

namespace {

using ParamNodeFn = std::function<Node*(const std::string&)>;

Node* norm_any(Graph& g, Node* x, Node* gamma, Node* beta, const EnhancerConfig& cfg) {
  return cfg.causal ? g.cln(x, gamma, beta, cfg.norm_eps) : g.gln(x, gamma, beta, cfg.norm_eps);
}

Node* encode_impl(Graph& g, Node* x, const EnhancerConfig& cfg, const ParamNodeFn& P) {
  Node* frames = g.unfold(x, cfg.kernel_len, cfg.stride, /*pad_tail=*/true);
  return g.relu(g.matmul(frames, P("encoder.w")));
}

Node* mask_impl(Graph& g, Node* repr, const EnhancerConfig& cfg, const ParamNodeFn& P) {
  Node* y = norm_any(g, repr, P("separator.ln0.gamma"), P("separator.ln0.beta"), cfg);
  Node* h = g.matmul(y, P("separator.in.w"));
  for (int r = 0; r < cfg.n_repeats; ++r) {
    for (int bl = 0; bl < cfg.n_blocks_per_repeat; ++bl) {
      std::string p = block_prefix(r, bl);
      int dilation = 1 << bl;
      Node* u = g.matmul(h, P(p + "w1"));
      u = g.prelu(u, P(p + "prelu1"));
      u = norm_any(g, u, P(p + "norm1.gamma"), P(p + "norm1.beta"), cfg);
      u = g.dwconv_time(u, P(p + "dconv"), dilation, cfg.causal);
      u = g.prelu(u, P(p + "prelu2"));
      u = norm_any(g, u, P(p + "norm2.gamma"), P(p + "norm2.beta"), cfg);
      h = g.add(h, g.matmul(u, P(p + "w2")));
    }
  }
  Node* pre = g.prelu(h, P("separator.out.prelu"));
  return g.sigmoid(g.matmul(pre, P("separator.out.w")));
}

Node* enhance_impl(Graph& g, Node* x, const EnhancerConfig& cfg, const ParamNodeFn& P) {
  int len = x->val.dim(0);
  Node* repr = encode_impl(g, x, cfg, P);
  Node* m = mask_impl(g, repr, cfg, P);
  Node* masked = g.mul(repr, m);
  Node* frames = g.matmul(masked, P("decoder.w"));
  return g.fold(frames, cfg.stride, len);
}

}  // namespace

Node* Enhancer::encode_node(Graph& g, Node* x) {
  return encode_impl(g, x, cfg_, [&](const std::string& name) { return g.param(params_.at(name)); });
}

Node* Enhancer::mask_node(Graph& g, Node* repr) {
  return mask_impl(g, repr, cfg_, [&](const std::string& name) { return g.param(params_.at(name)); });
}

Node* Enhancer::enhance_node(Graph& g, Node* x) {
  return enhance_impl(g, x, cfg_, [&](const std::string& name) { return g.param(params_.at(name)); });
}

Tensor Enhancer::encode(const Waveform& x) const {
  Graph g;
  return encode_impl(g, g.leaf(x), cfg_,
                     [&](const std::string& name) { return g.leaf(params_.at(name).value); })
      ->val;
}

Tensor Enhancer::mask(const Tensor& repr) const {
  Graph g;
  return mask_impl(g, g.leaf(repr), cfg_,
                   [&](const std::string& name) { return g.leaf(params_.at(name).value); })
      ->val;
}

Waveform Enhancer::enhance(const Waveform& x) const {
  x.validate("enhancer input");
  Graph g;
  Node* out = enhance_impl(g, g.leaf(x), cfg_,
                           [&](const std::string& name) { return g.leaf(params_.at(name).value); });
  Waveform w;
  w.sample_rate_hz = x.sample_rate_hz;
  w.samples = out->val.vec();
  return w;
}

void Enhancer::save(const std::string& path,
                    const std::map<std::string, std::string>& metadata) const {
  KvConfig cfg;
  cfg_.to_config(cfg);
  std::map<std::string, std::string> meta = metadata;
  meta["model_kind"] = "enhancer";
  save_checkpoint(path, params_, cfg, meta);
}

Enhancer Enhancer::load(const std::string& path) {
  CheckpointMeta meta = read_checkpoint_meta(path);
  auto kind = meta.metadata.find("model_kind");
  require(kind != meta.metadata.end() && kind->second == "enhancer", ErrorKind::BadData,
          "not an enhancer checkpoint: " + path);
  Enhancer e = Enhancer::init(EnhancerConfig::from_config(meta.config), 0);
  load_checkpoint(path, e.params_);
  return e;
}

int receptive_field_samples(const EnhancerConfig& cfg) {
  cfg.validate();
  // Each block with dilation 2^b reaches (kConvKernel-1)*2^b frames back;
  // summed over a repeat that is (k-1)*(2^B - 1) frames.
  int frames_back = cfg.n_repeats * (kConvKernel - 1) * ((1 << cfg.n_blocks_per_repeat) - 1);
  return cfg.kernel_len + frames_back * cfg.stride;
}

}  // namespace sekws
