// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/spotter.hpp"

#include <cmath>
#include <functional>

#include "core/checkpoint.hpp"
#include "core/errors.hpp"

namespace sekws {

void SpotterConfig::validate() const {
  features.validate();
  require(stem_channels > 0 && block2_channels > 0 && block3_channels > 0,
          ErrorKind::InvalidArgument, "spotter: channel counts must be positive");
  require(standardize_eps > 0.0, ErrorKind::InvalidArgument,
          "spotter: standardize_eps must be positive");
}

void SpotterConfig::to_config(KvConfig& cfg) const {
  cfg.set("spotter.mels", static_cast<int64_t>(features.n_mels));
  cfg.set("spotter.window", static_cast<int64_t>(features.window_len));
  cfg.set("spotter.hop", static_cast<int64_t>(features.hop));
  cfg.set("spotter.log_floor", features.log_floor);
  cfg.set("spotter.fmin_hz", features.fmin_hz);
  cfg.set("spotter.fmax_hz", features.fmax_hz);
  cfg.set("spotter.stem_channels", static_cast<int64_t>(stem_channels));
  cfg.set("spotter.block2_channels", static_cast<int64_t>(block2_channels));
  cfg.set("spotter.block3_channels", static_cast<int64_t>(block3_channels));
  cfg.set("spotter.standardize_eps", standardize_eps);
}

SpotterConfig SpotterConfig::from_config(const KvConfig& cfg) {
  SpotterConfig c;
  c.features.n_mels = static_cast<int>(cfg.get_int("spotter.mels", c.features.n_mels));
  c.features.window_len = static_cast<int>(cfg.get_int("spotter.window", c.features.window_len));
  c.features.hop = static_cast<int>(cfg.get_int("spotter.hop", c.features.hop));
  c.features.log_floor = cfg.get_double("spotter.log_floor", c.features.log_floor);
  c.features.fmin_hz = cfg.get_double("spotter.fmin_hz", c.features.fmin_hz);
  c.features.fmax_hz = cfg.get_double("spotter.fmax_hz", c.features.fmax_hz);
  c.stem_channels = static_cast<int>(cfg.get_int("spotter.stem_channels", c.stem_channels));
  c.block2_channels = static_cast<int>(cfg.get_int("spotter.block2_channels", c.block2_channels));
  c.block3_channels = static_cast<int>(cfg.get_int("spotter.block3_channels", c.block3_channels));
  c.standardize_eps = cfg.get_double("spotter.standardize_eps", c.standardize_eps);
  c.validate();
  return c;
}

Spotter Spotter::init(const SpotterConfig& cfg, uint64_t seed) {
  cfg.validate();
  Spotter s;
  s.cfg_ = cfg;
  Rng rng(seed);
  int c1 = cfg.stem_channels, c2 = cfg.block2_channels, c3 = cfg.block3_channels;

  s.params_.add("stem.w", init_he(rng, {c1, 1, 9}, 9));
  s.params_.add("stem.b", init_zeros({c1}));

  s.params_.add("block1.conv1.w", init_he(rng, {c1, c1, 9}, c1 * 9));
  s.params_.add("block1.conv1.b", init_zeros({c1}));
  s.params_.add("block1.conv2.w", init_he(rng, {c1, c1, 9}, c1 * 9));
  s.params_.add("block1.conv2.b", init_zeros({c1}));

  s.params_.add("block2.conv1.w", init_he(rng, {c2, c1, 9}, c1 * 9));
  s.params_.add("block2.conv1.b", init_zeros({c2}));
  s.params_.add("block2.conv2.w", init_he(rng, {c2, c2, 9}, c2 * 9));
  s.params_.add("block2.conv2.b", init_zeros({c2}));
  s.params_.add("block2.proj.w", init_he(rng, {c2, c1, 1}, c1));
  s.params_.add("block2.proj.b", init_zeros({c2}));

  s.params_.add("block3.conv1.w", init_he(rng, {c3, c2, 9}, c2 * 9));
  s.params_.add("block3.conv1.b", init_zeros({c3}));
  s.params_.add("block3.conv2.w", init_he(rng, {c3, c3, 9}, c3 * 9));
  s.params_.add("block3.conv2.b", init_zeros({c3}));
  s.params_.add("block3.proj.w", init_he(rng, {c3, c2, 1}, c2));
  s.params_.add("block3.proj.b", init_zeros({c3}));

  // Zero head: fresh models output exactly 1/12 per class.
  s.params_.add("head.w", init_zeros({c3, kNumClasses}));
  s.params_.add("head.b", init_zeros({kNumClasses}));
  return s;
}

namespace {

using ParamNodeFn = std::function<Node*(const std::string&)>;

Node* conv_bias(Graph& g, Node* x, Node* w, Node* b, int stride, int pad) {
  return g.add_channel_bias(g.conv2d(x, w, stride, stride, pad, pad), b);
}

Node* residual_block(Graph& g, Node* x, const std::string& prefix, int stride, bool project,
                     const ParamNodeFn& P) {
  Node* u = g.relu(conv_bias(g, x, P(prefix + "conv1.w"), P(prefix + "conv1.b"), stride, 1));
  u = conv_bias(g, u, P(prefix + "conv2.w"), P(prefix + "conv2.b"), 1, 1);
  Node* skip = x;
  if (project) {
    skip = g.add_channel_bias(g.conv2d(x, P(prefix + "proj.w"), stride, stride, 0, 0),
                              P(prefix + "proj.b"));
  }
  return g.relu(g.add(skip, u));
}

Node* logits_impl(Graph& g, Node* wave, const SpotterConfig& cfg, int sample_rate_hz,
                  const ParamNodeFn& P) {
  Node* feat = logmel_node(g, wave, cfg.features, sample_rate_hz);
  feat = g.standardize(feat, cfg.standardize_eps);
  Node* x = g.reshape(feat, {1, feat->val.dim(0), feat->val.dim(1)});
  x = g.relu(conv_bias(g, x, P("stem.w"), P("stem.b"), 2, 1));
  x = residual_block(g, x, "block1.", 1, false, P);
  x = residual_block(g, x, "block2.", 2, true, P);
  x = residual_block(g, x, "block3.", 2, true, P);
  Node* pooled = g.gap(x);
  return g.add_row_bias(g.matmul(pooled, P("head.w")), P("head.b"));
}

}  // namespace

Node* Spotter::logits_node(Graph& g, Node* wave) {
  return logits_impl(g, wave, cfg_, kDefaultSampleRate,
                     [&](const std::string& name) { return g.param(params_.at(name)); });
}

std::vector<double> Spotter::classify(const Waveform& x) const {
  x.validate("spotter input");
  Graph g;
  Node* logits = logits_impl(g, g.leaf(x), cfg_, x.sample_rate_hz, [&](const std::string& name) {
    return g.leaf(params_.at(name).value);
  });
  const double* l = logits->val.data();
  double m = l[0];
  for (int i = 1; i < kNumClasses; ++i) m = std::max(m, l[i]);
  std::vector<double> probs(kNumClasses);
  double z = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    probs[static_cast<size_t>(i)] = std::exp(l[i] - m);
    z += probs[static_cast<size_t>(i)];
  }
  for (double& p : probs) p /= z;
  return probs;
}

void Spotter::save(const std::string& path,
                   const std::map<std::string, std::string>& metadata) const {
  KvConfig cfg;
  cfg_.to_config(cfg);
  std::map<std::string, std::string> meta = metadata;
  meta["model_kind"] = "spotter";
  save_checkpoint(path, params_, cfg, meta);
}

Spotter Spotter::load(const std::string& path) {
  CheckpointMeta meta = read_checkpoint_meta(path);
  auto kind = meta.metadata.find("model_kind");
  require(kind != meta.metadata.end() && kind->second == "spotter", ErrorKind::BadData,
          "not a spotter checkpoint: " + path);
  Spotter s = Spotter::init(SpotterConfig::from_config(meta.config), 0);
  load_checkpoint(path, s.params_);
  return s;
}

int argmax_class(const std::vector<double>& probs) {
  require(!probs.empty(), ErrorKind::InvalidArgument, "argmax_class: empty distribution");
  int best = 0;
  for (size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

double accuracy(const Spotter& model, const std::vector<EvalExample>& examples) {
  require(!examples.empty(), ErrorKind::InvalidArgument, "accuracy: empty dataset");
  int64_t correct = 0;
  for (const EvalExample& ex : examples) {
    if (argmax_class(model.classify(*ex.audio)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace sekws
