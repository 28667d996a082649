// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/switchnet.hpp"

#include <cmath>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/errors.hpp"

namespace sekws {

namespace {

constexpr const char* kModelKind = "switch";

std::string grid_to_string(const AlphaGrid& grid) {
  std::ostringstream ss;
  ss.precision(17);
  for (size_t i = 0; i < grid.values.size(); ++i) {
    if (i) ss << ",";
    ss << grid.values[i];
  }
  return ss.str();
}

AlphaGrid grid_from_string(const std::string& s) {
  AlphaGrid g;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      g.values.push_back(std::stod(tok));
    } catch (...) {
      fail(ErrorKind::Config, "switch: bad alpha grid entry: " + tok);
    }
  }
  g.validate();
  return g;
}

using ParamNodeFn = std::function<Node*(const std::string&)>;

// One LSTM direction over precomputed input projections. xw is {T,4H} holding
// x_t@Wx + b for every step; gate order is [input, forget, cell, output].
// Returns the hidden states stacked in forward time order.
Node* lstm_direction(Graph& g, Node* xw, Node* wh, int hidden, bool reverse) {
  int t_len = xw->val.dim(0);
  Node* h = g.leaf(Tensor({1, hidden}));
  Node* c = g.leaf(Tensor({1, hidden}));
  std::vector<Node*> states(static_cast<size_t>(t_len));
  for (int step = 0; step < t_len; ++step) {
    int t = reverse ? t_len - 1 - step : step;
    Node* gates = g.add(g.row_slice(xw, t), g.matmul(h, wh));
    Node* gi = g.sigmoid(g.col_slice(gates, 0, hidden));
    Node* gf = g.sigmoid(g.col_slice(gates, hidden, hidden));
    Node* gc = g.tanh_op(g.col_slice(gates, 2 * hidden, hidden));
    Node* go = g.sigmoid(g.col_slice(gates, 3 * hidden, hidden));
    c = g.add(g.mul(gf, c), g.mul(gi, gc));
    h = g.mul(go, g.tanh_op(c));
    states[static_cast<size_t>(t)] = h;
  }
  return g.stack_rows(states);
}

Node* alpha_impl(Graph& g, const Waveform& original, const Waveform& enhanced,
                 const SwitchConfig& cfg, const ParamNodeFn& P) {
  original.validate("switch original input");
  enhanced.validate("switch enhanced input");
  require(original.size() == enhanced.size(), ErrorKind::Shape,
          "switch: original and enhanced lengths differ");

  FeatureConfig fc = cfg.feature_config();
  Node* fo = g.standardize(logmel_node(g, g.leaf(original), fc, original.sample_rate_hz),
                           cfg.standardize_eps);
  Node* fe = g.standardize(logmel_node(g, g.leaf(enhanced), fc, enhanced.sample_rate_hz),
                           cfg.standardize_eps);
  Node* x = g.concat_cols(fo, fe);  // {T, 2*n_mels}

  for (int l = 0; l < cfg.n_layers; ++l) {
    std::string base = "lstm" + std::to_string(l) + ".";
    Node* xw_f = g.add_row_bias(g.matmul(x, P(base + "fw.wx")), P(base + "fw.b"));
    Node* xw_b = g.add_row_bias(g.matmul(x, P(base + "bw.wx")), P(base + "bw.b"));
    Node* hf = lstm_direction(g, xw_f, P(base + "fw.wh"), cfg.hidden, false);
    Node* hb = lstm_direction(g, xw_b, P(base + "bw.wh"), cfg.hidden, true);
    x = g.concat_cols(hf, hb);  // {T, 2*hidden}
  }

  // Attention pooling: learned query over tanh-projected keys.
  Node* keys = g.tanh_op(g.add_row_bias(g.matmul(x, P("attn.wk")), P("attn.bk")));
  Node* scores = g.matmul(keys, P("attn.q"));  // {T,1}
  Node* weights = g.softmax_time(scores);
  Node* pooled = g.reshape(g.matmul(g.transpose2d(x), weights), {1, 2 * cfg.hidden});

  Node* h1 = g.relu(g.add_row_bias(g.matmul(pooled, P("fc1.w")), P("fc1.b")));
  Node* h2 = g.relu(g.add_row_bias(g.matmul(h1, P("fc2.w")), P("fc2.b")));
  Node* logits = g.add_row_bias(g.matmul(h2, P("head.w")), P("head.b"));
  Node* probs = g.softmax_row(logits);  // {1,G}

  Tensor grid_col({static_cast<int>(cfg.grid.values.size()), 1});
  for (size_t i = 0; i < cfg.grid.values.size(); ++i) grid_col[static_cast<int64_t>(i)] = cfg.grid.values[i];
  // Expected alpha under the head distribution: convex, so inside the grid up
  // to rounding. The clamp pins the [0,1] contract exactly; interior values
  // (every untrained or unsaturated prediction) keep their gradient.
  Node* alpha = g.reshape(g.matmul(probs, g.leaf(std::move(grid_col))), {1});
  return g.clamp(alpha, 0.0, 1.0);
}

}  // namespace

void SwitchConfig::validate() const {
  require(n_mels > 0 && window_len > 0 && hop > 0, ErrorKind::InvalidArgument,
          "switch: feature geometry must be positive");
  require(hidden > 0 && n_layers > 0 && attn_dim > 0 && fc_dim > 0, ErrorKind::InvalidArgument,
          "switch: model widths must be positive");
  require(log_floor > 0.0 && standardize_eps > 0.0, ErrorKind::InvalidArgument,
          "switch: eps values must be positive");
  require(fmin_hz >= 0.0 && fmax_hz > fmin_hz, ErrorKind::InvalidArgument,
          "switch: bad mel frequency range");
  grid.validate();
}

FeatureConfig SwitchConfig::feature_config() const {
  FeatureConfig fc;
  fc.n_mels = n_mels;
  fc.window_len = window_len;
  fc.hop = hop;
  fc.log_floor = log_floor;
  fc.fmin_hz = fmin_hz;
  fc.fmax_hz = fmax_hz;
  return fc;
}

void SwitchConfig::to_config(KvConfig& cfg) const {
  cfg.set("switch.n_mels", static_cast<int64_t>(n_mels));
  cfg.set("switch.window_len", static_cast<int64_t>(window_len));
  cfg.set("switch.hop", static_cast<int64_t>(hop));
  cfg.set("switch.hidden", static_cast<int64_t>(hidden));
  cfg.set("switch.n_layers", static_cast<int64_t>(n_layers));
  cfg.set("switch.attn_dim", static_cast<int64_t>(attn_dim));
  cfg.set("switch.fc_dim", static_cast<int64_t>(fc_dim));
  cfg.set("switch.grid", grid_to_string(grid));
  cfg.set("switch.log_floor", log_floor);
  cfg.set("switch.fmin_hz", fmin_hz);
  cfg.set("switch.fmax_hz", fmax_hz);
  cfg.set("switch.standardize_eps", standardize_eps);
}

SwitchConfig SwitchConfig::from_config(const KvConfig& cfg) {
  SwitchConfig out;
  out.n_mels = static_cast<int>(cfg.get_int("switch.n_mels", out.n_mels));
  out.window_len = static_cast<int>(cfg.get_int("switch.window_len", out.window_len));
  out.hop = static_cast<int>(cfg.get_int("switch.hop", out.hop));
  out.hidden = static_cast<int>(cfg.get_int("switch.hidden", out.hidden));
  out.n_layers = static_cast<int>(cfg.get_int("switch.n_layers", out.n_layers));
  out.attn_dim = static_cast<int>(cfg.get_int("switch.attn_dim", out.attn_dim));
  out.fc_dim = static_cast<int>(cfg.get_int("switch.fc_dim", out.fc_dim));
  if (cfg.has("switch.grid")) out.grid = grid_from_string(cfg.get_str("switch.grid"));
  out.log_floor = cfg.get_double("switch.log_floor", out.log_floor);
  out.fmin_hz = cfg.get_double("switch.fmin_hz", out.fmin_hz);
  out.fmax_hz = cfg.get_double("switch.fmax_hz", out.fmax_hz);
  out.standardize_eps = cfg.get_double("switch.standardize_eps", out.standardize_eps);
  out.validate();
  return out;
}

SwitchNet SwitchNet::init(const SwitchConfig& cfg, uint64_t seed) {
  cfg.validate();
  SwitchNet net;
  net.cfg_ = cfg;
  Rng rng(seed);
  const int h = cfg.hidden;
  int in_dim = 2 * cfg.n_mels;
  for (int l = 0; l < cfg.n_layers; ++l) {
    std::string base = "lstm" + std::to_string(l) + ".";
    for (const char* dir : {"fw.", "bw."}) {
      Rng stream = rng.fork(static_cast<uint64_t>(l), dir[0] == 'f' ? 1 : 2);
      net.params_.add(base + dir + "wx", init_he(stream, {in_dim, 4 * h}, in_dim));
      net.params_.add(base + dir + "wh", init_he(stream, {h, 4 * h}, h));
      // Forget-gate bias starts at 1 so early memory carries through.
      Tensor b({4 * h});
      for (int j = h; j < 2 * h; ++j) b[j] = 1.0;
      net.params_.add(base + dir + "b", std::move(b));
    }
    in_dim = 2 * h;
  }
  Rng astream = rng.fork(100);
  net.params_.add("attn.wk", init_he(astream, {2 * h, cfg.attn_dim}, 2 * h));
  net.params_.add("attn.bk", init_zeros({cfg.attn_dim}));
  net.params_.add("attn.q", init_normal(astream, {cfg.attn_dim, 1}, 0.2));
  Rng fstream = rng.fork(101);
  net.params_.add("fc1.w", init_he(fstream, {2 * h, cfg.fc_dim}, 2 * h));
  net.params_.add("fc1.b", init_zeros({cfg.fc_dim}));
  net.params_.add("fc2.w", init_he(fstream, {cfg.fc_dim, cfg.fc_dim}, cfg.fc_dim));
  net.params_.add("fc2.b", init_zeros({cfg.fc_dim}));
  // Zero head: the untrained predictor emits the grid mean (0.5 by default).
  int grid_n = static_cast<int>(cfg.grid.values.size());
  net.params_.add("head.w", init_zeros({cfg.fc_dim, grid_n}));
  net.params_.add("head.b", init_zeros({grid_n}));
  return net;
}

Node* SwitchNet::alpha_node(Graph& g, const Waveform& original, const Waveform& enhanced) {
  return alpha_impl(g, original, enhanced, cfg_,
                    [&](const std::string& name) { return g.param(params_.at(name)); });
}

double SwitchNet::predict_alpha(const Waveform& original, const Waveform& enhanced) const {
  Graph g;
  Node* a = alpha_impl(g, original, enhanced, cfg_, [&](const std::string& name) {
    return g.leaf(params_.at(name).value);
  });
  return a->val[0];
}

void SwitchNet::save(const std::string& path,
                     const std::map<std::string, std::string>& metadata) const {
  KvConfig cfg;
  cfg.set("model.kind", kModelKind);
  cfg_.to_config(cfg);
  save_checkpoint(path, params_, cfg, metadata);
}

SwitchNet SwitchNet::load(const std::string& path) {
  CheckpointMeta meta = read_checkpoint_meta(path);
  require(meta.config.get_str("model.kind", "") == kModelKind, ErrorKind::BadData,
          "not a switch checkpoint: " + path);
  SwitchNet net = init(SwitchConfig::from_config(meta.config), 0);
  load_checkpoint(path, net.params_);
  return net;
}

}  // namespace sekws
