// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "core/errors.hpp"
#include "core/objectives.hpp"
#include "core/optim.hpp"

namespace sekws {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kShuffleTag = 0x73687566ULL;  // per-epoch order stream
constexpr uint64_t kAugmentTag = 0x6175676dULL;  // per-epoch mixing stream

std::vector<Tensor> snapshot_values(const ParamSet& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) out.push_back(params[i].value);
  return out;
}

void restore_values(ParamSet& params, const std::vector<Tensor>& snap) {
  require(snap.size() == params.size(), ErrorKind::Internal, "param snapshot size drifted");
  for (size_t i = 0; i < params.size(); ++i) params[i].value = snap[i];
}

void require_finite_loss(double v, const char* where) {
  require(std::isfinite(v), ErrorKind::Numeric,
          std::string(where) + ": non-finite training loss; aborting");
}

// Shared per-run artifact plumbing. An empty run_dir disables persistence.
struct RunArtifacts {
  std::string root;
  bool enabled() const { return !root.empty(); }

  void prepare(const TrainConfig& cfg, const std::string& regime) const {
    if (!enabled()) return;
    fs::create_directories(fs::path(root) / "checkpoints");
    KvConfig kv;
    cfg.to_config(kv);
    kv.set("run.regime", regime);
    kv.save((fs::path(root) / "config.cfg").string());
  }
  std::string checkpoint(const std::string& name) const {
    return (fs::path(root) / "checkpoints" / name).string();
  }
  void finish(const std::vector<EpochLog>& logs) const {
    if (!enabled()) return;
    save_logs_csv((fs::path(root) / "logs.csv").string(), logs);
  }
};

// Shuffled train-split order for one epoch.
std::vector<const LabeledUtterance*> epoch_order(const DataBundle& data, const Rng& run_rng,
                                                 int epoch) {
  auto items = data.split(Split::Train);
  require(!items.empty(), ErrorKind::InvalidArgument, "training split is empty");
  Rng order_rng = run_rng.fork(static_cast<uint64_t>(epoch), kShuffleTag);
  order_rng.shuffle(items);
  return items;
}

int64_t steps_per_epoch(size_t n_items, int batch_size) {
  return static_cast<int64_t>((n_items + static_cast<size_t>(batch_size) - 1) /
                              static_cast<size_t>(batch_size));
}

double mean_sdri_db(const Enhancer& model, const std::vector<NoisyEvalItem>& items) {
  require(!items.empty(), ErrorKind::InvalidArgument, "validation set is empty");
  double acc = 0.0;
  for (const auto& it : items) {
    Waveform est = model.enhance(it.mixture);
    double base = clamp_sdr(sdr_db(it.clean, it.mixture));
    double now = clamp_sdr(sdr_db(it.clean, est));
    acc += now - base;
  }
  return acc / static_cast<double>(items.size());
}

double clean_val_accuracy(const Spotter& model, const DataBundle& data) {
  auto val = data.split(Split::Validation);
  require(!val.empty(), ErrorKind::InvalidArgument, "validation split is empty");
  std::vector<EvalExample> exs;
  exs.reserve(val.size());
  for (const auto* u : val) exs.push_back({&u->audio, u->label});
  return accuracy(model, exs);
}

double noisy_val_accuracy(const Spotter& model, const std::vector<NoisyEvalItem>& items,
                          const Enhancer* frontend) {
  require(!items.empty(), ErrorKind::InvalidArgument, "noisy validation set is empty");
  int correct = 0;
  for (const auto& it : items) {
    Waveform x = frontend != nullptr ? frontend->enhance(it.mixture) : it.mixture;
    if (argmax_class(model.classify(x)) == it.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

}  // namespace

const char* loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::SdrOnly:
      return "sdr_only";
    case LossMode::CeOnly:
      return "ce_only";
    case LossMode::Combined:
      return "combined";
  }
  fail(ErrorKind::Internal, "unknown loss mode");
}

LossMode loss_mode_from_name(const std::string& name) {
  if (name == "sdr_only") return LossMode::SdrOnly;
  if (name == "ce_only") return LossMode::CeOnly;
  if (name == "combined") return LossMode::Combined;
  fail(ErrorKind::Config, "unknown loss mode: " + name);
}

void TrainConfig::validate() const {
  require(epochs > 0, ErrorKind::InvalidArgument, "train: epochs must be positive");
  require(warmup_epochs >= 0 && warmup_epochs < epochs, ErrorKind::InvalidArgument,
          "train: need 0 <= warmup_epochs < epochs");
  require(peak_lr >= 0.0, ErrorKind::InvalidArgument, "train: negative peak_lr");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::InvalidArgument,
          "train: momentum must lie in [0,1)");
  require(weight_decay >= 0.0, ErrorKind::InvalidArgument, "train: negative weight_decay");
  require(batch_size > 0, ErrorKind::InvalidArgument, "train: batch_size must be positive");
  require(beta >= 0.0, ErrorKind::InvalidArgument, "train: negative beta");
  require(snr_high_db >= snr_low_db, ErrorKind::InvalidArgument, "train: inverted snr range");
  require(augment_probability >= 0.0 && augment_probability <= 1.0, ErrorKind::InvalidArgument,
          "train: augment_probability must lie in [0,1]");
}

void TrainConfig::to_config(KvConfig& cfg) const {
  cfg.set("train.epochs", static_cast<int64_t>(epochs));
  cfg.set("train.peak_lr", peak_lr);
  cfg.set("train.warmup_epochs", static_cast<int64_t>(warmup_epochs));
  cfg.set("train.momentum", momentum);
  cfg.set("train.weight_decay", weight_decay);
  cfg.set("train.batch_size", static_cast<int64_t>(batch_size));
  cfg.set("train.seed", static_cast<int64_t>(seed));
  cfg.set("train.beta", beta);
  cfg.set("train.freeze_frontend", freeze_frontend);
  cfg.set("train.freeze_backend", freeze_backend);
  cfg.set("train.loss_mode", loss_mode_name(loss_mode));
  cfg.set("train.snr_low_db", snr_low_db);
  cfg.set("train.snr_high_db", snr_high_db);
  cfg.set("train.augment_probability", augment_probability);
}

TrainConfig TrainConfig::from_config(const KvConfig& cfg) {
  TrainConfig out;
  out.epochs = static_cast<int>(cfg.get_int("train.epochs", out.epochs));
  out.peak_lr = cfg.get_double("train.peak_lr", out.peak_lr);
  out.warmup_epochs = static_cast<int>(cfg.get_int("train.warmup_epochs", out.warmup_epochs));
  out.momentum = cfg.get_double("train.momentum", out.momentum);
  out.weight_decay = cfg.get_double("train.weight_decay", out.weight_decay);
  out.batch_size = static_cast<int>(cfg.get_int("train.batch_size", out.batch_size));
  out.seed = static_cast<uint64_t>(cfg.get_int("train.seed", static_cast<int64_t>(out.seed)));
  out.beta = cfg.get_double("train.beta", out.beta);
  out.freeze_frontend = cfg.get_bool("train.freeze_frontend", out.freeze_frontend);
  out.freeze_backend = cfg.get_bool("train.freeze_backend", out.freeze_backend);
  out.loss_mode = loss_mode_from_name(cfg.get_str("train.loss_mode", loss_mode_name(out.loss_mode)));
  out.snr_low_db = cfg.get_double("train.snr_low_db", out.snr_low_db);
  out.snr_high_db = cfg.get_double("train.snr_high_db", out.snr_high_db);
  out.augment_probability = cfg.get_double("train.augment_probability", out.augment_probability);
  out.validate();
  return out;
}

DataBundle make_data_bundle(std::vector<LabeledUtterance> corpus, NoisePool noise,
                            double eval_snr_low_db, double eval_snr_high_db, uint64_t eval_seed) {
  DataBundle b;
  b.corpus = std::move(corpus);
  b.noise = std::move(noise);
  b.noisy_val = build_frozen_noisy_set(b.corpus, Split::Validation, b.noise, eval_snr_low_db,
                                       eval_snr_high_db, eval_seed);
  b.noisy_test = build_frozen_noisy_set(b.corpus, Split::Test, b.noise, eval_snr_low_db,
                                        eval_snr_high_db, eval_seed + 1);
  return b;
}

Node* sdr_loss_node(Graph& g, const Waveform& reference, Node* estimate) {
  require(estimate != nullptr, ErrorKind::InvalidArgument, "sdr_loss_node: null estimate");
  require(static_cast<size_t>(estimate->val.size()) == reference.size(), ErrorKind::Shape,
          "sdr_loss_node: reference/estimate length mismatch");
  double s2 = 0.0;
  for (double s : reference.samples) s2 += s * s;
  require(s2 > 0.0, ErrorKind::Degenerate, "sdr_loss_node: zero reference");

  Node* err = g.sub(estimate, g.leaf(reference));
  Node* e2 = g.sum_squares(err);
  // -SDR = (10/ln10) * (ln e2 - ln s2); the clamp realizes the +/-60 dB cap
  // (e2 within [s2*1e-6, s2*1e6]) and zeroes the gradient beyond it.
  const double k = 10.0 / std::log(10.0);
  Node* capped = g.clamp(e2, s2 * 1e-6, s2 * 1e6);
  return g.add_const(g.scale(g.ln(capped), k), -k * std::log(s2));
}

TrainSummary train_se(Enhancer& model, const DataBundle& data, const TrainConfig& cfg,
                      const std::string& run_dir) {
  cfg.validate();
  require(!data.noise.empty(), ErrorKind::InvalidArgument, "train_se: empty noise pool");
  RunArtifacts art{run_dir};
  art.prepare(cfg, "se");

  Rng run_rng(cfg.seed);
  const auto train_n = data.split(Split::Train).size();
  const int64_t spe = steps_per_epoch(train_n, cfg.batch_size);
  const int64_t total_steps = spe * cfg.epochs;
  const int64_t warmup_steps = spe * cfg.warmup_epochs;

  AugmentPolicy policy;
  policy.snr_low_db = cfg.snr_low_db;
  policy.snr_high_db = cfg.snr_high_db;
  policy.augment_probability = 1.0;  // the SDR loss needs a mixture every time

  TrainSummary sum;
  sum.best_metric = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> best;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = epoch_order(data, run_rng, epoch);
    Rng mix_rng = run_rng.fork(static_cast<uint64_t>(epoch), kAugmentTag);
    double epoch_loss = 0.0;
    double lr_last = 0.0;
    for (size_t i = 0; i < order.size();) {
      size_t batch_end = std::min(order.size(), i + static_cast<size_t>(cfg.batch_size));
      double inv = 1.0 / static_cast<double>(batch_end - i);
      model.params().zero_grads();
      for (; i < batch_end; ++i) {
        AugmentResult mix = augment(*order[i], data.noise, Split::Train, policy, mix_rng);
        Graph g;
        Node* est = model.enhance_node(g, g.leaf(mix.audio));
        Node* loss = sdr_loss_node(g, order[i]->audio, est);
        require_finite_loss(loss->val[0], "train_se");
        epoch_loss += loss->val[0];
        g.backward(loss);
        g.add_param_grads(inv);
      }
      lr_last = lr_schedule(step, total_steps, warmup_steps, cfg.peak_lr);
      sgd_step(model.params(), lr_last, cfg.momentum, cfg.weight_decay);
      ++step;
    }
    double metric = mean_sdri_db(model, data.noisy_val);
    sum.logs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), metric, lr_last});
    if (metric > sum.best_metric) {
      sum.best_metric = metric;
      sum.best_epoch = epoch;
      best = snapshot_values(model.params());
      if (art.enabled()) model.save(art.checkpoint("best.ckpt"), {{"epoch", std::to_string(epoch)}});
    }
  }
  if (art.enabled()) model.save(art.checkpoint("final.ckpt"), {{"epoch", std::to_string(cfg.epochs - 1)}});
  if (!best.empty()) restore_values(model.params(), best);
  art.finish(sum.logs);
  return sum;
}

TrainSummary train_kws(Spotter& model, const DataBundle& data, const TrainConfig& cfg,
                       bool noisy_condition, const std::string& run_dir) {
  cfg.validate();
  if (noisy_condition) {
    require(!data.noise.empty(), ErrorKind::InvalidArgument, "train_kws: empty noise pool");
  }
  RunArtifacts art{run_dir};
  art.prepare(cfg, noisy_condition ? "kws_noisy" : "kws_clean");

  Rng run_rng(cfg.seed);
  const auto train_n = data.split(Split::Train).size();
  const int64_t spe = steps_per_epoch(train_n, cfg.batch_size);
  const int64_t total_steps = spe * cfg.epochs;
  const int64_t warmup_steps = spe * cfg.warmup_epochs;

  AugmentPolicy policy;
  policy.snr_low_db = cfg.snr_low_db;
  policy.snr_high_db = cfg.snr_high_db;
  policy.augment_probability = cfg.augment_probability;

  TrainSummary sum;
  sum.best_metric = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> best;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = epoch_order(data, run_rng, epoch);
    Rng mix_rng = run_rng.fork(static_cast<uint64_t>(epoch), kAugmentTag);
    double epoch_loss = 0.0;
    double lr_last = 0.0;
    for (size_t i = 0; i < order.size();) {
      size_t batch_end = std::min(order.size(), i + static_cast<size_t>(cfg.batch_size));
      double inv = 1.0 / static_cast<double>(batch_end - i);
      model.params().zero_grads();
      for (; i < batch_end; ++i) {
        // The clean condition never touches the mixer, by contract.
        const Waveform* x = &order[i]->audio;
        AugmentResult mixed;
        if (noisy_condition) {
          mixed = augment(*order[i], data.noise, Split::Train, policy, mix_rng);
          x = &mixed.audio;
        }
        Graph g;
        Node* loss = g.ce_from_logits(model.logits_node(g, g.leaf(*x)), order[i]->label);
        require_finite_loss(loss->val[0], "train_kws");
        epoch_loss += loss->val[0];
        g.backward(loss);
        g.add_param_grads(inv);
      }
      lr_last = lr_schedule(step, total_steps, warmup_steps, cfg.peak_lr);
      sgd_step(model.params(), lr_last, cfg.momentum, cfg.weight_decay);
      ++step;
    }
    double metric = noisy_condition ? noisy_val_accuracy(model, data.noisy_val, nullptr)
                                    : clean_val_accuracy(model, data);
    sum.logs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), metric, lr_last});
    if (metric > sum.best_metric) {
      sum.best_metric = metric;
      sum.best_epoch = epoch;
      best = snapshot_values(model.params());
      if (art.enabled()) model.save(art.checkpoint("best.ckpt"), {{"epoch", std::to_string(epoch)}});
    }
  }
  if (art.enabled()) model.save(art.checkpoint("final.ckpt"), {{"epoch", std::to_string(cfg.epochs - 1)}});
  if (!best.empty()) restore_values(model.params(), best);
  art.finish(sum.logs);
  return sum;
}

TrainSummary train_joint(Enhancer& frontend, Spotter& backend, const DataBundle& data,
                         const TrainConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  require(!(cfg.freeze_frontend && cfg.freeze_backend), ErrorKind::InvalidArgument,
          "train_joint: both sides frozen leaves nothing to train");
  require(!data.noise.empty(), ErrorKind::InvalidArgument, "train_joint: empty noise pool");
  RunArtifacts art{run_dir};
  art.prepare(cfg, "joint");

  frontend.params().set_frozen_all(cfg.freeze_frontend);
  backend.params().set_frozen_all(cfg.freeze_backend);

  Rng run_rng(cfg.seed);
  const auto train_n = data.split(Split::Train).size();
  const int64_t spe = steps_per_epoch(train_n, cfg.batch_size);
  const int64_t total_steps = spe * cfg.epochs;
  const int64_t warmup_steps = spe * cfg.warmup_epochs;

  AugmentPolicy policy;
  policy.snr_low_db = cfg.snr_low_db;
  policy.snr_high_db = cfg.snr_high_db;
  policy.augment_probability = cfg.augment_probability;

  // With beta = 0 the SDR branch is skipped outright, which keeps combined
  // mode bit-identical to ce_only under one seed.
  const bool sdr_term = cfg.loss_mode == LossMode::SdrOnly ||
                        (cfg.loss_mode == LossMode::Combined && cfg.beta > 0.0);
  const bool ce_term = cfg.loss_mode != LossMode::SdrOnly;

  TrainSummary sum;
  sum.best_metric = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_front, best_back;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = epoch_order(data, run_rng, epoch);
    Rng mix_rng = run_rng.fork(static_cast<uint64_t>(epoch), kAugmentTag);
    double epoch_loss = 0.0;
    double lr_last = 0.0;
    for (size_t i = 0; i < order.size();) {
      size_t batch_end = std::min(order.size(), i + static_cast<size_t>(cfg.batch_size));
      double inv = 1.0 / static_cast<double>(batch_end - i);
      frontend.params().zero_grads();
      backend.params().zero_grads();
      for (; i < batch_end; ++i) {
        AugmentResult mixed = augment(*order[i], data.noise, Split::Train, policy, mix_rng);
        Graph g;
        Node* enhanced = frontend.enhance_node(g, g.leaf(mixed.audio));
        Node* loss = nullptr;
        if (ce_term) {
          loss = g.ce_from_logits(backend.logits_node(g, enhanced), order[i]->label);
        }
        if (sdr_term) {
          Node* sdr = sdr_loss_node(g, order[i]->audio, enhanced);
          double w = cfg.loss_mode == LossMode::SdrOnly ? 1.0 : cfg.beta;
          Node* weighted = g.scale(sdr, w);
          loss = loss == nullptr ? weighted : g.add(loss, weighted);
        }
        require_finite_loss(loss->val[0], "train_joint");
        epoch_loss += loss->val[0];
        g.backward(loss);
        g.add_param_grads(inv);
      }
      lr_last = lr_schedule(step, total_steps, warmup_steps, cfg.peak_lr);
      sgd_step(frontend.params(), lr_last, cfg.momentum, cfg.weight_decay);
      sgd_step(backend.params(), lr_last, cfg.momentum, cfg.weight_decay);
      ++step;
    }
    double metric = noisy_val_accuracy(backend, data.noisy_val, &frontend);
    sum.logs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), metric, lr_last});
    if (metric > sum.best_metric) {
      sum.best_metric = metric;
      sum.best_epoch = epoch;
      best_front = snapshot_values(frontend.params());
      best_back = snapshot_values(backend.params());
      if (art.enabled()) {
        frontend.save(art.checkpoint("best_frontend.ckpt"), {{"epoch", std::to_string(epoch)}});
        backend.save(art.checkpoint("best_backend.ckpt"), {{"epoch", std::to_string(epoch)}});
      }
    }
  }
  if (art.enabled()) {
    frontend.save(art.checkpoint("final_frontend.ckpt"), {{"epoch", std::to_string(cfg.epochs - 1)}});
    backend.save(art.checkpoint("final_backend.ckpt"), {{"epoch", std::to_string(cfg.epochs - 1)}});
  }
  if (!best_front.empty()) {
    restore_values(frontend.params(), best_front);
    restore_values(backend.params(), best_back);
  }
  art.finish(sum.logs);
  return sum;
}

namespace {

struct SwitchItem {
  Waveform input;     // clean utterance or mixture
  Waveform enhanced;  // frozen-frontend output, precomputed
  int label = 0;
};

// Fixed example set: the mixing decision is drawn once, so the frozen
// frontend's outputs can be cached across epochs.
std::vector<SwitchItem> build_switch_items(const std::vector<const LabeledUtterance*>& utts,
                                           const DataBundle& data, const Enhancer& frontend,
                                           const AugmentPolicy& policy, Split noise_split,
                                           Rng& rng) {
  std::vector<SwitchItem> items;
  items.reserve(utts.size());
  for (const auto* u : utts) {
    AugmentResult mixed = augment(*u, data.noise, noise_split, policy, rng);
    SwitchItem it;
    it.input = std::move(mixed.audio);
    it.enhanced = frontend.enhance(it.input);
    it.label = u->label;
    items.push_back(std::move(it));
  }
  return items;
}

void require_all_frozen(const ParamSet& params, const char* what) {
  for (size_t i = 0; i < params.size(); ++i) {
    require(params[i].frozen, ErrorKind::InvalidArgument,
            std::string("train_switch: ") + what + " must be fully frozen");
  }
}

}  // namespace

TrainSummary train_switch(SwitchNet& model, Enhancer& frontend, Spotter& backend,
                          const DataBundle& data, const TrainConfig& cfg,
                          const std::string& run_dir) {
  cfg.validate();
  require_all_frozen(frontend.params(), "enhancer");
  require_all_frozen(backend.params(), "spotter");
  require(!data.noise.empty(), ErrorKind::InvalidArgument, "train_switch: empty noise pool");
  RunArtifacts art{run_dir};
  art.prepare(cfg, "switch");

  AugmentPolicy policy;
  policy.snr_low_db = cfg.snr_low_db;
  policy.snr_high_db = cfg.snr_high_db;
  policy.augment_probability = cfg.augment_probability;

  Rng run_rng(cfg.seed);
  Rng train_mix = run_rng.fork(1, kAugmentTag);
  Rng val_mix = run_rng.fork(2, kAugmentTag);
  auto train_items =
      build_switch_items(data.split(Split::Train), data, frontend, policy, Split::Train, train_mix);
  auto val_items = build_switch_items(data.split(Split::Validation), data, frontend, policy,
                                      Split::Validation, val_mix);
  require(!train_items.empty() && !val_items.empty(), ErrorKind::InvalidArgument,
          "train_switch: empty split");

  const int64_t spe = steps_per_epoch(train_items.size(), cfg.batch_size);
  const int64_t total_steps = spe * cfg.epochs;
  const int64_t warmup_steps = spe * cfg.warmup_epochs;

  auto blended_accuracy = [&](const std::vector<SwitchItem>& items) {
    int correct = 0;
    for (const auto& it : items) {
      double a = model.predict_alpha(it.input, it.enhanced);
      Waveform blended = inject(it.enhanced, it.input, a);
      if (argmax_class(backend.classify(blended)) == it.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(items.size());
  };

  TrainSummary sum;
  sum.best_metric = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> best;
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(train_items.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng order_rng = run_rng.fork(static_cast<uint64_t>(epoch), kShuffleTag);
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    double lr_last = 0.0;
    for (size_t i = 0; i < order.size();) {
      size_t batch_end = std::min(order.size(), i + static_cast<size_t>(cfg.batch_size));
      double inv = 1.0 / static_cast<double>(batch_end - i);
      model.params().zero_grads();
      for (; i < batch_end; ++i) {
        const SwitchItem& it = train_items[order[i]];
        Graph g;
        Node* alpha = model.alpha_node(g, it.input, it.enhanced);
        Node* blended = g.blend(g.leaf(it.input), g.leaf(it.enhanced), alpha);
        Node* loss = g.ce_from_logits(backend.logits_node(g, blended), it.label);
        require_finite_loss(loss->val[0], "train_switch");
        epoch_loss += loss->val[0];
        g.backward(loss);
        g.add_param_grads(inv);
      }
      lr_last = lr_schedule(step, total_steps, warmup_steps, cfg.peak_lr);
      sgd_step(model.params(), lr_last, cfg.momentum, cfg.weight_decay);
      ++step;
    }
    double metric = blended_accuracy(val_items);
    sum.logs.push_back({epoch, epoch_loss / static_cast<double>(order.size()), metric, lr_last});
    if (metric > sum.best_metric) {
      sum.best_metric = metric;
      sum.best_epoch = epoch;
      best = snapshot_values(model.params());
      if (art.enabled()) model.save(art.checkpoint("best.ckpt"), {{"epoch", std::to_string(epoch)}});
    }
  }
  if (art.enabled()) model.save(art.checkpoint("final.ckpt"), {{"epoch", std::to_string(cfg.epochs - 1)}});
  if (!best.empty()) restore_values(model.params(), best);
  art.finish(sum.logs);
  return sum;
}

EvalReport evaluate(const Spotter& backend, const DataBundle& data, const EvalOptions& opt) {
  require(opt.alpha >= 0.0 && opt.alpha <= 1.0, ErrorKind::InvalidArgument,
          "evaluate: alpha must lie in [0,1]");
  EvalReport rep;
  rep.experiment_id = opt.experiment_id;

  auto transform = [&](const Waveform& x) -> Waveform {
    if (!opt.frontend) return x;
    Waveform e = opt.frontend(x);
    double a = opt.alpha_fn ? opt.alpha_fn(x, e) : opt.alpha;
    require(a >= 0.0 && a <= 1.0, ErrorKind::InvalidArgument,
            "evaluate: predicted alpha out of [0,1]");
    return inject(e, x, a);
  };

  auto clean_test = data.split(Split::Test);
  require(!clean_test.empty(), ErrorKind::InvalidArgument, "evaluate: empty clean test split");
  require(!data.noisy_test.empty(), ErrorKind::InvalidArgument, "evaluate: empty noisy test set");

  int correct = 0;
  for (const auto* u : clean_test) {
    Waveform x = transform(u->audio);
    if (argmax_class(backend.classify(x)) == u->label) ++correct;
  }
  rep.acc_clean = static_cast<double>(correct) / static_cast<double>(clean_test.size());

  correct = 0;
  double sdri_acc = 0.0;
  for (const auto& it : data.noisy_test) {
    Waveform x = transform(it.mixture);
    if (argmax_class(backend.classify(x)) == it.label) ++correct;
    if (opt.frontend) {
      double base = clamp_sdr(sdr_db(it.clean, it.mixture));
      double now = clamp_sdr(sdr_db(it.clean, x));
      sdri_acc += now - base;
    }
  }
  rep.acc_noisy = static_cast<double>(correct) / static_cast<double>(data.noisy_test.size());
  if (opt.frontend) rep.sdri_db = sdri_acc / static_cast<double>(data.noisy_test.size());
  rep.acc_avg = 0.5 * (rep.acc_clean + rep.acc_noisy);
  return rep;
}

void save_logs_csv(const std::string& path, const std::vector<EpochLog>& logs) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write logs csv: " + path);
  out << "epoch,train_loss,val_metric,lr\n";
  out.precision(12);
  for (const auto& l : logs) {
    out << l.epoch << "," << l.train_loss << "," << l.val_metric << "," << l.lr << "\n";
  }
  require(out.good(), ErrorKind::Io, "failed writing logs csv: " + path);
}

void save_report_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write report csv: " + path);
  out << "experiment_id,sdri_db,acc_clean,acc_noisy,acc_avg\n";
  out.precision(12);
  for (const auto& r : reports) {
    out << r.experiment_id << ",";
    if (std::isnan(r.sdri_db)) {
      out << "na";
    } else {
      out << r.sdri_db;
    }
    out << "," << r.acc_clean << "," << r.acc_noisy << "," << r.acc_avg << "\n";
  }
  require(out.good(), ErrorKind::Io, "failed writing report csv: " + path);
}

}  // namespace sekws
