// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/datamix.hpp"
#include "core/enhancer.hpp"
#include "core/injection.hpp"
#include "core/spotter.hpp"
#include "core/switchnet.hpp"

namespace sekws {

// Which terms the training objective carries.
enum class LossMode { SdrOnly, CeOnly, Combined };

const char* loss_mode_name(LossMode m);
LossMode loss_mode_from_name(const std::string& name);

// Shared knobs for every training regime. Epoch-granular warmup: the schedule
// runs in optimizer steps with warmup_epochs mapped to steps.
struct TrainConfig {
  int epochs = 10;
  double peak_lr = 0.05;
  int warmup_epochs = 5;
  double momentum = 0.9;
  double weight_decay = 0.001;
  int batch_size = 8;
  uint64_t seed = 1;
  double beta = 0.01;  // SDR weight inside the combined loss
  bool freeze_frontend = false;
  bool freeze_backend = false;
  LossMode loss_mode = LossMode::CeOnly;
  // Mixing policy for regimes that train on noisy audio.
  double snr_low_db = 0.0;
  double snr_high_db = 15.0;
  double augment_probability = 0.8;

  void validate() const;
  void to_config(KvConfig& cfg) const;
  static TrainConfig from_config(const KvConfig& cfg);
};

// Corpus plus noise plus frozen noisy copies of the validation and test
// splits, so every evaluation across a whole experiment sees identical audio.
struct DataBundle {
  std::vector<LabeledUtterance> corpus;
  NoisePool noise;
  std::vector<NoisyEvalItem> noisy_val;
  std::vector<NoisyEvalItem> noisy_test;

  std::vector<const LabeledUtterance*> split(Split s) const { return split_view(corpus, s); }
};

DataBundle make_data_bundle(std::vector<LabeledUtterance> corpus, NoisePool noise,
                            double eval_snr_low_db, double eval_snr_high_db, uint64_t eval_seed);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double lr = 0.0;
};

struct TrainSummary {
  int best_epoch = -1;
  double best_metric = 0.0;
  std::vector<EpochLog> logs;
};

// Every trainer: runs the configured number of epochs, logs one row per
// epoch, restores the best-validation parameters into the model, and (when
// run_dir is non-empty) persists config.cfg, logs.csv, and checkpoints/
// best.ckpt + final.ckpt under run_dir.

// Enhancer on mixtures, loss = capped negative SDR, metric = validation SDRi.
TrainSummary train_se(Enhancer& model, const DataBundle& data, const TrainConfig& cfg,
                      const std::string& run_dir);

// Spotter with cross-entropy. noisy_condition applies the mixing policy to
// training audio and selects the noisy validation metric; the clean condition
// never mixes and validates on clean audio.
TrainSummary train_kws(Spotter& model, const DataBundle& data, const TrainConfig& cfg,
                       bool noisy_condition, const std::string& run_dir);

// Enhancer + spotter end to end. Freeze flags pick the trainable side(s);
// loss_mode selects CE, SDR, or the combined objective. Metric = noisy
// validation accuracy through the frontend.
TrainSummary train_joint(Enhancer& frontend, Spotter& backend, const DataBundle& data,
                         const TrainConfig& cfg, const std::string& run_dir);

// Blend-weight predictor against a frozen enhancer and spotter (every tensor
// of both must be frozen). Training examples are drawn once under the run
// seed: each train utterance passes through the mixing policy, is enhanced,
// and the switch learns to pick alpha by classification loss through the
// blend. Metric = blended accuracy on a held-out set built the same way from
// the validation split.
TrainSummary train_switch(SwitchNet& model, Enhancer& frontend, Spotter& backend,
                          const DataBundle& data, const TrainConfig& cfg,
                          const std::string& run_dir);

// Per-utterance blend weight chosen from the (mixture, enhanced) pair.
using AlphaFn = std::function<double(const Waveform& original, const Waveform& enhanced)>;

struct EvalOptions {
  EnhanceFn frontend;  // empty -> no-enhancement baseline
  double alpha = 1.0;
  AlphaFn alpha_fn;    // when set, overrides the fixed alpha per utterance
  std::string experiment_id = "eval";
};

struct EvalReport {
  std::string experiment_id;
  double sdri_db = std::numeric_limits<double>::quiet_NaN();  // NaN without a frontend
  double acc_clean = 0.0;
  double acc_noisy = 0.0;
  double acc_avg = 0.0;
};

// Accuracy on the clean test split and the frozen noisy test set, plus mean
// capped SDR improvement when a frontend is present. Clean audio also passes
// through the frontend, so enhancement regressions on clean speech show up.
EvalReport evaluate(const Spotter& backend, const DataBundle& data, const EvalOptions& opt);

void save_logs_csv(const std::string& path, const std::vector<EpochLog>& logs);
void save_report_csv(const std::string& path, const std::vector<EvalReport>& reports);

// SDR of estimate against a fixed reference as a tape node, negated and
// capped to +/-kSdrCapDb so it can serve as a loss term directly.
Node* sdr_loss_node(Graph& g, const Waveform& reference, Node* estimate);

}  // namespace sekws
