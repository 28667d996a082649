// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/labels.hpp"
#include "core/rng.hpp"
#include "core/waveform.hpp"

namespace sekws {

struct LabeledUtterance {
  Waveform audio;  // one second nominal, padded/truncated at load
  int label = 0;   // index into the 12-class set
  Split split = Split::Train;
  std::string utterance_id;
};

struct MixtureExample {
  Waveform clean;
  Waveform noise_scaled;  // gain already applied
  Waveform mixture;       // clean + noise_scaled, sample-wise
  double snr_db = 0.0;    // requested SNR
  double gain = 1.0;      // applied noise gain
};

struct AugmentPolicy {
  double snr_low_db = 0.0;
  double snr_high_db = 15.0;
  double augment_probability = 0.8;
  uint64_t seed = 0;

  void validate() const;
};

// Scale the noise so the mixture hits snr_db exactly:
//   g = sqrt(P_clean / (P_noise * 10^(snr_db/10)))
// with P the mean squared amplitude over the utterance.
MixtureExample mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

// Contiguous segment of exactly duration_s seconds; the start offset is drawn
// uniformly over all valid offsets.
Waveform sample_noise_segment(const Waveform& noise_file, double duration_s, Rng& rng);

// Pool of noise recordings with a train/validation/test partition over files.
class NoisePool {
 public:
  static NoisePool from_waveforms(std::vector<Waveform> files, uint64_t split_seed);
  static NoisePool load_manifest(const std::string& manifest_path, uint64_t split_seed);

  bool empty() const { return files_.empty(); }
  size_t size() const { return files_.size(); }
  const std::vector<size_t>& split_indices(Split s) const;
  const Waveform& file(size_t i) const { return files_[i]; }

  // Draw one segment from a random file of the given split. Draw order is
  // file, then offset; one stream drives a whole epoch so runs replay.
  Waveform draw_segment(Split split, double duration_s, Rng& rng) const;

 private:
  std::vector<Waveform> files_;
  std::vector<size_t> train_, val_, test_;
};

struct AugmentResult {
  Waveform audio;                       // mixture, or the untouched input
  bool augmented = false;
  std::optional<MixtureExample> mix;    // present when augmented
};

// On-the-fly augmentation: with probability augment_probability mixes the
// utterance with a random noise segment at SNR ~ U[snr_low, snr_high].
// RNG draw order is fixed (decision, file, offset, SNR) so a seeded epoch is
// replayable.
AugmentResult augment(const LabeledUtterance& utt, const NoisePool& pool, Split noise_split,
                      const AugmentPolicy& policy, Rng& rng);

// Resample the unknown and silence classes to floor(mean count of the ten
// keyword classes). Keyword-class utterances are returned untouched.
std::vector<LabeledUtterance> rebalance_classes(const std::vector<LabeledUtterance>& utterances,
                                                uint64_t seed);

// Procedural desk-scale corpus: class-specific multi-tone contours with
// per-utterance perturbations, 80/10/10 split per class, deterministic under
// seed. Classes are the first n_classes labels of the canonical 12-class set;
// the silence class (when included) is low-amplitude noise.
std::vector<LabeledUtterance> generate_synthetic_corpus(int n_classes, int n_per_class,
                                                        uint64_t seed);

// Ambient-style synthetic noise: pink-ish broadband plus a wandering tonal
// component with slow amplitude modulation.
std::vector<Waveform> generate_synthetic_noise(int n_files, double duration_s, uint64_t seed);

// Manifest I/O. Utterance manifest header: utterance_id,path,label,split.
// Noise manifest header: noise_id,path.
std::vector<LabeledUtterance> load_manifest(const std::string& path);
void save_corpus_tree(const std::vector<LabeledUtterance>& corpus, const std::string& root,
                      const std::string& manifest_name = "manifest.csv");
void save_noise_tree(const std::vector<Waveform>& noise, const std::string& root,
                     const std::string& manifest_name = "noise_manifest.csv");

// A frozen noisy copy of one split: every utterance mixed with a noise segment
// from the matching noise split at SNR ~ U[low, high], under a dedicated seed.
struct NoisyEvalItem {
  Waveform mixture;
  Waveform clean;
  int label = 0;
  double snr_db = 0.0;
  double noise_gain = 0.0;
};

std::vector<NoisyEvalItem> build_frozen_noisy_set(const std::vector<LabeledUtterance>& utterances,
                                                  Split split, const NoisePool& pool,
                                                  double snr_low_db, double snr_high_db,
                                                  uint64_t seed);

std::vector<const LabeledUtterance*> split_view(const std::vector<LabeledUtterance>& corpus,
                                                Split split);

}  // namespace sekws
