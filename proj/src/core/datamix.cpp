// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/datamix.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "core/errors.hpp"

namespace fs = std::filesystem;

namespace sekws {

void AugmentPolicy::validate() const {
  require(snr_low_db <= snr_high_db, ErrorKind::InvalidArgument,
          "augment policy: snr_low_db > snr_high_db");
  require(augment_probability >= 0.0 && augment_probability <= 1.0, ErrorKind::InvalidArgument,
          "augment policy: probability outside [0,1]");
}

MixtureExample mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  require(clean.size() == noise.size(), ErrorKind::Shape,
          "mix_at_snr: length mismatch (" + std::to_string(clean.size()) + " vs " +
              std::to_string(noise.size()) + ")");
  require(!clean.empty(), ErrorKind::InvalidArgument, "mix_at_snr: empty signals");
  double p_clean = mean_power(clean);
  double p_noise = mean_power(noise);
  require(p_clean > 0.0, ErrorKind::Degenerate, "mix_at_snr: zero-power clean signal");
  require(p_noise > 0.0, ErrorKind::Degenerate, "mix_at_snr: zero-power noise signal");

  double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixtureExample out;
  out.clean = clean;
  out.snr_db = snr_db;
  out.gain = gain;
  out.noise_scaled.sample_rate_hz = clean.sample_rate_hz;
  out.mixture.sample_rate_hz = clean.sample_rate_hz;
  out.noise_scaled.samples.resize(clean.size());
  out.mixture.samples.resize(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) {
    out.noise_scaled.samples[i] = gain * noise.samples[i];
    out.mixture.samples[i] = clean.samples[i] + out.noise_scaled.samples[i];
  }
  return out;
}

Waveform sample_noise_segment(const Waveform& noise_file, double duration_s, Rng& rng) {
  require(duration_s > 0.0, ErrorKind::InvalidArgument, "sample_noise_segment: duration <= 0");
  size_t need = static_cast<size_t>(std::llround(duration_s * noise_file.sample_rate_hz));
  require(noise_file.size() >= need, ErrorKind::InvalidArgument,
          "sample_noise_segment: source shorter than requested duration (" +
              std::to_string(noise_file.size()) + " < " + std::to_string(need) + " samples)");
  size_t max_start = noise_file.size() - need;
  size_t start = static_cast<size_t>(rng.uniform_int(max_start + 1));
  Waveform out;
  out.sample_rate_hz = noise_file.sample_rate_hz;
  out.samples.assign(noise_file.samples.begin() + static_cast<ptrdiff_t>(start),
                     noise_file.samples.begin() + static_cast<ptrdiff_t>(start + need));
  return out;
}

NoisePool NoisePool::from_waveforms(std::vector<Waveform> files, uint64_t split_seed) {
  NoisePool pool;
  pool.files_ = std::move(files);
  std::vector<size_t> order(pool.files_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(split_seed);
  rng.shuffle(order);
  // 80/10/10 over files; tiny pools keep at least one file per split when
  // they can.
  size_t n = order.size();
  size_t n_val = std::max<size_t>(n >= 3 ? 1 : 0, n / 10);
  size_t n_test = std::max<size_t>(n >= 3 ? 1 : 0, n / 10);
  size_t n_train = n - n_val - n_test;
  for (size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      pool.train_.push_back(order[i]);
    } else if (i < n_train + n_val) {
      pool.val_.push_back(order[i]);
    } else {
      pool.test_.push_back(order[i]);
    }
  }
  return pool;
}

NoisePool NoisePool::load_manifest(const std::string& manifest_path, uint64_t split_seed) {
  std::ifstream in(manifest_path);
  require(in.good(), ErrorKind::Io, "cannot open noise manifest: " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  std::string line;
  std::getline(in, line);  // header
  std::vector<Waveform> files;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    size_t comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::BadData,
            "noise manifest row " + std::to_string(row) + ": expected noise_id,path");
    std::string path = line.substr(comma + 1);
    if (!path.empty() && path.back() == '\r') path.pop_back();
    fs::path p(path);
    if (p.is_relative()) p = base / p;
    try {
      files.push_back(read_wav_checked(p.string(), kDefaultSampleRate));
    } catch (const Error& e) {
      fail(e.kind(), "noise manifest row " + std::to_string(row) + ": " + e.what());
    }
  }
  return from_waveforms(std::move(files), split_seed);
}

const std::vector<size_t>& NoisePool::split_indices(Split s) const {
  switch (s) {
    case Split::Train: return train_;
    case Split::Validation: return val_;
    case Split::Test: return test_;
  }
  return train_;
}

Waveform NoisePool::draw_segment(Split split, double duration_s, Rng& rng) const {
  const std::vector<size_t>& idx = split_indices(split);
  require(!idx.empty(), ErrorKind::InvalidArgument,
          std::string("noise pool has no files in split ") + split_name(split));
  size_t pick = idx[static_cast<size_t>(rng.uniform_int(idx.size()))];
  return sample_noise_segment(files_[pick], duration_s, rng);
}

AugmentResult augment(const LabeledUtterance& utt, const NoisePool& pool, Split noise_split,
                      const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  require(!pool.empty(), ErrorKind::InvalidArgument, "augment: empty noise pool");

  AugmentResult out;
  double decision = rng.uniform();
  if (decision >= policy.augment_probability) {
    out.audio = utt.audio;
    out.augmented = false;
    return out;
  }
  double duration_s =
      static_cast<double>(utt.audio.size()) / static_cast<double>(utt.audio.sample_rate_hz);
  Waveform segment = pool.draw_segment(noise_split, duration_s, rng);
  double snr = rng.uniform(policy.snr_low_db, policy.snr_high_db);
  MixtureExample mix = mix_at_snr(utt.audio, segment, snr);
  out.audio = mix.mixture;
  out.augmented = true;
  out.mix = std::move(mix);
  return out;
}

std::vector<LabeledUtterance> rebalance_classes(const std::vector<LabeledUtterance>& utterances,
                                                uint64_t seed) {
  std::vector<std::vector<size_t>> by_class(kNumClasses);
  for (size_t i = 0; i < utterances.size(); ++i) {
    by_class[static_cast<size_t>(utterances[i].label)].push_back(i);
  }
  int64_t keyword_total = 0;
  for (int c = 0; c < kNumKeywordClasses; ++c) {
    require(!by_class[static_cast<size_t>(c)].empty(), ErrorKind::BadData,
            "rebalance_classes: keyword class \"" + class_name(c) + "\" is empty");
    keyword_total += static_cast<int64_t>(by_class[static_cast<size_t>(c)].size());
  }
  size_t target = static_cast<size_t>(keyword_total / kNumKeywordClasses);

  std::vector<LabeledUtterance> out;
  for (const auto& utt : utterances) {
    if (utt.label < kNumKeywordClasses) out.push_back(utt);
  }
  Rng rng(seed);
  for (int c : {kUnknownClass, kSilenceClass}) {
    auto& members = by_class[static_cast<size_t>(c)];
    if (members.empty()) continue;  // absent class stays absent
    if (members.size() >= target) {
      Rng sub = rng.fork(static_cast<uint64_t>(c));
      sub.shuffle(members);
      for (size_t i = 0; i < target; ++i) out.push_back(utterances[members[i]]);
    } else {
      // with replacement when short
      Rng sub = rng.fork(static_cast<uint64_t>(c));
      for (size_t i = 0; i < target; ++i) {
        size_t pick = members[static_cast<size_t>(sub.uniform_int(members.size()))];
        out.push_back(utterances[pick]);
      }
    }
  }
  return out;
}

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Per-class pattern: base frequency ladder plus alternating glide direction
// and a class-specific partial ratio.
struct ClassPattern {
  double base_hz;
  double glide;    // relative frequency change over the tone
  double partial;  // second partial ratio
};

ClassPattern pattern_for_class(int cls) {
  double base = 380.0 * std::pow(1.32, cls);
  double glide = (cls % 2 == 0) ? 0.45 : -0.35;
  double partial = 1.5 + 0.13 * static_cast<double>(cls % 5);
  return {base, glide, partial};
}

Waveform synth_tone_utterance(int cls, Rng& rng) {
  const int rate = kDefaultSampleRate;
  const size_t n = static_cast<size_t>(rate);  // one second
  Waveform w;
  w.sample_rate_hz = rate;
  w.samples.assign(n, 0.0);

  ClassPattern pat = pattern_for_class(cls);
  if (cls == kUnknownClass) {
    // "unknown" draws a fresh base frequency per utterance instead of a
    // class-consistent pattern.
    pat.base_hz = rng.uniform(420.0, 4200.0);
    pat.glide = rng.uniform(-0.5, 0.5);
    pat.partial = rng.uniform(1.4, 2.1);
  }

  double pitch = std::exp(rng.normal(0.0, 0.04));
  double amp = rng.uniform(0.25, 0.7);
  double onset = rng.uniform(0.0, 0.15);
  double tone_len = rng.uniform(0.55, 0.72);
  double phase0 = rng.uniform(0.0, kTwoPi);
  double phase1 = rng.uniform(0.0, kTwoPi);
  double phase2 = rng.uniform(0.0, kTwoPi);

  double f0 = pat.base_hz * pitch;
  size_t start = static_cast<size_t>(onset * rate);
  size_t len = static_cast<size_t>(tone_len * rate);
  double attack = 0.03 * rate;
  double release = 0.08 * rate;

  double ph0 = phase0, ph1 = phase1, ph2 = phase2;
  for (size_t i = 0; i < len && start + i < n; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(len);
    double f = f0 * (1.0 + pat.glide * t);
    double env = 1.0;
    if (static_cast<double>(i) < attack) env = static_cast<double>(i) / attack;
    double tail = static_cast<double>(len - i);
    if (tail < release) env = std::min(env, tail / release);

    double s = std::sin(ph0);
    double f1 = f * pat.partial;
    if (f1 < 7600.0) s += 0.55 * std::sin(ph1);
    double f2 = f * pat.partial * pat.partial;
    if (f2 < 7600.0) s += 0.3 * std::sin(ph2);

    // Partial weights sum to 1.85; normalize so the peak stays below amp and
    // the 16-bit writer never clips.
    w.samples[start + i] = amp * env * (s / 1.85);
    ph0 += kTwoPi * f / rate;
    ph1 += kTwoPi * f1 / rate;
    ph2 += kTwoPi * f2 / rate;
  }
  return w;
}

Waveform synth_silence_utterance(Rng& rng) {
  const int rate = kDefaultSampleRate;
  Waveform w;
  w.sample_rate_hz = rate;
  w.samples.resize(static_cast<size_t>(rate));
  double amp = rng.uniform(0.002, 0.01);
  double state = 0.0;
  for (auto& s : w.samples) {
    state = 0.9 * state + 0.1 * rng.normal();
    s = amp * state;
  }
  return w;
}

}  // namespace

std::vector<LabeledUtterance> generate_synthetic_corpus(int n_classes, int n_per_class,
                                                        uint64_t seed) {
  require(n_classes >= 2 && n_classes <= kNumClasses, ErrorKind::InvalidArgument,
          "generate_synthetic_corpus: n_classes must be in [2,12]");
  require(n_per_class > 0, ErrorKind::InvalidArgument,
          "generate_synthetic_corpus: n_per_class must be positive");

  std::vector<LabeledUtterance> out;
  out.reserve(static_cast<size_t>(n_classes) * static_cast<size_t>(n_per_class));
  Rng root(seed);
  for (int cls = 0; cls < n_classes; ++cls) {
    int n_train = (n_per_class * 8) / 10;
    int n_val = n_per_class / 10;
    for (int i = 0; i < n_per_class; ++i) {
      Rng rng = root.fork(static_cast<uint64_t>(cls), static_cast<uint64_t>(i));
      LabeledUtterance utt;
      utt.label = cls;
      utt.audio = (cls == kSilenceClass) ? synth_silence_utterance(rng)
                                         : synth_tone_utterance(cls, rng);
      utt.split = (i < n_train) ? Split::Train
                                : (i < n_train + n_val ? Split::Validation : Split::Test);
      utt.utterance_id = class_name(cls) + "_" + std::to_string(i);
      out.push_back(std::move(utt));
    }
  }
  return out;
}

std::vector<Waveform> generate_synthetic_noise(int n_files, double duration_s, uint64_t seed) {
  require(n_files > 0, ErrorKind::InvalidArgument, "generate_synthetic_noise: n_files <= 0");
  require(duration_s > 0.0, ErrorKind::InvalidArgument, "generate_synthetic_noise: duration <= 0");
  const int rate = kDefaultSampleRate;
  std::vector<Waveform> out;
  Rng root(seed);
  for (int f = 0; f < n_files; ++f) {
    Rng rng = root.fork(static_cast<uint64_t>(f), 0x6e6f6973ULL);
    Waveform w;
    w.sample_rate_hz = rate;
    w.samples.resize(static_cast<size_t>(duration_s * rate));

    double lp = rng.uniform(0.82, 0.97);        // broadband colour
    double tone_amp = rng.uniform(0.25, 0.6);   // wandering tonal component
    double mod_hz = rng.uniform(0.1, 0.5);
    double mod_depth = rng.uniform(0.2, 0.5);
    double mod_phase = rng.uniform(0.0, kTwoPi);
    double log_f = std::log(rng.uniform(300.0, 2500.0));
    double state = 0.0;
    double phase = rng.uniform(0.0, kTwoPi);

    for (size_t i = 0; i < w.samples.size(); ++i) {
      state = lp * state + (1.0 - lp) * rng.normal();
      // slow random walk of the tone frequency in log space, clamped to band
      log_f += 0.0004 * rng.normal();
      log_f = std::max(std::log(250.0), std::min(std::log(3500.0), log_f));
      double freq = std::exp(log_f);
      phase += kTwoPi * freq / rate;
      double t = static_cast<double>(i) / rate;
      double mod = 1.0 + mod_depth * std::sin(kTwoPi * mod_hz * t + mod_phase);
      w.samples[i] = mod * (state + tone_amp * std::sin(phase));
    }
    // normalize RMS, then spread overall levels across files
    double rms = std::sqrt(mean_power(w));
    double target = 0.08 * rng.uniform(0.6, 1.6);
    if (rms > 0.0) {
      for (auto& s : w.samples) s *= target / rms;
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<LabeledUtterance> load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open manifest: " + path);
  fs::path base = fs::path(path).parent_path();

  std::string line;
  std::getline(in, line);  // header
  std::vector<LabeledUtterance> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> cols = split_csv_row(line);
    require(cols.size() == 4, ErrorKind::BadData,
            "manifest row " + std::to_string(row) + ": expected utterance_id,path,label,split");
    LabeledUtterance utt;
    utt.utterance_id = cols[0];
    fs::path p(cols[1]);
    if (p.is_relative()) p = base / p;
    try {
      Waveform w = read_wav_checked(p.string(), kDefaultSampleRate);
      utt.audio = fit_length(w, static_cast<size_t>(kDefaultSampleRate));
      utt.label = class_index_checked(cols[2]);
      utt.split = split_from_name(cols[3]);
    } catch (const Error& e) {
      fail(e.kind(), "manifest row " + std::to_string(row) + ": " + e.what());
    }
    out.push_back(std::move(utt));
  }
  return out;
}

void save_corpus_tree(const std::vector<LabeledUtterance>& corpus, const std::string& root,
                      const std::string& manifest_name) {
  fs::create_directories(root);
  std::ofstream manifest(fs::path(root) / manifest_name);
  require(manifest.good(), ErrorKind::Io, "cannot write manifest under " + root);
  manifest << "utterance_id,path,label,split\n";
  for (const auto& utt : corpus) {
    fs::path rel = fs::path(split_name(utt.split)) / class_name(utt.label) /
                   (utt.utterance_id + ".wav");
    fs::create_directories(fs::path(root) / rel.parent_path());
    write_wav((fs::path(root) / rel).string(), utt.audio);
    manifest << utt.utterance_id << "," << rel.string() << "," << class_name(utt.label) << ","
             << split_name(utt.split) << "\n";
  }
  require(manifest.good(), ErrorKind::Io, "failed writing manifest under " + root);
}

void save_noise_tree(const std::vector<Waveform>& noise, const std::string& root,
                     const std::string& manifest_name) {
  fs::create_directories(fs::path(root) / "noise");
  std::ofstream manifest(fs::path(root) / manifest_name);
  require(manifest.good(), ErrorKind::Io, "cannot write noise manifest under " + root);
  manifest << "noise_id,path\n";
  for (size_t i = 0; i < noise.size(); ++i) {
    std::string id = "noise_" + std::to_string(i);
    fs::path rel = fs::path("noise") / (id + ".wav");
    write_wav((fs::path(root) / rel).string(), noise[i]);
    manifest << id << "," << rel.string() << "\n";
  }
  require(manifest.good(), ErrorKind::Io, "failed writing noise manifest under " + root);
}

std::vector<NoisyEvalItem> build_frozen_noisy_set(const std::vector<LabeledUtterance>& utterances,
                                                  Split split, const NoisePool& pool,
                                                  double snr_low_db, double snr_high_db,
                                                  uint64_t seed) {
  Rng rng(seed);
  std::vector<NoisyEvalItem> out;
  for (const auto& utt : utterances) {
    if (utt.split != split) continue;
    double duration_s =
        static_cast<double>(utt.audio.size()) / static_cast<double>(utt.audio.sample_rate_hz);
    Waveform segment = pool.draw_segment(split, duration_s, rng);
    double snr = rng.uniform(snr_low_db, snr_high_db);
    MixtureExample mix = mix_at_snr(utt.audio, segment, snr);
    NoisyEvalItem item;
    item.mixture = std::move(mix.mixture);
    item.clean = utt.audio;
    item.label = utt.label;
    item.snr_db = snr;
    item.noise_gain = mix.gain;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<const LabeledUtterance*> split_view(const std::vector<LabeledUtterance>& corpus,
                                                Split split) {
  std::vector<const LabeledUtterance*> out;
  for (const auto& utt : corpus) {
    if (utt.split == split) out.push_back(&utt);
  }
  return out;
}

}  // namespace sekws
