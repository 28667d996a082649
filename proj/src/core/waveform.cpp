// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/waveform.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "core/errors.hpp"

namespace sekws {

void Waveform::validate(const std::string& what) const {
  require(!samples.empty(), ErrorKind::InvalidArgument, what + ": empty waveform");
  require(sample_rate_hz > 0, ErrorKind::InvalidArgument, what + ": sample rate must be positive");
  for (double s : samples) {
    require(std::isfinite(s), ErrorKind::Numeric, what + ": non-finite sample");
  }
}

double mean_power(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return acc / static_cast<double>(w.samples.size());
}

double power_ratio_db(const Waveform& a, const Waveform& b) {
  double pa = mean_power(a);
  double pb = mean_power(b);
  require(pa > 0.0 && pb > 0.0, ErrorKind::Degenerate, "power ratio of zero-power signal");
  return 10.0 * std::log10(pa / pb);
}

Waveform fit_length(const Waveform& w, size_t n) {
  Waveform out = w;
  out.samples.resize(n, 0.0);
  return out;
}

namespace {

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open wav file: " + path);

  char riff[4], wave[4];
  in.read(riff, 4);
  read_u32(in);  // riff size
  in.read(wave, 4);
  require(in.good() && std::memcmp(riff, "RIFF", 4) == 0 && std::memcmp(wave, "WAVE", 4) == 0,
          ErrorKind::BadData, "not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<int16_t> pcm;

  while (in.good()) {
    char id[4];
    in.read(id, 4);
    if (!in.good()) break;
    uint32_t chunk_size = read_u32(in);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      require(have_fmt, ErrorKind::BadData, "wav data chunk before fmt: " + path);
      require(format == 1 && bits == 16, ErrorKind::BadData,
              "only 16-bit PCM wav supported: " + path);
      pcm.resize(chunk_size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), static_cast<std::streamsize>(pcm.size() * 2));
      break;
    } else {
      // skip unknown chunk (word aligned)
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  require(have_fmt && !pcm.empty(), ErrorKind::BadData, "wav has no sample data: " + path);
  require(channels >= 1, ErrorKind::BadData, "wav has zero channels: " + path);

  // First channel only; extra channels are dropped at load.
  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  size_t frames = pcm.size() / channels;
  w.samples.resize(frames);
  for (size_t i = 0; i < frames; ++i) {
    w.samples[i] = static_cast<double>(pcm[i * channels]) / 32768.0;
  }
  return w;
}

Waveform read_wav_checked(const std::string& path, int expected_rate) {
  Waveform w = read_wav(path);
  require(w.sample_rate_hz == expected_rate, ErrorKind::BadData,
          "unexpected sample rate " + std::to_string(w.sample_rate_hz) + " (want " +
              std::to_string(expected_rate) + "): " + path);
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  w.validate("write_wav");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot create wav file: " + path);

  uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(w.sample_rate_hz));
  write_u32(out, static_cast<uint32_t>(w.sample_rate_hz) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (double s : w.samples) {
    double clamped = std::max(-1.0, std::min(32767.0 / 32768.0, s));
    int16_t q = static_cast<int16_t>(std::lround(clamped * 32768.0));
    char b[2] = {static_cast<char>(q & 0xff), static_cast<char>((q >> 8) & 0xff)};
    out.write(b, 2);
  }
  require(out.good(), ErrorKind::Io, "failed writing wav file: " + path);
}

}  // namespace sekws
