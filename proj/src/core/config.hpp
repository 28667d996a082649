// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

namespace sekws {

// Flat key-value configuration. Text form is one `key = value` pair per line,
// `#` starts a comment. Environment variables named SEKWS_<KEY> (key upper-
// cased, '.' and '-' mapped to '_') override file values when enabled.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::string& path, bool apply_env = true);

  void apply_env_overrides();

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  // Literal overload; without it a string literal would convert to bool.
  void set(const std::string& key, const char* value);
  void set(const std::string& key, double value);
  void set(const std::string& key, int64_t value);
  void set(const std::string& key, bool value);

  // Getters throw Config errors when the key is missing or malformed.
  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::string serialize() const;
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

  // Merge: values from `other` win.
  void merge(const KvConfig& other);

 private:
  std::map<std::string, std::string> kv_;
};

std::string env_key_for(const std::string& key);

}  // namespace sekws
