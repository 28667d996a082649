// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace sekws {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string env_key_for(const std::string& key) {
  std::string out = "SEKWS_";
  for (char c : key) {
    if (c == '.' || c == '-') {
      out += '_';
    } else {
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config,
            "config line " + std::to_string(lineno) + " has no '=': " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::Config, "config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string& path, bool apply_env) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  KvConfig cfg = parse(ss.str());
  if (apply_env) cfg.apply_env_overrides();
  return cfg;
}

void KvConfig::apply_env_overrides() {
  for (auto& [key, value] : kv_) {
    const char* env = std::getenv(env_key_for(key).c_str());
    if (env != nullptr) value = env;
  }
}

bool KvConfig::has(const std::string& key) const { return kv_.count(key) > 0; }

void KvConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void KvConfig::set(const std::string& key, const char* value) { kv_[key] = value; }

void KvConfig::set(const std::string& key, double value) {
  std::ostringstream ss;
  ss.precision(17);
  ss << value;
  kv_[key] = ss.str();
}

void KvConfig::set(const std::string& key, int64_t value) { kv_[key] = std::to_string(value); }

void KvConfig::set(const std::string& key, bool value) { kv_[key] = value ? "true" : "false"; }

std::string KvConfig::get_str(const std::string& key) const {
  auto it = kv_.find(key);
  require(it != kv_.end(), ErrorKind::Config, "missing config key: " + key);
  return it->second;
}

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key) const {
  std::string s = get_str(key);
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    require(pos == s.size(), ErrorKind::Config, "trailing junk in numeric config " + key);
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::Config, "config key " + key + " is not a number: " + s);
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int64_t KvConfig::get_int(const std::string& key) const {
  std::string s = get_str(key);
  try {
    size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    require(pos == s.size(), ErrorKind::Config, "trailing junk in integer config " + key);
    return v;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::Config, "config key " + key + " is not an integer: " + s);
  }
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KvConfig::get_bool(const std::string& key) const {
  std::string s = get_str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorKind::Config, "config key " + key + " is not a boolean: " + s);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::string KvConfig::serialize() const {
  std::ostringstream ss;
  for (const auto& [key, value] : kv_) ss << key << " = " << value << "\n";
  return ss.str();
}

void KvConfig::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write config: " + path);
  out << serialize();
  require(out.good(), ErrorKind::Io, "failed writing config: " + path);
}

void KvConfig::merge(const KvConfig& other) {
  for (const auto& [key, value] : other.kv_) kv_[key] = value;
}

}  // namespace sekws
