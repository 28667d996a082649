// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace sekws {

// One trainable tensor. grad accumulates between optimizer steps; velocity is
// SGD momentum state. frozen tensors keep value and velocity bit-identical
// through training.
struct ParamTensor {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;
  bool frozen = false;

  explicit ParamTensor(std::string n, Tensor v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape()),
        velocity(value.shape()) {}
};

// Ordered, name-addressable collection. Pointers to members stay valid for
// the life of the set (graph nodes capture them during construction).
class ParamSet {
 public:
  ParamTensor& add(const std::string& name, Tensor init) {
    require(index_.find(name) == index_.end(), ErrorKind::InvalidArgument,
            "duplicate parameter name: " + name);
    index_[name] = items_.size();
    items_.push_back(std::make_unique<ParamTensor>(name, std::move(init)));
    return *items_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  ParamTensor& at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::InvalidArgument, "no such parameter: " + name);
    return *items_[it->second];
  }
  const ParamTensor& at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::InvalidArgument, "no such parameter: " + name);
    return *items_[it->second];
  }

  size_t size() const { return items_.size(); }
  ParamTensor& operator[](size_t i) { return *items_[i]; }
  const ParamTensor& operator[](size_t i) const { return *items_[i]; }

  int64_t total_values() const {
    int64_t n = 0;
    for (const auto& p : items_) n += p->value.size();
    return n;
  }

  void zero_grads() {
    for (auto& p : items_) p->grad.fill(0.0);
  }

  void set_frozen_all(bool frozen) {
    for (auto& p : items_) p->frozen = frozen;
  }

 private:
  std::vector<std::unique_ptr<ParamTensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// FNV-1a over parameter names and the raw bytes of every value tensor, in set
// order. Used for freeze checks and rerun verification.
inline uint64_t params_hash(const ParamSet& params) {
  uint64_t h = 1469598103934665603ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (size_t i = 0; i < params.size(); ++i) {
    const ParamTensor& p = params[i];
    for (char c : p.name) mix_byte(static_cast<unsigned char>(c));
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
    size_t n_bytes = static_cast<size_t>(p.value.size()) * sizeof(double);
    for (size_t k = 0; k < n_bytes; ++k) mix_byte(bytes[k]);
  }
  return h;
}

// Initializers. All deterministic under the caller's stream.
inline Tensor init_normal(Rng& rng, std::vector<int> shape, double stddev) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

inline Tensor init_he(Rng& rng, std::vector<int> shape, int64_t fan_in) {
  require(fan_in > 0, ErrorKind::InvalidArgument, "init_he: fan_in must be positive");
  return init_normal(rng, std::move(shape), std::sqrt(2.0 / static_cast<double>(fan_in)));
}

inline Tensor init_zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

inline Tensor init_const(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

}  // namespace sekws
