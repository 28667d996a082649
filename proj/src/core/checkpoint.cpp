// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "core/errors.hpp"

namespace sekws {

namespace {

constexpr char kMagic[9] = {'S', 'E', 'K', 'W', 'S', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

struct Header {
  nlohmann::json json;
  uint64_t blob_offset = 0;
};

Header read_header(std::ifstream& in, const std::string& path) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(kMagic));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorKind::BadData,
          "not a checkpoint file: " + path);
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  require(in.good() && version == kVersion, ErrorKind::BadData,
          "unsupported checkpoint version " + std::to_string(version) + " in " + path);
  uint64_t json_len = 0;
  in.read(reinterpret_cast<char*>(&json_len), sizeof(json_len));
  require(in.good() && json_len > 0 && json_len < (1ULL << 31), ErrorKind::BadData,
          "corrupt checkpoint header in " + path);
  std::string text(json_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(json_len));
  require(in.good(), ErrorKind::BadData, "truncated checkpoint header in " + path);
  Header h;
  try {
    h.json = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadData, std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  h.blob_offset = sizeof(kMagic) + sizeof(version) + sizeof(json_len) + json_len;
  return h;
}

CheckpointMeta meta_from_header(const nlohmann::json& j) {
  CheckpointMeta meta;
  if (j.contains("config")) {
    for (auto& [k, v] : j.at("config").items()) meta.config.set(k, v.get<std::string>());
  }
  if (j.contains("metadata")) {
    for (auto& [k, v] : j.at("metadata").items()) meta.metadata[k] = v.get<std::string>();
  }
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params, const KvConfig& config,
                     const std::map<std::string, std::string>& metadata) {
  nlohmann::json j;
  j["tensors"] = nlohmann::json::array();
  for (size_t i = 0; i < params.size(); ++i) {
    const ParamTensor& p = params[i];
    nlohmann::json t;
    t["name"] = p.name;
    t["shape"] = p.value.shape();
    t["frozen"] = p.frozen;
    j["tensors"].push_back(std::move(t));
  }
  j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : config.entries()) j["config"][k] = v;
  j["metadata"] = nlohmann::json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;

  std::string header = j.dump();
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t json_len = header.size();
  out.write(reinterpret_cast<const char*>(&json_len), sizeof(json_len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const ParamTensor& p = params[i];
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  out.flush();
  require(out.good(), ErrorKind::Io, "failed writing checkpoint: " + path);
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open checkpoint: " + path);
  return meta_from_header(read_header(in, path).json);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamSet& params) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open checkpoint: " + path);
  Header h = read_header(in, path);
  require(h.json.contains("tensors") && h.json["tensors"].is_array(), ErrorKind::BadData,
          "checkpoint header lacks a tensor table: " + path);
  const auto& table = h.json["tensors"];
  require(table.size() == params.size(), ErrorKind::BadData,
          "checkpoint tensor count " + std::to_string(table.size()) + " does not match model (" +
              std::to_string(params.size()) + "): " + path);
  for (const auto& t : table) {
    std::string name = t.at("name").get<std::string>();
    std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    require(params.has(name), ErrorKind::BadData, "checkpoint tensor not in model: " + name);
    ParamTensor& p = params.at(name);
    require(p.value.shape() == shape, ErrorKind::BadData,
            "checkpoint shape mismatch for " + name + ": file " + Tensor::shape_str(shape) +
                " vs model " + Tensor::shape_str(p.value.shape()));
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    require(in.good(), ErrorKind::BadData, "truncated checkpoint blob in " + path);
    p.frozen = t.value("frozen", false);
    p.grad.fill(0.0);
    p.velocity.fill(0.0);
  }
  return meta_from_header(h.json);
}

}  // namespace sekws
