// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "core/config.hpp"
#include "core/params.hpp"

namespace sekws {

// Self-describing parameter archive: magic + version, a JSON header listing
// tensor names/shapes/freeze flags plus config and metadata, then the raw
// float64 little-endian blob in header order.
struct CheckpointMeta {
  KvConfig config;
  std::map<std::string, std::string> metadata;
};

void save_checkpoint(const std::string& path, const ParamSet& params, const KvConfig& config,
                     const std::map<std::string, std::string>& metadata);

// Header only; cheap way to discover what kind of model a file holds.
CheckpointMeta read_checkpoint_meta(const std::string& path);

// Loads values and freeze flags into an already-constructed ParamSet. Tensor
// names and shapes must match exactly.
CheckpointMeta load_checkpoint(const std::string& path, ParamSet& params);

}  // namespace sekws
