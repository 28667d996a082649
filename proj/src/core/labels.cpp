// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/labels.hpp"

#include "core/errors.hpp"

namespace sekws {

const std::array<std::string, kNumClasses>& class_names() {
  static const std::array<std::string, kNumClasses> names = {
      "yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go", "unknown", "silence"};
  return names;
}

int class_index(const std::string& name) {
  const auto& names = class_names();
  for (int i = 0; i < kNumClasses; ++i) {
    if (names[static_cast<size_t>(i)] == name) return i;
  }
  return -1;
}

int class_index_checked(const std::string& name) {
  int idx = class_index(name);
  require(idx >= 0, ErrorKind::BadData, "unknown label: \"" + name + "\"");
  return idx;
}

const std::string& class_name(int index) {
  require(index >= 0 && index < kNumClasses, ErrorKind::InvalidArgument, "class index out of range");
  return class_names()[static_cast<size_t>(index)];
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "validation" || name == "val") return Split::Validation;
  if (name == "test") return Split::Test;
  fail(ErrorKind::BadData, "unknown split: \"" + name + "\"");
}

}  // namespace sekws
