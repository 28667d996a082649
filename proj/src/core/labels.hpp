// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

namespace sekws {

// Fixed 12-way label scheme: ten keywords plus "unknown" and "silence".
constexpr int kNumClasses = 12;
constexpr int kNumKeywordClasses = 10;
constexpr int kUnknownClass = 10;
constexpr int kSilenceClass = 11;

const std::array<std::string, kNumClasses>& class_names();

// Index of a label name, or -1 when the name is not in the class set.
int class_index(const std::string& name);

// Throws BadData on unknown names.
int class_index_checked(const std::string& name);

const std::string& class_name(int index);

enum class Split { Train, Validation, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

}  // namespace sekws
