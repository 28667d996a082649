// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "core/params.hpp"

namespace sekws {

// Linear warmup from 0 to peak_lr over warmup_steps, then cosine annealing
// back to 0 at total_steps. Continuous at the junction (both sides = peak_lr).
double lr_schedule(int64_t step, int64_t total_steps, int64_t warmup_steps, double peak_lr);

// Momentum SGD with L2 weight decay folded into the gradient:
// v <- momentum*v + (grad + weight_decay*value); value <- value - lr*v.
// Frozen tensors are skipped entirely, so value, velocity, and even a stale
// grad stay bit-identical.
void sgd_step(ParamSet& params, double lr, double momentum, double weight_decay);

}  // namespace sekws
