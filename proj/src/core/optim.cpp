// Copyright (c) 2026 sekws authors
// SPDX-License-Identifier: Apache-2.0

#include "core/optim.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace sekws {

double lr_schedule(int64_t step, int64_t total_steps, int64_t warmup_steps, double peak_lr) {
  require(total_steps > 0, ErrorKind::InvalidArgument, "lr_schedule: total_steps must be positive");
  require(warmup_steps >= 0 && warmup_steps < total_steps, ErrorKind::InvalidArgument,
          "lr_schedule: need 0 <= warmup_steps < total_steps");
  require(step >= 0 && step <= total_steps, ErrorKind::InvalidArgument,
          "lr_schedule: step out of range");
  require(peak_lr >= 0.0, ErrorKind::InvalidArgument, "lr_schedule: negative peak_lr");
  if (step < warmup_steps) {
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  double progress = static_cast<double>(step - warmup_steps) /
                    static_cast<double>(total_steps - warmup_steps);
  return peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

void sgd_step(ParamSet& params, double lr, double momentum, double weight_decay) {
  require(std::isfinite(lr) && lr >= 0.0, ErrorKind::InvalidArgument, "sgd_step: bad lr");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::InvalidArgument,
          "sgd_step: momentum must lie in [0,1)");
  require(weight_decay >= 0.0, ErrorKind::InvalidArgument, "sgd_step: negative weight_decay");
  for (size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = params[i];
    if (p.frozen) continue;
    double* value = p.value.data();
    double* grad = p.grad.data();
    double* vel = p.velocity.data();
    for (int64_t j = 0; j < p.value.size(); ++j) {
      double g = grad[j] + weight_decay * value[j];
      require(std::isfinite(g), ErrorKind::Numeric, "sgd_step: non-finite gradient in " + p.name);
      vel[j] = momentum * vel[j] + g;
      value[j] -= lr * vel[j];
    }
  }
}

}  // namespace sekws
