// Copyright 2026 The fedgs-sim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>

#include "fedgs/errors.hpp"
#include "fedgs/segnet.hpp"

namespace fedgs {

enum class OptimizerKind { SGD, AdamW };

struct OptimizerHyper {
  OptimizerKind kind = OptimizerKind::AdamW;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("optimizer: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ValidationError("optimizer: betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("optimizer: epsilon must be > 0");
    if (!(weight_decay >= 0.0)) throw ValidationError("optimizer: weight_decay must be >= 0");
  }
};

/// Moments are sized only for AdamW; SGD keeps them empty.
struct OptimizerState {
  OptimizerHyper hyper;
  ParamVector first_moment;
  ParamVector second_moment;
  std::uint64_t step = 0;

  static OptimizerState fresh(const OptimizerHyper& h, std::size_t n_params) {
    OptimizerState s{h, {}, {}, 0};
    if (h.kind == OptimizerKind::AdamW) {
      s.first_moment = ParamVector(n_params);
      s.second_moment = ParamVector(n_params);
    }
    return s;
  }
};

/**
 * @brief One optimizer update in place.
 *
 * SGD: p -= lr * g.
 * AdamW (decoupled decay, bias corrected):
 *   p -= lr * wd * p;  m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2;
 *   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
 */
inline void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad) {
  require_same_length(params, grad, "optimizer_step");
  const auto& hp = state.hyper;
  ++state.step;
  if (hp.kind == OptimizerKind::SGD) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= hp.learning_rate * grad[i];
    return;
  }
  require_same_length(params, state.first_moment, "optimizer_step (moments)");
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hp.beta1, t);
  const double bc2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= hp.learning_rate * hp.weight_decay * params[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * grad[i];
    v = hp.beta2 * v + (1.0 - hp.beta2) * grad[i] * grad[i];
    params[i] -= hp.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + hp.epsilon);
  }
}

}  // namespace fedgs
