// Copyright 2026 The CMN Authors.
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

#include "cmn/optimizer.h"

#include <cmath>

#include "cmn/errors.h"

namespace cmn {

SgdMomentum::SgdMomentum(const SgdConfig &config) {
  if (!(config.learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (!(config.momentum >= 0 && config.momentum < 1)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(config.decay_factor > 0)) throw ConfigError("decay factor must be positive");
  if (config.decay_interval == 0) throw ConfigError("decay interval must be positive");
  state_.config = config;
}

double SgdMomentum::EffectiveLearningRate() const {
  const auto &c = state_.config;
  const double periods = static_cast<double>(state_.step_count / c.decay_interval);
  return c.learning_rate * std::pow(c.decay_factor, periods);
}

void SgdMomentum::Step(ParamSet &params) {
  auto &entries = params.entries();
  if (state_.velocity.empty()) {
    for (const auto &[name, p] : entries) state_.velocity.emplace_back(p.shape());
  }
  if (state_.velocity.size() != entries.size()) {
    throw ContractViolation("optimizer state does not match parameter set");
  }
  const double lr = EffectiveLearningRate();
  const double mu = state_.config.momentum;
  for (size_t k = 0; k < entries.size(); ++k) {
    auto &[name, p] = entries[k];
    if (!p.requires_grad()) throw ContractViolation("parameter " + name + " has no gradient");
    if (state_.velocity[k].shape() != p.shape()) {
      throw ContractViolation("velocity shape mismatch for " + name);
    }
    auto grad = p.grad();
    for (double g : grad) {
      if (!std::isfinite(g)) throw NumericFault("sgd_step", "non-finite gradient in " + name);
    }
    auto vel = state_.velocity[k].mutable_values();
    auto val = p.mutable_values();
    for (size_t i = 0; i < val.size(); ++i) {
      vel[i] = mu * vel[i] - lr * grad[i];
      val[i] += vel[i];
    }
    p.ZeroGrad();
  }
  ++state_.step_count;
}

}  // namespace cmn
