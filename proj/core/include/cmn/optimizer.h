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

#ifndef CMN_OPTIMIZER_H_
#define CMN_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "cmn/params.h"
#include "cmn/tensor.h"

namespace cmn {

struct SgdConfig {
  double learning_rate = 0.005;
  double momentum = 0.95;
  double decay_factor = 0.1;
  uint64_t decay_interval = 120000;
};

// Velocity buffers are aligned with the ParamSet registration order.
struct OptimizerState {
  SgdConfig config;
  uint64_t step_count = 0;
  std::vector<Tensor> velocity;
};

// Momentum SGD with step decay:
//   v <- momentum * v - lr_eff * grad;  p <- p + v
// where lr_eff = lr * decay_factor^floor(step / decay_interval).
class SgdMomentum {
 public:
  explicit SgdMomentum(const SgdConfig &config);

  double EffectiveLearningRate() const;

  // Applies one update to every parameter, zeroes the gradients and advances
  // the step count. The first call sizes the velocity buffers.
  void Step(ParamSet &params);

  const OptimizerState &state() const { return state_; }
  OptimizerState &mutable_state() { return state_; }

 private:
  OptimizerState state_;
};

}  // namespace cmn

#endif  // CMN_OPTIMIZER_H_
