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

#include "cmn/init.h"

#include <cmath>

#include "cmn/errors.h"

namespace cmn {

double XavierBound(const Shape &shape) {
  if (shape.empty()) throw ContractViolation("xavier init needs rank >= 1");
  double fan_in, fan_out;
  if (shape.size() == 1) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = 1.0;
  } else {
    fan_out = static_cast<double>(shape[shape.size() - 2]);
    fan_in = static_cast<double>(shape[shape.size() - 1]);
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor XavierUniform(const Shape &shape, Rng &rng) {
  const double bound = XavierBound(shape);
  Tensor out(shape);
  for (double &v : out.mutable_values()) v = rng.Uniform(-bound, bound);
  return out;
}

}  // namespace cmn
