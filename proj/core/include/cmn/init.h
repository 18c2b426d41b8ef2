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

#ifndef CMN_INIT_H_
#define CMN_INIT_H_

#include "cmn/random.h"
#include "cmn/tensor.h"

namespace cmn {

// sqrt(6 / (fan_in + fan_out)) where fan_out, fan_in are the last two
// extents of `shape`; a vector of length n has fan_in = n, fan_out = 1.
double XavierBound(const Shape &shape);

// Uniform in [-XavierBound, +XavierBound].
Tensor XavierUniform(const Shape &shape, Rng &rng);

}  // namespace cmn

#endif  // CMN_INIT_H_
