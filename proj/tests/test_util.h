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

#ifndef CMN_TESTS_TEST_UTIL_H_
#define CMN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cmn/gradcheck.h"
#include "cmn/ops.h"
#include "cmn/params.h"
#include "cmn/random.h"
#include "cmn/tape.h"
#include "cmn/tensor.h"

namespace cmn::testing {

inline Tensor RandomTensor(const Shape &shape, Rng &rng, bool requires_grad = true,
                           double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(NumElements(shape));
  for (double &x : v) x = rng.Uniform(lo, hi);
  return Tensor(shape, std::move(v), requires_grad);
}

// Scalar probe sum(t * w) with fixed random weights, so every output entry
// gets a distinct upstream gradient.
inline Tensor Probe(Tape &tape, const Tensor &t, uint64_t seed) {
  Rng rng(seed);
  Tensor w = RandomTensor(t.shape(), rng, false);
  return Sum(tape, Mul(tape, t, w));
}

// Max relative finite-difference error of `f` with respect to `inputs`.
inline double OpGradError(std::vector<Tensor> inputs,
                          const std::function<Tensor(Tape &, const std::vector<Tensor> &)> &f,
                          double floor = 1e-8, uint64_t probe_seed = 99) {
  ParamSet params;
  for (size_t i = 0; i < inputs.size(); ++i) params.Add("in" + std::to_string(i), inputs[i]);
  auto loss = [&](Tape &tape) { return Probe(tape, f(tape, inputs), probe_seed); };
  return gradcheck::Check(params, loss, 1e-5, floor).max_rel_error;
}

// Sequential reference for sum of exp(x - max), log taken afterwards.
inline double LogSumExp(const std::vector<double> &x) {
  double m = x.front();
  for (double v : x) m = std::max(m, v);
  double s = 0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace cmn::testing

#endif  // CMN_TESTS_TEST_UTIL_H_
