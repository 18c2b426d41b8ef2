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

#include "cmn/losses.h"

#include <vector>

#include "cmn/errors.h"
#include "cmn/ops.h"

namespace cmn {

Tensor LossStrong(Tape &tape, const Tensor &pair_scores, size_t subject, size_t object,
                  bool exclude_self_pair) {
  if (pair_scores.rank() != 2 || pair_scores.dim(0) != pair_scores.dim(1)) {
    throw ContractViolation("loss_strong: pair scores must be square");
  }
  const size_t n = pair_scores.dim(0);
  if (subject >= n || object >= n) {
    throw ContractViolation("loss_strong: ground-truth index out of range");
  }
  const Tensor flat = Reshape(tape, pair_scores, {n * n});
  if (!exclude_self_pair) return CrossEntropyWithLogits(tape, flat, subject * n + object);
  if (subject == object) {
    throw ContractViolation("loss_strong: ground-truth pair is a self pair");
  }
  std::vector<uint8_t> allowed(n * n, 1);
  for (size_t i = 0; i < n; ++i) allowed[i * n + i] = 0;
  return CrossEntropyWithLogits(tape, flat, subject * n + object, allowed);
}

Tensor LossWeak(Tape &tape, const Tensor &subj_scores, size_t subject) {
  if (subj_scores.rank() != 1) throw ContractViolation("loss_weak: scores must be a vector");
  if (subject >= subj_scores.size()) {
    throw ContractViolation("loss_weak: ground-truth index out of range");
  }
  return CrossEntropyWithLogits(tape, subj_scores, subject);
}

}  // namespace cmn
