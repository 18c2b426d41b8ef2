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

#include "cmn/tape.h"

#include <cmath>

#include "cmn/errors.h"

namespace cmn {

bool Tape::ShouldRecord(std::initializer_list<const Tensor *> inputs) const {
  if (!recording()) return false;
  for (const Tensor *t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

bool Tape::ShouldRecord(const std::vector<Tensor> &inputs) const {
  if (!recording()) return false;
  for (const Tensor &t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

void Tape::Record(std::string op, std::vector<Tensor> inputs,
                  std::function<void()> backward) {
  records_.push_back({std::move(op), std::move(inputs), std::move(backward)});
}

void Tape::Backward(Tensor &loss) {
  if (loss.size() != 1) {
    throw ContractViolation("backward needs a scalar loss, got shape " +
                            ShapeString(loss.shape()));
  }
  if (records_.empty() || !loss.requires_grad()) {
    throw ContractViolation("backward on an empty tape");
  }
  loss.mutable_grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->backward();
  }
  for (const Entry &entry : records_) {
    for (const Tensor &input : entry.inputs) {
      if (!input.requires_grad()) continue;
      for (double g : input.grad()) {
        if (!std::isfinite(g)) {
          records_.clear();
          throw NumericFault("backward of " + entry.op, "non-finite gradient");
        }
      }
    }
  }
  records_.clear();
}

}  // namespace cmn
