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

#include "cmn/params.h"

#include "cmn/errors.h"

namespace cmn {

Tensor ParamSet::Add(const std::string &name, Tensor value) {
  if (Contains(name)) throw ContractViolation("duplicate parameter " + name);
  value.set_requires_grad(true);
  entries_.emplace_back(name, value);
  return value;
}

Tensor ParamSet::Get(const std::string &name) const {
  for (const auto &[key, tensor] : entries_) {
    if (key == name) return tensor;
  }
  throw NotFoundError("no parameter named " + name);
}

bool ParamSet::Contains(const std::string &name) const {
  for (const auto &entry : entries_) {
    if (entry.first == name) return true;
  }
  return false;
}

void ParamSet::ZeroGrad() {
  for (auto &entry : entries_) entry.second.ZeroGrad();
}

size_t ParamSet::NumScalars() const {
  size_t n = 0;
  for (const auto &entry : entries_) n += entry.second.size();
  return n;
}

}  // namespace cmn
