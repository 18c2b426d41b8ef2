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

#ifndef CMN_PARAMS_H_
#define CMN_PARAMS_H_

#include <string>
#include <utility>
#include <vector>

#include "cmn/tensor.h"

namespace cmn {

// Ordered collection of named trainable tensors. Registration order is the
// canonical order for optimizer state and checkpoints.
class ParamSet {
 public:
  // Registers `value` under `name` and turns on its gradient.
  Tensor Add(const std::string &name, Tensor value);

  const std::vector<std::pair<std::string, Tensor>> &entries() const {
    return entries_;
  }
  std::vector<std::pair<std::string, Tensor>> &entries() { return entries_; }
  size_t size() const { return entries_.size(); }

  // Throws NotFoundError for unknown names.
  Tensor Get(const std::string &name) const;
  bool Contains(const std::string &name) const;

  void ZeroGrad();
  size_t NumScalars() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace cmn

#endif  // CMN_PARAMS_H_
