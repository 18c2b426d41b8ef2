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

#ifndef CMN_TAPE_H_
#define CMN_TAPE_H_

#include <functional>
#include <string>
#include <vector>

#include "cmn/tensor.h"

namespace cmn {

// Define-by-run record of differentiable operations.
//
// Operations append themselves in execution order, so the record is already
// topologically sorted; Backward() walks it once in reverse. A tape belongs to
// one model instance and is not thread-safe. An inference tape records
// nothing, so ops on it produce tensors without gradients.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }
  size_t size() const { return records_.size(); }

  // True when an op over `inputs` must produce a differentiable output.
  bool ShouldRecord(std::initializer_list<const Tensor *> inputs) const;
  bool ShouldRecord(const std::vector<Tensor> &inputs) const;

  void Record(std::string op, std::vector<Tensor> inputs,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1, accumulates gradients into every tensor that
  // requires them, then clears the tape.
  void Backward(Tensor &loss);

  void Clear() { records_.clear(); }

 private:
  struct Entry {
    std::string op;
    std::vector<Tensor> inputs;
    std::function<void()> backward;
  };

  Mode mode_;
  std::vector<Entry> records_;
};

}  // namespace cmn

#endif  // CMN_TAPE_H_
