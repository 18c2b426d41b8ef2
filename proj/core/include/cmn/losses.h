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

#ifndef CMN_LOSSES_H_
#define CMN_LOSSES_H_

#include <cstddef>

#include "cmn/tape.h"
#include "cmn/tensor.h"

namespace cmn {

// -log softmax over all |B|^2 pairs, evaluated at (subject, object). With
// exclude_self_pair the diagonal pairs leave the partition function.
Tensor LossStrong(Tape &tape, const Tensor &pair_scores, size_t subject, size_t object,
                  bool exclude_self_pair = false);

// -log softmax over candidates of the unary subject scores at `subject`. The
// object is latent: the scores come from a max over object candidates.
Tensor LossWeak(Tape &tape, const Tensor &subj_scores, size_t subject);

}  // namespace cmn

#endif  // CMN_LOSSES_H_
