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

#ifndef CMN_CHECKPOINT_H_
#define CMN_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include "cmn/trainer.h"

namespace cmn {

inline constexpr uint32_t kCheckpointVersion = 1;

// Binary layout, little-endian:
//   "CMN1", u32 version,
//   u64 length + JSON snapshot {model_config, train_config, vocabulary,
//                               step_count, format_version},
//   u64 tensor count, then per tensor: u64 length + name, u64 rank,
//       rank x u64 extents, f64 values;
//   u64 velocity count, then velocity tensors in the same record layout,
//       keyed by parameter name.
void WriteCheckpoint(const Checkpoint &checkpoint, std::ostream &out);
void SaveCheckpoint(const Checkpoint &checkpoint, const std::string &path);

// Throws FormatError on bad magic, version or truncation; nothing is returned
// unless the whole file parses.
Checkpoint ReadCheckpoint(std::istream &in);
Checkpoint LoadCheckpoint(const std::string &path);

}  // namespace cmn

#endif  // CMN_CHECKPOINT_H_
