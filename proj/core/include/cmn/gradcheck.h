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

#ifndef CMN_GRADCHECK_H_
#define CMN_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmn/model.h"
#include "cmn/params.h"
#include "cmn/tape.h"
#include "cmn/trainer.h"

namespace cmn::gradcheck {

// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double RelativeError(double analytic, double numeric, double floor);

struct TensorCheck {
  std::string name;
  size_t n = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
};

struct Report {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0;
  size_t n_checked = 0;
};

// Builds a scalar loss from the current parameter values. Must be
// deterministic, so any dropout rng has to be recreated on every call.
using LossFn = std::function<Tensor(Tape &)>;

inline constexpr double kDefaultStep = 1e-5;
// Central differences of an O(1) loss carry about one ulp / (2h) ~ 2e-11 of
// rounding noise, so gradients smaller than this floor are compared in
// absolute terms (1e-9 at the 1e-4 tolerance).
inline constexpr double kDefaultFloor = 1e-5;

// Compares tape gradients against central differences for every scalar of
// every parameter. Parameter values are restored afterwards.
Report Check(ParamSet &params, const LossFn &loss, double h = kDefaultStep,
             double floor = kDefaultFloor);

struct MicroProblemConfig {
  uint64_t seed = 0;
  ModelKind kind = ModelKind::kCmn;
  Supervision supervision = Supervision::kWeak;
  size_t candidates = 4;
  size_t expressions = 2;
  // Fixed expression length; 0 draws lengths in [3, 6].
  size_t tokens = 0;
  size_t embedding_dim = 4;
  size_t hidden_dim = 3;
  // Dropout stays on with a fixed mask per evaluation when < 1.
  double dropout_keep = 0.7;
};

// A seeded model on random candidate features with random token sequences.
Report CheckMicroProblem(const MicroProblemConfig &config, double h = kDefaultStep,
                         double floor = kDefaultFloor);

nlohmann::json ToJson(const Report &report);

}  // namespace cmn::gradcheck

#endif  // CMN_GRADCHECK_H_
