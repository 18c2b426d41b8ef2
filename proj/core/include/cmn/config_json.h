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

#ifndef CMN_CONFIG_JSON_H_
#define CMN_CONFIG_JSON_H_

#include <nlohmann/json.hpp>

#include "cmn/model.h"
#include "cmn/shapeworld.h"
#include "cmn/trainer.h"

// JSON mapping of the configuration structs. Apply* functions override only
// the keys present and reject unknown keys with ConfigError, so a config file
// may be partial.
namespace cmn {

nlohmann::json ToJson(const TrainConfig &config);
void ApplyJson(const nlohmann::json &j, TrainConfig &config);

nlohmann::json ToJson(const ModelConfig &config);
void ApplyJson(const nlohmann::json &j, ModelConfig &config);

nlohmann::json ToJson(const shapeworld::GeneratorConfig &config);
void ApplyJson(const nlohmann::json &j, shapeworld::GeneratorConfig &config);

}  // namespace cmn

#endif  // CMN_CONFIG_JSON_H_
