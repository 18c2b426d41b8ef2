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

#include "cmn/config_json.h"

#include <set>

#include "cmn/errors.h"

namespace cmn {
namespace {

using nlohmann::json;

void CheckKeys(const json &j, const std::set<std::string> &known, const char *what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto &item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError(std::string("unknown ") + what + " key '" + item.key() + "'");
    }
  }
}

template <typename T>
void Take(const json &j, const char *key, T &field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json FeaturesJson(const shapeworld::FeatureConfig &f) {
  return {{"mode", f.mode == shapeworld::FeatureMode::kSymbolic ? "symbolic" : "raster"},
          {"raster_size", f.raster_size}};
}

void ApplyFeatures(const json &j, shapeworld::FeatureConfig &f) {
  CheckKeys(j, {"mode", "raster_size"}, "features");
  std::string mode = f.mode == shapeworld::FeatureMode::kSymbolic ? "symbolic" : "raster";
  Take(j, "mode", mode);
  if (mode == "symbolic") {
    f.mode = shapeworld::FeatureMode::kSymbolic;
  } else if (mode == "raster") {
    f.mode = shapeworld::FeatureMode::kRaster;
  } else {
    throw ConfigError("feature mode must be symbolic or raster");
  }
  Take(j, "raster_size", f.raster_size);
  if (f.raster_size < 1) throw ConfigError("raster_size must be positive");
}

}  // namespace

json ToJson(const TrainConfig &c) {
  return {{"supervision", ToString(c.supervision)},
          {"iterations", c.iterations},
          {"learning_rate", c.sgd.learning_rate},
          {"momentum", c.sgd.momentum},
          {"decay_factor", c.sgd.decay_factor},
          {"decay_interval", c.sgd.decay_interval},
          {"dropout_keep", c.dropout_keep},
          {"seed", c.seed},
          {"embedding_dim", c.embedding_dim},
          {"hidden_dim", c.hidden_dim},
          {"average_over_expressions", c.average_over_expressions},
          {"exclude_self_pair", c.exclude_self_pair},
          {"features", FeaturesJson(c.features)},
          {"baseline_target", ToString(c.baseline_target)},
          {"log_interval", c.log_interval},
          {"probe_scenes", c.probe_scenes},
          {"dataset_path", c.dataset_path}};
}

void ApplyJson(const json &j, TrainConfig &c) {
  CheckKeys(j,
            {"supervision", "iterations", "learning_rate", "momentum", "decay_factor",
             "decay_interval", "dropout_keep", "seed", "embedding_dim", "hidden_dim",
             "average_over_expressions", "exclude_self_pair", "features", "baseline_target",
             "log_interval", "probe_scenes", "dataset_path"},
            "train config");
  if (j.contains("supervision")) {
    auto s = ParseSupervision(j.at("supervision").get<std::string>());
    if (!s) throw ConfigError("supervision must be weak or strong");
    c.supervision = *s;
  }
  Take(j, "iterations", c.iterations);
  Take(j, "learning_rate", c.sgd.learning_rate);
  Take(j, "momentum", c.sgd.momentum);
  Take(j, "decay_factor", c.sgd.decay_factor);
  Take(j, "decay_interval", c.sgd.decay_interval);
  Take(j, "dropout_keep", c.dropout_keep);
  Take(j, "seed", c.seed);
  Take(j, "embedding_dim", c.embedding_dim);
  Take(j, "hidden_dim", c.hidden_dim);
  Take(j, "average_over_expressions", c.average_over_expressions);
  Take(j, "exclude_self_pair", c.exclude_self_pair);
  if (j.contains("features")) ApplyFeatures(j.at("features"), c.features);
  if (j.contains("baseline_target")) {
    auto t = ParseGroundTarget(j.at("baseline_target").get<std::string>());
    if (!t) throw ConfigError("baseline_target must be subject or object");
    c.baseline_target = *t;
  }
  Take(j, "log_interval", c.log_interval);
  Take(j, "probe_scenes", c.probe_scenes);
  Take(j, "dataset_path", c.dataset_path);
}

json ToJson(const ModelConfig &c) {
  return {{"kind", ToString(c.kind)},
          {"embedding_dim", c.lang.embedding_dim},
          {"hidden_dim", c.lang.hidden_dim},
          {"dropout_keep", c.lang.dropout_keep},
          {"features", FeaturesJson(c.features)},
          {"palette", c.palette},
          {"grid_size", c.grid_size},
          {"exclude_self_pair", c.exclude_self_pair},
          {"target", ToString(c.target)}};
}

void ApplyJson(const json &j, ModelConfig &c) {
  CheckKeys(j,
            {"kind", "embedding_dim", "hidden_dim", "dropout_keep", "features", "palette",
             "grid_size", "exclude_self_pair", "target"},
            "model config");
  if (j.contains("kind")) {
    auto k = ParseModelKind(j.at("kind").get<std::string>());
    if (!k) throw ConfigError("model kind must be cmn or baseline");
    c.kind = *k;
  }
  Take(j, "embedding_dim", c.lang.embedding_dim);
  Take(j, "hidden_dim", c.lang.hidden_dim);
  Take(j, "dropout_keep", c.lang.dropout_keep);
  if (j.contains("features")) ApplyFeatures(j.at("features"), c.features);
  Take(j, "palette", c.palette);
  Take(j, "grid_size", c.grid_size);
  Take(j, "exclude_self_pair", c.exclude_self_pair);
  if (j.contains("target")) {
    auto t = ParseGroundTarget(j.at("target").get<std::string>());
    if (!t) throw ConfigError("target must be subject or object");
    c.target = *t;
  }
}

json ToJson(const shapeworld::GeneratorConfig &c) {
  return {{"n_scenes", c.n_scenes},
          {"grid_size", c.grid_size},
          {"seed", c.seed},
          {"palette", c.palette},
          {"min_shapes", c.min_shapes},
          {"max_shapes", c.max_shapes},
          {"expressions_per_scene", c.expressions_per_scene},
          {"retry_budget", c.retry_budget},
          {"color_probability", c.color_probability},
          {"size_probability", c.size_probability}};
}

void ApplyJson(const json &j, shapeworld::GeneratorConfig &c) {
  CheckKeys(j,
            {"n_scenes", "grid_size", "seed", "palette", "min_shapes", "max_shapes",
             "expressions_per_scene", "retry_budget", "color_probability",
             "size_probability"},
            "generator config");
  Take(j, "n_scenes", c.n_scenes);
  Take(j, "grid_size", c.grid_size);
  Take(j, "seed", c.seed);
  Take(j, "palette", c.palette);
  Take(j, "min_shapes", c.min_shapes);
  Take(j, "max_shapes", c.max_shapes);
  Take(j, "expressions_per_scene", c.expressions_per_scene);
  Take(j, "retry_budget", c.retry_budget);
  Take(j, "color_probability", c.color_probability);
  Take(j, "size_probability", c.size_probability);
}

}  // namespace cmn
