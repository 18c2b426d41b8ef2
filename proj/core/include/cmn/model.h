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

#ifndef CMN_MODEL_H_
#define CMN_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "cmn/grounding.h"
#include "cmn/langrep.h"
#include "cmn/params.h"
#include "cmn/shapeworld.h"
#include "cmn/tape.h"

namespace cmn {

enum class ModelKind { kCmn, kBaselineLoc };
// Which ground-truth cell a localization-only baseline is trained to find.
enum class GroundTarget { kSubject, kObject };

std::string ToString(ModelKind kind);
std::string ToString(GroundTarget target);
std::optional<ModelKind> ParseModelKind(const std::string &s);
std::optional<GroundTarget> ParseGroundTarget(const std::string &s);

struct ModelConfig {
  ModelKind kind = ModelKind::kCmn;
  langrep::LangConfig lang;
  shapeworld::FeatureConfig features;
  std::vector<std::string> palette = shapeworld::DefaultPalette();
  int grid_size = 5;
  bool exclude_self_pair = false;
  GroundTarget target = GroundTarget::kSubject;

  size_t VisualDim() const {
    return shapeworld::VisualFeatureSize(features, palette.size());
  }
};

struct ModelOutput {
  langrep::ParsedExpression parsed;  // full model only
  Tensor pair_scores;                // [B, B], full model only
  // [B]: s_subj for the full model, s_loc for the baseline.
  Tensor unary_scores;
};

// Full compositional model (language parser + localization + relationship
// modules) or the localization-only baseline with a last-state encoder.
// Parameter names are prefixed "lang.", "loc." and "rel."; the baseline has
// no "rel." parameters.
class Model {
 public:
  Model(ModelConfig config, langrep::Vocabulary vocab, uint64_t seed);
  Model(Model &&) = default;
  Model &operator=(Model &&) = default;
  Model(const Model &) = delete;
  Model &operator=(const Model &) = delete;

  // Deep copy of every parameter.
  Model Clone() const;

  const ModelConfig &config() const { return config_; }
  const langrep::Vocabulary &vocab() const { return vocab_; }
  ParamSet &params() { return params_; }
  const ParamSet &params() const { return params_; }
  const langrep::LangParams &lang() const { return lang_; }
  const langrep::LastStateParams &baseline_lang() const { return baseline_lang_; }
  const grounding::LocParams &loc() const { return loc_; }
  const grounding::RelParams &rel() const { return rel_; }

  grounding::Candidates SceneCandidates(const shapeworld::Scene &scene) const;

  ModelOutput Forward(Tape &tape, const grounding::Candidates &candidates,
                      std::span<const size_t> ids, bool training, Rng &dropout_rng) const;

  // Copies values from `other` by parameter name; shapes must match.
  void CopyParametersFrom(const ParamSet &other);

 private:
  ModelConfig config_;
  langrep::Vocabulary vocab_;
  ParamSet params_;
  langrep::LangParams lang_;
  langrep::LastStateParams baseline_lang_;
  grounding::LocParams loc_;
  grounding::RelParams rel_;
  Tensor pair_spatial_;
};

}  // namespace cmn

#endif  // CMN_MODEL_H_
