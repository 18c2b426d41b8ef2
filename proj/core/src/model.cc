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

#include "cmn/model.h"

#include <algorithm>

#include "cmn/errors.h"

namespace cmn {

std::string ToString(ModelKind kind) {
  return kind == ModelKind::kCmn ? "cmn" : "baseline";
}

std::string ToString(GroundTarget target) {
  return target == GroundTarget::kSubject ? "subject" : "object";
}

std::optional<ModelKind> ParseModelKind(const std::string &s) {
  if (s == "cmn") return ModelKind::kCmn;
  if (s == "baseline" || s == "baseline_loc") return ModelKind::kBaselineLoc;
  return std::nullopt;
}

std::optional<GroundTarget> ParseGroundTarget(const std::string &s) {
  if (s == "subject") return GroundTarget::kSubject;
  if (s == "object") return GroundTarget::kObject;
  return std::nullopt;
}

namespace {

std::vector<shapeworld::RegionFeatures> GridFeatures(const shapeworld::Scene &scene,
                                                     const ModelConfig &config) {
  std::vector<shapeworld::RegionFeatures> out;
  out.reserve(scene.NumCandidates());
  for (size_t k = 0; k < scene.NumCandidates(); ++k) {
    out.push_back(shapeworld::ComputeRegionFeatures(scene, scene.CellAt(k), config.palette,
                                                    config.features));
  }
  return out;
}

}  // namespace

Model::Model(ModelConfig config, langrep::Vocabulary vocab, uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  if (vocab_.size() == 0) throw ConfigError("model vocabulary is empty");
  if (config_.lang.embedding_dim == 0 || config_.lang.hidden_dim == 0) {
    throw ConfigError("embedding and hidden sizes must be positive");
  }
  if (config_.grid_size < 1) throw ConfigError("grid size must be positive");
  Rng rng(seed);
  if (config_.kind == ModelKind::kCmn) {
    lang_ = langrep::MakeLangParams(params_, vocab_.size(), config_.lang, rng);
  } else {
    baseline_lang_ = langrep::MakeLastStateParams(params_, vocab_.size(), config_.lang, rng);
  }
  loc_ = grounding::MakeLocParams(params_, config_.VisualDim(), config_.lang.embedding_dim,
                                  rng);
  if (config_.kind == ModelKind::kCmn) {
    rel_ = grounding::MakeRelParams(params_, config_.lang.embedding_dim, rng);
    shapeworld::Scene grid;
    grid.grid_size = config_.grid_size;
    pair_spatial_ = grounding::PairSpatialMatrix(GridFeatures(grid, config_));
  }
}

Model Model::Clone() const {
  Model copy(config_, vocab_, 0);
  copy.CopyParametersFrom(params_);
  return copy;
}

void Model::CopyParametersFrom(const ParamSet &other) {
  if (other.size() != params_.size()) {
    throw ContractViolation("parameter sets differ in size");
  }
  for (auto &[name, tensor] : params_.entries()) {
    const Tensor source = other.Get(name);
    if (source.shape() != tensor.shape()) {
      throw ContractViolation("shape mismatch for parameter " + name);
    }
    std::copy(source.values().begin(), source.values().end(),
              tensor.mutable_values().begin());
  }
}

grounding::Candidates Model::SceneCandidates(const shapeworld::Scene &scene) const {
  if (scene.grid_size != config_.grid_size) {
    throw ContractViolation("scene grid size does not match the model");
  }
  const auto features = GridFeatures(scene, config_);
  grounding::Candidates out;
  out.regions = grounding::RegionMatrix(features);
  out.pair_spatial = pair_spatial_;
  return out;
}

ModelOutput Model::Forward(Tape &tape, const grounding::Candidates &candidates,
                           std::span<const size_t> ids, bool training,
                           Rng &dropout_rng) const {
  if (ids.empty()) throw ContractViolation("empty expression");
  ModelOutput out;
  if (config_.kind == ModelKind::kBaselineLoc) {
    const Tensor q = langrep::EncodeLastState(tape, baseline_lang_, ids);
    out.unary_scores = grounding::LocScores(tape, candidates.regions, q, loc_);
    return out;
  }
  out.parsed = langrep::ParseExpression(tape, lang_, ids, training,
                                        config_.lang.dropout_keep, dropout_rng);
  out.pair_scores = grounding::PairScores(tape, candidates, out.parsed, loc_, rel_);
  out.unary_scores = grounding::SubjectScores(tape, out.pair_scores, config_.exclude_self_pair);
  return out;
}

}  // namespace cmn
