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

#include "cmn/trainer.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "cmn/errors.h"
#include "cmn/losses.h"
#include "cmn/ops.h"

namespace cmn {

std::string ToString(Supervision s) { return s == Supervision::kWeak ? "weak" : "strong"; }

std::optional<Supervision> ParseSupervision(const std::string &s) {
  if (s == "weak") return Supervision::kWeak;
  if (s == "strong") return Supervision::kStrong;
  return std::nullopt;
}

ModelConfig MakeModelConfig(const TrainConfig &config, ModelKind kind,
                            const shapeworld::Dataset &dataset) {
  ModelConfig mc;
  mc.kind = kind;
  mc.lang.embedding_dim = config.embedding_dim;
  mc.lang.hidden_dim = config.hidden_dim;
  mc.lang.dropout_keep = config.dropout_keep;
  mc.features = config.features;
  mc.palette = dataset.palette;
  mc.grid_size = dataset.grid_size;
  mc.exclude_self_pair = config.exclude_self_pair;
  mc.target = config.baseline_target;
  return mc;
}

namespace {

langrep::Vocabulary BuildVocabulary(const shapeworld::Dataset &dataset) {
  std::set<std::string> words;
  for (const std::string &w : shapeworld::TemplateVocabulary(dataset.palette)) words.insert(w);
  for (const auto &scene : dataset.scenes)
    for (const auto &expr : scene.expressions) words.insert(expr.tokens.begin(), expr.tokens.end());
  return langrep::Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

void ValidateConfig(const TrainConfig &config, const ModelConfig &model,
                    const shapeworld::Dataset &train) {
  if (train.scenes.empty()) throw ConfigError("training set is empty");
  if (!(config.dropout_keep > 0 && config.dropout_keep <= 1)) {
    throw ConfigError("dropout_keep must lie in (0, 1]");
  }
  if (model.kind == ModelKind::kBaselineLoc && config.supervision == Supervision::kStrong) {
    throw ConfigError(
        "the localization-only baseline scores single regions and cannot use strong "
        "pair supervision");
  }
  const bool needs_object =
      config.supervision == Supervision::kStrong ||
      (model.kind == ModelKind::kBaselineLoc && model.target == GroundTarget::kObject);
  if (needs_object && !train.HasObjectGroundTruth()) {
    throw ConfigError("training needs object ground truth but the dataset lacks it");
  }
  if (train.grid_size != model.grid_size || train.palette != model.palette) {
    throw ConfigError("dataset grid or palette differs from the model");
  }
}

nlohmann::json MetricsJson(const MetricsRecord &r) {
  nlohmann::json j = {{"step", r.step},
                      {"lr_eff", r.lr_eff},
                      {"train_loss", r.train_loss},
                      {"batch_loss", r.batch_loss},
                      {"p_at_1_subj", nullptr},
                      {"p_at_1_pair", nullptr}};
  if (r.has_heldout) {
    j["p_at_1_subj"] = r.p_at_1_subj;
    j["p_at_1_pair"] = r.p_at_1_pair;
  }
  return j;
}

struct PreparedScene {
  const shapeworld::Scene *scene;
  grounding::Candidates candidates;
  std::vector<std::vector<size_t>> ids;
};

}  // namespace

Tensor ExpressionLoss(Tape &tape, const Model &model, const grounding::Candidates &candidates,
                      const shapeworld::GroundedExpression &expr, Supervision supervision,
                      bool training, Rng &dropout_rng) {
  const auto ids = model.vocab().Encode(expr.tokens);
  const int grid = model.config().grid_size;
  auto index = [grid](const shapeworld::Cell &c) {
    return static_cast<size_t>(c.row) * grid + static_cast<size_t>(c.col);
  };
  const ModelOutput out = model.Forward(tape, candidates, ids, training, dropout_rng);
  if (model.config().kind == ModelKind::kBaselineLoc) {
    if (model.config().target == GroundTarget::kObject) {
      if (!expr.object_cell) throw ConfigError("expression lacks an object cell");
      return CrossEntropyWithLogits(tape, out.unary_scores, index(*expr.object_cell));
    }
    return CrossEntropyWithLogits(tape, out.unary_scores, index(expr.subject_cell));
  }
  if (supervision == Supervision::kStrong) {
    if (!expr.object_cell) throw ConfigError("strong supervision needs an object cell");
    return LossStrong(tape, out.pair_scores, index(expr.subject_cell),
                      index(*expr.object_cell), model.config().exclude_self_pair);
  }
  return LossWeak(tape, out.unary_scores, index(expr.subject_cell));
}

double MeanLoss(const Model &model, const shapeworld::Dataset &dataset,
                Supervision supervision, size_t max_scenes) {
  Tape tape(Tape::Mode::kInference);
  Rng unused(0);
  double total = 0;
  size_t count = 0;
  const size_t n = std::min(max_scenes, dataset.scenes.size());
  for (size_t s = 0; s < n; ++s) {
    const auto &scene = dataset.scenes[s];
    const auto candidates = model.SceneCandidates(scene);
    for (const auto &expr : scene.expressions) {
      total += ExpressionLoss(tape, model, candidates, expr, supervision, false, unused).item();
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

Checkpoint Train(const TrainConfig &config, ModelKind kind, const shapeworld::Dataset &train,
                 const TrainOptions &options) {
  const ModelConfig model_config = MakeModelConfig(config, kind, train);
  ValidateConfig(config, model_config, train);
  Checkpoint start{config, Model(model_config, BuildVocabulary(train), Rng::Derive(config.seed, 0)),
                   OptimizerState{}};
  start.optimizer.config = config.sgd;
  return TrainFrom(std::move(start), config, train, options);
}

Checkpoint TrainFrom(Checkpoint start, const TrainConfig &config,
                     const shapeworld::Dataset &train, const TrainOptions &options) {
  Model &model = start.model;
  ValidateConfig(config, model.config(), train);
  start.train_config = config;

  SgdMomentum optimizer(config.sgd);
  const uint64_t first_step = start.optimizer.step_count;
  optimizer.mutable_state().step_count = first_step;
  optimizer.mutable_state().velocity = std::move(start.optimizer.velocity);

  std::vector<PreparedScene> scenes;
  scenes.reserve(train.scenes.size());
  for (const auto &scene : train.scenes) {
    PreparedScene p{&scene, model.SceneCandidates(scene), {}};
    for (const auto &expr : scene.expressions) p.ids.push_back(model.vocab().Encode(expr.tokens));
    scenes.push_back(std::move(p));
  }

  Rng order_rng(Rng::Derive(config.seed, 1000 + first_step));
  Rng dropout_rng(Rng::Derive(config.seed, 2000 + first_step));
  std::vector<size_t> order(scenes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size();

  double window_loss = 0;
  uint64_t window_batches = 0;
  auto emit = [&](uint64_t step) {
    MetricsRecord r;
    r.step = step;
    r.lr_eff = optimizer.EffectiveLearningRate();
    r.train_loss = MeanLoss(model, train, config.supervision, config.probe_scenes);
    if (!std::isfinite(r.train_loss)) {
      throw NumericFault("train", "probe loss is not finite at step " + std::to_string(step));
    }
    r.batch_loss = window_batches == 0 ? r.train_loss : window_loss / window_batches;
    if (options.evaluate_heldout) {
      const HeldoutScores h = options.evaluate_heldout(model);
      r.p_at_1_subj = h.p_at_1_subj;
      r.p_at_1_pair = h.p_at_1_pair;
      r.has_heldout = true;
    }
    window_loss = 0;
    window_batches = 0;
    if (options.metrics_out) *options.metrics_out << MetricsJson(r).dump() << '\n';
    if (options.metrics) options.metrics->push_back(r);
  };

  emit(first_step);
  for (uint64_t k = 0; k < config.iterations; ++k) {
    if (cursor == order.size()) {
      order_rng.Shuffle(order);
      cursor = 0;
    }
    const PreparedScene &batch = scenes[order[cursor++]];
    if (batch.scene->expressions.empty()) continue;
    const uint64_t step = optimizer.state().step_count;
    try {
      Tape tape;
      Tensor total;
      for (const auto &expr : batch.scene->expressions) {
        Tensor loss = ExpressionLoss(tape, model, batch.candidates, expr, config.supervision,
                                     true, dropout_rng);
        total = total.defined() ? Add(tape, total, loss) : loss;
      }
      if (config.average_over_expressions) {
        total = Scale(tape, total, 1.0 / static_cast<double>(batch.scene->expressions.size()));
      }
      window_loss += total.item();
      ++window_batches;
      tape.Backward(total);
      optimizer.Step(model.params());
    } catch (const NumericFault &e) {
      throw NumericFault("train", "iteration " + std::to_string(step) + ", scene " +
                                      batch.scene->scene_id + ": " + e.what());
    }
    const uint64_t done = optimizer.state().step_count;
    const bool last = k + 1 == config.iterations;
    if (last || (config.log_interval > 0 && (done - first_step) % config.log_interval == 0)) {
      emit(done);
    }
  }

  start.optimizer = optimizer.state();
  return start;
}

}  // namespace cmn
