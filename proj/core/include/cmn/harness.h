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

#ifndef CMN_HARNESS_H_
#define CMN_HARNESS_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmn/model.h"
#include "cmn/shapeworld.h"
#include "cmn/trainer.h"

namespace cmn::harness {

struct ExpressionResult {
  std::string scene_id;
  size_t expression_index = 0;
  shapeworld::Cell predicted_subject;
  std::optional<shapeworld::Cell> predicted_object;
  shapeworld::Cell gt_subject;
  std::optional<shapeworld::Cell> gt_object;
  bool subject_correct = false;
  // Set when both a predicted and a ground-truth object exist.
  std::optional<bool> pair_correct;
  bool operator==(const ExpressionResult &) const = default;
};

struct EvalReport {
  double p_at_1_subj = 0;
  // Meaningful only when has_pair.
  double p_at_1_pair = 0;
  bool has_pair = false;
  size_t n_expressions = 0;
  std::vector<ExpressionResult> records;
  bool operator==(const EvalReport &) const = default;
};

// Recomputes the aggregates as the mean of the per-expression flags.
// has_pair requires every record to carry a pair flag.
EvalReport Aggregate(std::vector<ExpressionResult> records);

struct Prediction {
  shapeworld::Cell subject;
  std::optional<shapeworld::Cell> object;
};

using Predictor =
    std::function<Prediction(const shapeworld::Scene &scene, size_t expression_index)>;

// Scores any predictor against the stored ground truth.
EvalReport EvaluatePredictor(const Predictor &predict, const shapeworld::Dataset &dataset);

// Grounds every expression: the full model takes the best pair of its score
// table; the baseline takes the argmax location and predicts no object.
// Throws VocabularyError listing every token the model does not know.
EvalReport Evaluate(const Model &model, const shapeworld::Dataset &dataset);

// Pair precision for the baseline: one model trained on subjects, one on
// objects, predictions combined.
EvalReport EvaluateBaselinePair(const Model &subject_model, const Model &object_model,
                                const shapeworld::Dataset &dataset);

nlohmann::json ToJson(const EvalReport &report);
EvalReport ReportFromJson(const nlohmann::json &j);

struct ExperimentSpec {
  ModelKind model = ModelKind::kCmn;
  TrainConfig train;
  // Loaded when set; otherwise the data is generated from `generator`.
  std::string dataset_path;
  shapeworld::GeneratorConfig generator;
  // Held-out scenes; when unset, test_fraction of the dataset.
  std::optional<size_t> n_test;
  double test_fraction = 0.1;
  // For the baseline, also train an object-target model to report P@1-pair.
  bool baseline_pair = false;
  // Held-out scenes scored at each metrics record (0 disables).
  size_t heldout_metric_scenes = 200;
  // When set: dataset.jsonl (if generated), checkpoint.cmn,
  // checkpoint_object.cmn (baseline pair), metrics.jsonl and report.json.
  std::string out_dir;
};

struct ExperimentResult {
  Checkpoint checkpoint;
  std::optional<Checkpoint> object_checkpoint;
  EvalReport report;
  std::vector<MetricsRecord> metrics;
  size_t n_train_scenes = 0;
  size_t n_test_scenes = 0;
};

ExperimentResult RunExperiment(const ExperimentSpec &spec);

// Everything needed to look at one grounding decision: per-token attention,
// score maps over the grid and the chosen pair.
struct InspectDump {
  std::string scene_id;
  size_t expression_index = 0;
  std::string model_kind;
  std::vector<std::string> tokens;
  // Full model only.
  std::vector<double> attention_subj, attention_rel, attention_obj;
  int grid_size = 0;
  // Row-major over grid cells: s_subj for the full model, s_loc for the
  // baseline.
  std::vector<double> subj_scores;
  // Full model only: max over subjects of the pair scores, and the pair
  // matrix itself.
  std::vector<double> obj_scores;
  std::vector<double> pair_scores;
  shapeworld::Cell predicted_subject;
  std::optional<shapeworld::Cell> predicted_object;
  bool operator==(const InspectDump &) const = default;
};

// Throws NotFoundError when the scene or expression does not exist.
InspectDump Inspect(const Model &model, const shapeworld::Scene &scene,
                    size_t expression_index);
InspectDump Inspect(const Model &model, const shapeworld::Dataset &dataset,
                    const std::string &scene_id, size_t expression_index);

nlohmann::json ToJson(const InspectDump &dump);
InspectDump DumpFromJson(const nlohmann::json &j);

// Plain-text view: attention table and score grids (higher score, darker
// glyph).
std::string RenderText(const InspectDump &dump);

}  // namespace cmn::harness

#endif  // CMN_HARNESS_H_
