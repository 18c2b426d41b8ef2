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

#include "cmn/harness.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cmn/checkpoint.h"
#include "cmn/dataset_io.h"
#include "cmn/errors.h"
#include "cmn/grounding.h"

namespace cmn::harness {
namespace {

using nlohmann::json;
using shapeworld::Cell;

json CellJson(const Cell &c) { return json::array({c.row, c.col}); }
json OptCellJson(const std::optional<Cell> &c) { return c ? CellJson(*c) : json(); }
Cell CellOf(const json &j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }
std::optional<Cell> OptCellOf(const json &j) {
  if (j.is_null()) return std::nullopt;
  return CellOf(j);
}

void CheckVocabulary(const Model &model, const shapeworld::Dataset &dataset) {
  std::set<std::string> unknown;
  for (const auto &scene : dataset.scenes)
    for (const auto &expr : scene.expressions)
      for (const std::string &t : model.vocab().UnknownTokens(expr.tokens)) unknown.insert(t);
  if (unknown.empty()) return;
  std::string list;
  for (const std::string &t : unknown) list += (list.empty() ? "'" : ", '") + t + "'";
  throw VocabularyError("dataset uses tokens unknown to the model: " + list);
}

Prediction Predict(const Model &model, const shapeworld::Scene &scene,
                   const grounding::Candidates &candidates,
                   const shapeworld::GroundedExpression &expr) {
  Tape tape(Tape::Mode::kInference);
  Rng unused(0);
  const auto ids = model.vocab().Encode(expr.tokens);
  const ModelOutput out = model.Forward(tape, candidates, ids, false, unused);
  if (model.config().kind == ModelKind::kBaselineLoc) {
    return {scene.CellAt(grounding::ArgMax(out.unary_scores.values())), std::nullopt};
  }
  const grounding::ScoreTable table =
      grounding::MakeScoreTable(out.pair_scores, model.config().exclude_self_pair);
  return {scene.CellAt(table.best_subject()), scene.CellAt(table.best_object())};
}

ExpressionResult Score(const shapeworld::Scene &scene, size_t index,
                       const shapeworld::GroundedExpression &expr, const Prediction &p) {
  ExpressionResult r;
  r.scene_id = scene.scene_id;
  r.expression_index = index;
  r.predicted_subject = p.subject;
  r.predicted_object = p.object;
  r.gt_subject = expr.subject_cell;
  r.gt_object = expr.object_cell;
  r.subject_correct = p.subject == expr.subject_cell;
  if (p.object && expr.object_cell) {
    r.pair_correct = r.subject_correct && *p.object == *expr.object_cell;
  }
  return r;
}

shapeworld::Dataset Head(const shapeworld::Dataset &dataset, size_t n) {
  shapeworld::Dataset out;
  out.grid_size = dataset.grid_size;
  out.palette = dataset.palette;
  out.scenes.assign(dataset.scenes.begin(),
                    dataset.scenes.begin() + std::min(n, dataset.scenes.size()));
  return out;
}

}  // namespace

EvalReport Aggregate(std::vector<ExpressionResult> records) {
  EvalReport report;
  report.n_expressions = records.size();
  size_t subj = 0, pair = 0;
  bool all_pairs = !records.empty();
  for (const ExpressionResult &r : records) {
    subj += r.subject_correct ? 1 : 0;
    if (r.pair_correct) {
      pair += *r.pair_correct ? 1 : 0;
    } else {
      all_pairs = false;
    }
  }
  if (!records.empty()) {
    const double n = static_cast<double>(records.size());
    report.p_at_1_subj = static_cast<double>(subj) / n;
    if (all_pairs) report.p_at_1_pair = static_cast<double>(pair) / n;
  }
  report.has_pair = all_pairs;
  report.records = std::move(records);
  return report;
}

EvalReport EvaluatePredictor(const Predictor &predict, const shapeworld::Dataset &dataset) {
  std::vector<ExpressionResult> records;
  for (const auto &scene : dataset.scenes) {
    for (size_t k = 0; k < scene.expressions.size(); ++k) {
      records.push_back(Score(scene, k, scene.expressions[k], predict(scene, k)));
    }
  }
  return Aggregate(std::move(records));
}

EvalReport Evaluate(const Model &model, const shapeworld::Dataset &dataset) {
  CheckVocabulary(model, dataset);
  std::vector<ExpressionResult> records;
  for (const auto &scene : dataset.scenes) {
    const auto candidates = model.SceneCandidates(scene);
    for (size_t k = 0; k < scene.expressions.size(); ++k) {
      const auto &expr = scene.expressions[k];
      records.push_back(Score(scene, k, expr, Predict(model, scene, candidates, expr)));
    }
  }
  return Aggregate(std::move(records));
}

EvalReport EvaluateBaselinePair(const Model &subject_model, const Model &object_model,
                                const shapeworld::Dataset &dataset) {
  if (subject_model.config().kind != ModelKind::kBaselineLoc ||
      object_model.config().kind != ModelKind::kBaselineLoc) {
    throw ContractViolation("pair baseline needs two localization-only models");
  }
  CheckVocabulary(subject_model, dataset);
  CheckVocabulary(object_model, dataset);
  std::vector<ExpressionResult> records;
  for (const auto &scene : dataset.scenes) {
    const auto subj_candidates = subject_model.SceneCandidates(scene);
    const auto obj_candidates = object_model.SceneCandidates(scene);
    for (size_t k = 0; k < scene.expressions.size(); ++k) {
      const auto &expr = scene.expressions[k];
      Prediction p = Predict(subject_model, scene, subj_candidates, expr);
      p.object = Predict(object_model, scene, obj_candidates, expr).subject;
      records.push_back(Score(scene, k, expr, p));
    }
  }
  return Aggregate(std::move(records));
}

json ToJson(const EvalReport &report) {
  json records = json::array();
  for (const ExpressionResult &r : report.records) {
    records.push_back({{"scene_id", r.scene_id},
                       {"expression_index", r.expression_index},
                       {"predicted_subject", CellJson(r.predicted_subject)},
                       {"predicted_object", OptCellJson(r.predicted_object)},
                       {"gt_subject", CellJson(r.gt_subject)},
                       {"gt_object", OptCellJson(r.gt_object)},
                       {"subject_correct", r.subject_correct},
                       {"pair_correct", r.pair_correct ? json(*r.pair_correct) : json()}});
  }
  return {{"p_at_1_subj", report.p_at_1_subj},
          {"p_at_1_pair", report.has_pair ? json(report.p_at_1_pair) : json()},
          {"n_expressions", report.n_expressions},
          {"records", records}};
}

EvalReport ReportFromJson(const json &j) {
  std::vector<ExpressionResult> records;
  for (const json &r : j.at("records")) {
    ExpressionResult e;
    e.scene_id = r.at("scene_id").get<std::string>();
    e.expression_index = r.at("expression_index").get<size_t>();
    e.predicted_subject = CellOf(r.at("predicted_subject"));
    e.predicted_object = OptCellOf(r.at("predicted_object"));
    e.gt_subject = CellOf(r.at("gt_subject"));
    e.gt_object = OptCellOf(r.at("gt_object"));
    e.subject_correct = r.at("subject_correct").get<bool>();
    if (!r.at("pair_correct").is_null()) e.pair_correct = r.at("pair_correct").get<bool>();
    records.push_back(std::move(e));
  }
  return Aggregate(std::move(records));
}

ExperimentResult RunExperiment(const ExperimentSpec &spec) {
  namespace fs = std::filesystem;
  if (!spec.out_dir.empty()) fs::create_directories(spec.out_dir);
  auto out_path = [&](const char *name) { return (fs::path(spec.out_dir) / name).string(); };

  shapeworld::Dataset dataset;
  if (!spec.dataset_path.empty()) {
    dataset = shapeworld::LoadDataset(spec.dataset_path);
  } else {
    dataset = shapeworld::GenerateDataset(spec.generator);
    if (!spec.out_dir.empty()) shapeworld::SaveDataset(dataset, out_path("dataset.jsonl"));
  }
  const size_t n_test = spec.n_test.value_or(
      shapeworld::TestCountForFraction(dataset.scenes.size(), spec.test_fraction));
  const shapeworld::DatasetSplit split = shapeworld::SplitByHash(dataset, n_test);
  if (split.train.scenes.empty()) throw ConfigError("no training scenes after the split");

  TrainConfig train_config = spec.train;
  if (train_config.dataset_path.empty()) train_config.dataset_path = spec.dataset_path;
  if (spec.model == ModelKind::kBaselineLoc) train_config.baseline_target = GroundTarget::kSubject;

  std::vector<MetricsRecord> metrics;
  std::ofstream metrics_file;
  TrainOptions options;
  options.metrics = &metrics;
  if (!spec.out_dir.empty()) {
    metrics_file.open(out_path("metrics.jsonl"));
    options.metrics_out = &metrics_file;
  }
  const shapeworld::Dataset heldout = Head(split.test, spec.heldout_metric_scenes);
  if (!heldout.scenes.empty()) {
    options.evaluate_heldout = [&heldout](const Model &model) {
      const EvalReport r = Evaluate(model, heldout);
      return HeldoutScores{r.p_at_1_subj, r.has_pair ? r.p_at_1_pair : 0.0};
    };
  }

  Checkpoint checkpoint = Train(train_config, spec.model, split.train, options);
  std::optional<Checkpoint> object_checkpoint;
  EvalReport report;
  if (spec.model == ModelKind::kBaselineLoc && spec.baseline_pair) {
    TrainConfig object_config = train_config;
    object_config.baseline_target = GroundTarget::kObject;
    TrainOptions quiet;
    object_checkpoint = Train(object_config, spec.model, split.train, quiet);
    report = EvaluateBaselinePair(checkpoint.model, object_checkpoint->model, split.test);
  } else {
    report = Evaluate(checkpoint.model, split.test);
  }

  if (!spec.out_dir.empty()) {
    SaveCheckpoint(checkpoint, out_path("checkpoint.cmn"));
    if (object_checkpoint) SaveCheckpoint(*object_checkpoint, out_path("checkpoint_object.cmn"));
    std::ofstream report_file(out_path("report.json"));
    report_file << ToJson(report).dump(2) << '\n';
  }
  return ExperimentResult{std::move(checkpoint), std::move(object_checkpoint), std::move(report),
                          std::move(metrics), split.train.scenes.size(),
                          split.test.scenes.size()};
}

InspectDump Inspect(const Model &model, const shapeworld::Scene &scene,
                    size_t expression_index) {
  if (expression_index >= scene.expressions.size()) {
    throw NotFoundError("scene " + scene.scene_id + " has no expression " +
                        std::to_string(expression_index));
  }
  const auto &expr = scene.expressions[expression_index];
  const auto unknown = model.vocab().UnknownTokens(expr.tokens);
  if (!unknown.empty()) throw VocabularyError("unknown token '" + unknown.front() + "'");
  Tape tape(Tape::Mode::kInference);
  Rng unused(0);
  const auto ids = model.vocab().Encode(expr.tokens);
  const ModelOutput out = model.Forward(tape, model.SceneCandidates(scene), ids, false, unused);

  InspectDump dump;
  dump.scene_id = scene.scene_id;
  dump.expression_index = expression_index;
  dump.model_kind = ToString(model.config().kind);
  dump.tokens = expr.tokens;
  dump.grid_size = scene.grid_size;
  auto copy = [](const Tensor &t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  if (model.config().kind == ModelKind::kBaselineLoc) {
    dump.subj_scores = copy(out.unary_scores);
    dump.predicted_subject = scene.CellAt(grounding::ArgMax(dump.subj_scores));
    return dump;
  }
  const auto table = grounding::MakeScoreTable(out.pair_scores, model.config().exclude_self_pair);
  dump.attention_subj = copy(out.parsed.a_subj);
  dump.attention_rel = copy(out.parsed.a_rel);
  dump.attention_obj = copy(out.parsed.a_obj);
  dump.subj_scores = table.subj_scores;
  dump.obj_scores = table.obj_scores;
  dump.pair_scores = table.pair_scores;
  dump.predicted_subject = scene.CellAt(table.best_subject());
  dump.predicted_object = scene.CellAt(table.best_object());
  return dump;
}

InspectDump Inspect(const Model &model, const shapeworld::Dataset &dataset,
                    const std::string &scene_id, size_t expression_index) {
  const shapeworld::Scene *scene = dataset.FindScene(scene_id);
  if (scene == nullptr) throw NotFoundError("no scene with id " + scene_id);
  return Inspect(model, *scene, expression_index);
}

json ToJson(const InspectDump &d) {
  return {{"scene_id", d.scene_id},
          {"expression_index", d.expression_index},
          {"model", d.model_kind},
          {"tokens", d.tokens},
          {"attention", {{"subj", d.attention_subj}, {"rel", d.attention_rel}, {"obj", d.attention_obj}}},
          {"grid_size", d.grid_size},
          {"subj_scores", d.subj_scores},
          {"obj_scores", d.obj_scores},
          {"pair_scores", d.pair_scores},
          {"predicted_subject", CellJson(d.predicted_subject)},
          {"predicted_object", OptCellJson(d.predicted_object)}};
}

InspectDump DumpFromJson(const json &j) {
  InspectDump d;
  d.scene_id = j.at("scene_id").get<std::string>();
  d.expression_index = j.at("expression_index").get<size_t>();
  d.model_kind = j.at("model").get<std::string>();
  d.tokens = j.at("tokens").get<std::vector<std::string>>();
  const json &a = j.at("attention");
  d.attention_subj = a.at("subj").get<std::vector<double>>();
  d.attention_rel = a.at("rel").get<std::vector<double>>();
  d.attention_obj = a.at("obj").get<std::vector<double>>();
  d.grid_size = j.at("grid_size").get<int>();
  d.subj_scores = j.at("subj_scores").get<std::vector<double>>();
  d.obj_scores = j.at("obj_scores").get<std::vector<double>>();
  d.pair_scores = j.at("pair_scores").get<std::vector<double>>();
  d.predicted_subject = CellOf(j.at("predicted_subject"));
  d.predicted_object = OptCellOf(j.at("predicted_object"));
  return d;
}

namespace {

void RenderGrid(std::ostringstream &out, const char *title, const std::vector<double> &scores,
                int grid) {
  static const char kShades[] = " .:-=+*#%@";
  double lo = scores.front(), hi = scores.front();
  for (double s : scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  out << title << " (min " << lo << ", max " << hi << ")\n";
  for (int r = 0; r < grid; ++r) {
    out << "  ";
    for (int c = 0; c < grid; ++c) {
      const double s = scores[static_cast<size_t>(r * grid + c)];
      const double t = hi > lo ? (s - lo) / (hi - lo) : 0.0;
      const int shade = static_cast<int>(std::lround(t * 9));
      out << kShades[shade] << kShades[shade];
    }
    out << '\n';
  }
}

}  // namespace

std::string RenderText(const InspectDump &d) {
  std::ostringstream out;
  out << "scene " << d.scene_id << " expression " << d.expression_index << " (" << d.model_kind
      << ")\n";
  if (!d.attention_subj.empty()) {
    char line[128];
    std::snprintf(line, sizeof(line), "  %-10s %6s %6s %6s\n", "token", "subj", "rel", "obj");
    out << line;
    for (size_t t = 0; t < d.tokens.size(); ++t) {
      std::snprintf(line, sizeof(line), "  %-10s %6.3f %6.3f %6.3f\n", d.tokens[t].c_str(),
                    d.attention_subj[t], d.attention_rel[t], d.attention_obj[t]);
      out << line;
    }
  } else {
    out << "  tokens:";
    for (const auto &t : d.tokens) out << ' ' << t;
    out << '\n';
  }
  RenderGrid(out, d.attention_subj.empty() ? "s_loc" : "s_subj", d.subj_scores, d.grid_size);
  if (!d.obj_scores.empty()) RenderGrid(out, "s_obj", d.obj_scores, d.grid_size);
  out << "predicted subject (" << d.predicted_subject.row << ", " << d.predicted_subject.col
      << ")";
  if (d.predicted_object) {
    out << ", object (" << d.predicted_object->row << ", " << d.predicted_object->col << ")";
  }
  out << '\n';
  return out.str();
}

}  // namespace cmn::harness
