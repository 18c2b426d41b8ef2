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

// cmn: generate shapeworld data, train and evaluate grounding models, and
// inspect their attention and score maps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmn/checkpoint.h"
#include "cmn/config_json.h"
#include "cmn/dataset_io.h"
#include "cmn/errors.h"
#include "cmn/gradcheck.h"
#include "cmn/harness.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Config file layout (every section and key optional):
//   {"generator": {...}, "train": {...},
//    "experiment": {"n_test", "test_fraction", "baseline_pair",
//                   "heldout_metric_scenes"}}
json LoadConfigFile(const std::string &path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw cmn::NotFoundError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw cmn::ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw cmn::ConfigError(path + ": top level must be an object");
  for (const auto &[key, value] : j.items()) {
    if (key != "generator" && key != "train" && key != "experiment") {
      throw cmn::ConfigError(path + ": unknown section '" + key + "'");
    }
  }
  return j;
}

void WriteJsonFile(const fs::path &path, const json &j) {
  std::ofstream out(path);
  if (!out) throw cmn::NotFoundError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out = ".";
};

void AddCommon(CLI::App *app, Common &c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "Random seed (overrides the config)");
  app->add_option("--out", c.out, "Output directory");
}

int RunGenerate(const Common &c, std::optional<size_t> scenes, std::optional<int> grid) {
  const json cfg = LoadConfigFile(c.config);
  cmn::shapeworld::GeneratorConfig gen;
  if (cfg.contains("generator")) cmn::ApplyJson(cfg["generator"], gen);
  if (c.seed) gen.seed = *c.seed;
  if (scenes) gen.n_scenes = *scenes;
  if (grid) gen.grid_size = *grid;
  const auto dataset = cmn::shapeworld::GenerateDataset(gen);
  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / "dataset.jsonl";
  cmn::shapeworld::SaveDataset(dataset, path.string());
  std::printf("wrote %zu scenes (%zu expressions) to %s\n", dataset.scenes.size(),
              dataset.NumExpressions(), path.c_str());
  return 0;
}

struct TrainFlags {
  std::string model = "cmn";
  std::string supervision;
  std::string dataset;
  std::optional<uint64_t> iterations;
  std::optional<size_t> n_test;
  bool baseline_pair = false;
};

int RunTrain(const Common &c, const TrainFlags &f) {
  const json cfg = LoadConfigFile(c.config);
  cmn::harness::ExperimentSpec spec;
  const auto kind = cmn::ParseModelKind(f.model == "baseline" ? "baseline_loc" : f.model);
  if (!kind) throw cmn::ConfigError("unknown model '" + f.model + "'");
  spec.model = *kind;
  if (cfg.contains("generator")) cmn::ApplyJson(cfg["generator"], spec.generator);
  if (cfg.contains("train")) cmn::ApplyJson(cfg["train"], spec.train);
  if (cfg.contains("experiment")) {
    for (const auto &[key, value] : cfg["experiment"].items()) {
      if (key == "n_test") {
        spec.n_test = value.get<size_t>();
      } else if (key == "test_fraction") {
        spec.test_fraction = value.get<double>();
      } else if (key == "baseline_pair") {
        spec.baseline_pair = value.get<bool>();
      } else if (key == "heldout_metric_scenes") {
        spec.heldout_metric_scenes = value.get<size_t>();
      } else {
        throw cmn::ConfigError("unknown experiment key '" + key + "'");
      }
    }
  }
  if (!f.supervision.empty()) {
    const auto s = cmn::ParseSupervision(f.supervision);
    if (!s) throw cmn::ConfigError("unknown supervision '" + f.supervision + "'");
    spec.train.supervision = *s;
  }
  if (c.seed) {
    spec.train.seed = *c.seed;
    spec.generator.seed = *c.seed;
  }
  if (f.iterations) spec.train.iterations = *f.iterations;
  if (f.n_test) spec.n_test = *f.n_test;
  if (f.baseline_pair) spec.baseline_pair = true;
  spec.dataset_path = f.dataset;
  spec.out_dir = c.out;

  const auto result = cmn::harness::RunExperiment(spec);
  std::printf("train scenes %zu, test scenes %zu, test expressions %zu\n", result.n_train_scenes,
              result.n_test_scenes, result.report.n_expressions);
  std::printf("P@1-subj %.4f", result.report.p_at_1_subj);
  if (result.report.has_pair) std::printf("  P@1-pair %.4f", result.report.p_at_1_pair);
  std::printf("\n");
  return 0;
}

int RunEval(const Common &c, const std::string &checkpoint_path,
            const std::string &object_checkpoint_path, const std::string &dataset_path,
            std::optional<size_t> n_test) {
  const auto dataset = cmn::shapeworld::LoadDataset(dataset_path);
  cmn::shapeworld::Dataset split = dataset;
  if (n_test) split = cmn::shapeworld::SplitByHash(dataset, *n_test).test;
  const cmn::Checkpoint checkpoint = cmn::LoadCheckpoint(checkpoint_path);
  cmn::harness::EvalReport report;
  if (!object_checkpoint_path.empty()) {
    const cmn::Checkpoint object = cmn::LoadCheckpoint(object_checkpoint_path);
    report = cmn::harness::EvaluateBaselinePair(checkpoint.model, object.model, split);
  } else {
    report = cmn::harness::Evaluate(checkpoint.model, split);
  }
  fs::create_directories(c.out);
  WriteJsonFile(fs::path(c.out) / "report.json", cmn::harness::ToJson(report));
  std::printf("expressions %zu  P@1-subj %.4f", report.n_expressions, report.p_at_1_subj);
  if (report.has_pair) std::printf("  P@1-pair %.4f", report.p_at_1_pair);
  std::printf("\n");
  return 0;
}

int RunInspect(const Common &c, const std::string &checkpoint_path,
               const std::string &dataset_path, const std::string &scene_id, size_t index) {
  const auto dataset = cmn::shapeworld::LoadDataset(dataset_path);
  const cmn::Checkpoint checkpoint = cmn::LoadCheckpoint(checkpoint_path);
  const auto dump = cmn::harness::Inspect(checkpoint.model, dataset, scene_id, index);
  fs::create_directories(c.out);
  WriteJsonFile(fs::path(c.out) / ("dump-" + scene_id + "-" + std::to_string(index) + ".json"),
                cmn::harness::ToJson(dump));
  std::fputs(cmn::harness::RenderText(dump).c_str(), stdout);
  return 0;
}

int RunGradCheck(const Common &c, const std::string &model, const std::string &supervision,
                 double tolerance) {
  cmn::gradcheck::MicroProblemConfig config;
  if (c.seed) config.seed = *c.seed;
  const auto kind = cmn::ParseModelKind(model == "baseline" ? "baseline_loc" : model);
  if (!kind) throw cmn::ConfigError("unknown model '" + model + "'");
  const auto sup = cmn::ParseSupervision(supervision);
  if (!sup) throw cmn::ConfigError("unknown supervision '" + supervision + "'");
  config.kind = *kind;
  config.supervision = *sup;
  const auto report = cmn::gradcheck::CheckMicroProblem(config);
  for (const auto &t : report.tensors) {
    std::printf("%-20s n=%-5zu max_rel %.3e  max_abs %.3e\n", t.name.c_str(), t.n,
                t.max_rel_error, t.max_abs_error);
  }
  std::printf("checked %zu scalars, max relative error %.3e (tolerance %.1e)\n",
              report.n_checked, report.max_rel_error, tolerance);
  if (!c.out.empty() && c.out != ".") {
    fs::create_directories(c.out);
    WriteJsonFile(fs::path(c.out) / "gradcheck.json", cmn::gradcheck::ToJson(report));
  }
  return report.max_rel_error <= tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Compositional grounding of referring expressions on shapeworld scenes"};
  app.require_subcommand(1);

  Common gen_common, train_common, eval_common, inspect_common, grad_common;

  auto *gen = app.add_subcommand("generate", "Generate a shapeworld dataset");
  AddCommon(gen, gen_common);
  std::optional<size_t> scenes;
  std::optional<int> grid;
  gen->add_option("--scenes", scenes, "Number of scenes");
  gen->add_option("--grid", grid, "Grid size");

  auto *train = app.add_subcommand("train", "Train and evaluate on a held-out split");
  AddCommon(train, train_common);
  TrainFlags tf;
  train->add_option("--model", tf.model, "cmn or baseline")->check(CLI::IsMember({"cmn", "baseline"}));
  train->add_option("--supervision", tf.supervision, "weak or strong")
      ->check(CLI::IsMember({"weak", "strong"}));
  train->add_option("--dataset", tf.dataset, "Dataset file; generated when omitted");
  train->add_option("--iterations", tf.iterations, "Training iterations");
  train->add_option("--n-test", tf.n_test, "Held-out scenes");
  train->add_flag("--baseline-pair", tf.baseline_pair,
                  "Also train an object baseline and report P@1-pair");

  auto *eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  AddCommon(eval, eval_common);
  std::string eval_ckpt, eval_obj_ckpt, eval_data;
  std::optional<size_t> eval_n_test;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--object-checkpoint", eval_obj_ckpt, "Object baseline checkpoint");
  eval->add_option("--dataset", eval_data, "Dataset file")->required();
  eval->add_option("--n-test", eval_n_test, "Evaluate only the held-out split of this size");

  auto *inspect = app.add_subcommand("inspect", "Dump attention and score maps");
  AddCommon(inspect, inspect_common);
  std::string insp_ckpt, insp_data, insp_scene;
  size_t insp_index = 0;
  inspect->add_option("--checkpoint", insp_ckpt, "Checkpoint file")->required();
  inspect->add_option("--dataset", insp_data, "Dataset file")->required();
  inspect->add_option("--scene", insp_scene, "Scene id")->required();
  inspect->add_option("--expression", insp_index, "Expression index");

  auto *grad = app.add_subcommand("grad-check", "Finite-difference gradient check");
  AddCommon(grad, grad_common);
  std::string grad_model = "cmn", grad_sup = "weak";
  double grad_tol = 1e-4;
  grad->add_option("--model", grad_model, "cmn or baseline");
  grad->add_option("--supervision", grad_sup, "weak or strong");
  grad->add_option("--tolerance", grad_tol, "Maximum relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return RunGenerate(gen_common, scenes, grid);
    if (*train) return RunTrain(train_common, tf);
    if (*eval) return RunEval(eval_common, eval_ckpt, eval_obj_ckpt, eval_data, eval_n_test);
    if (*inspect) return RunInspect(inspect_common, insp_ckpt, insp_data, insp_scene, insp_index);
    if (*grad) return RunGradCheck(grad_common, grad_model, grad_sup, grad_tol);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
