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

#ifndef CMN_TRAINER_H_
#define CMN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmn/model.h"
#include "cmn/optimizer.h"
#include "cmn/shapeworld.h"

namespace cmn {

enum class Supervision { kWeak, kStrong };
std::string ToString(Supervision s);
std::optional<Supervision> ParseSupervision(const std::string &s);

struct TrainConfig {
  Supervision supervision = Supervision::kWeak;
  uint64_t iterations = 20000;
  // Desk schedule: the reference schedule shape at 1/15 of its length.
  SgdConfig sgd{0.005, 0.95, 0.1, 8000};
  double dropout_keep = 0.7;
  uint64_t seed = 0;
  size_t embedding_dim = 64;
  size_t hidden_dim = 64;
  // Sum per-expression losses in a scene batch unless set.
  bool average_over_expressions = false;
  bool exclude_self_pair = false;
  shapeworld::FeatureConfig features;
  GroundTarget baseline_target = GroundTarget::kSubject;
  // Metrics cadence; 0 disables periodic records (start and end remain).
  uint64_t log_interval = 1000;
  // Training scenes (in dataset order) whose mean loss is reported.
  size_t probe_scenes = 200;
  std::string dataset_path;
};

ModelConfig MakeModelConfig(const TrainConfig &config, ModelKind kind,
                            const shapeworld::Dataset &dataset);

struct Checkpoint {
  TrainConfig train_config;
  Model model;
  OptimizerState optimizer;
};

struct MetricsRecord {
  uint64_t step = 0;
  double lr_eff = 0;
  // Mean per-expression loss over the probe scenes, without dropout.
  double train_loss = 0;
  // Mean loss of the scene batches since the previous record.
  double batch_loss = 0;
  double p_at_1_subj = 0;
  double p_at_1_pair = 0;
  bool has_heldout = false;
};

struct HeldoutScores {
  double p_at_1_subj = 0;
  double p_at_1_pair = 0;
};

struct TrainOptions {
  // Scores a frozen model on held-out data at each metrics record.
  std::function<HeldoutScores(const Model &)> evaluate_heldout;
  // Receives one JSON line per metrics record.
  std::ostream *metrics_out = nullptr;
  std::vector<MetricsRecord> *metrics = nullptr;
};

// Loss of one expression under the configured supervision: strong pairs,
// weak latent-object subjects, or the baseline's softmax over locations.
Tensor ExpressionLoss(Tape &tape, const Model &model, const grounding::Candidates &candidates,
                      const shapeworld::GroundedExpression &expr, Supervision supervision,
                      bool training, Rng &dropout_rng);

// Mean per-expression loss without dropout over the first `max_scenes` scenes.
double MeanLoss(const Model &model, const shapeworld::Dataset &dataset,
                Supervision supervision, size_t max_scenes);

// One scene per batch, scenes reshuffled every epoch from the run seed.
// Throws ConfigError for invalid combinations and NumericFault (with
// iteration and scene id) when the loss stops being finite.
Checkpoint Train(const TrainConfig &config, ModelKind kind,
                 const shapeworld::Dataset &train, const TrainOptions &options = {});

// Continues from an existing checkpoint (e.g. strong fine-tuning of a weakly
// trained model). The new config is recorded in the returned checkpoint.
Checkpoint TrainFrom(Checkpoint start, const TrainConfig &config,
                     const shapeworld::Dataset &train, const TrainOptions &options = {});

}  // namespace cmn

#endif  // CMN_TRAINER_H_
