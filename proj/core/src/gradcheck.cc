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

#include "cmn/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "cmn/errors.h"
#include "cmn/grounding.h"
#include "cmn/losses.h"
#include "cmn/ops.h"
#include "cmn/random.h"

namespace cmn::gradcheck {

double RelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

Report Check(ParamSet &params, const LossFn &loss, double h, double floor) {
  if (!(h > 0)) throw ContractViolation("finite-difference step must be positive");
  params.ZeroGrad();
  {
    Tape tape;
    Tensor l = loss(tape);
    tape.Backward(l);
  }
  auto evaluate = [&loss]() {
    Tape tape(Tape::Mode::kInference);
    return loss(tape).item();
  };

  Report report;
  for (auto &[name, tensor] : params.entries()) {
    TensorCheck check{name, tensor.size(), 0, 0};
    std::vector<double> analytic(tensor.grad().begin(), tensor.grad().end());
    std::span<double> values = tensor.mutable_values();
    for (size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = evaluate();
      values[k] = saved - h;
      const double down = evaluate();
      values[k] = saved;
      const double numeric = (up - down) / (2 * h);
      check.max_abs_error = std::max(check.max_abs_error, std::abs(analytic[k] - numeric));
      check.max_rel_error =
          std::max(check.max_rel_error, RelativeError(analytic[k], numeric, floor));
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.n_checked += check.n;
    report.tensors.push_back(std::move(check));
  }
  params.ZeroGrad();
  return report;
}

Report CheckMicroProblem(const MicroProblemConfig &config, double h, double floor) {
  if (config.candidates < 2) throw ConfigError("micro-problem needs at least two candidates");
  Rng rng(Rng::Derive(config.seed, 7));

  ModelConfig mc;
  mc.kind = config.kind;
  mc.lang = {config.embedding_dim, config.hidden_dim, config.dropout_keep};
  mc.target = GroundTarget::kSubject;
  std::vector<std::string> words = {"the", "a", "red", "blue", "circle", "square", "left", "of"};
  Model model(mc, langrep::Vocabulary(words), Rng::Derive(config.seed, 0));

  std::vector<shapeworld::RegionFeatures> regions(config.candidates);
  for (auto &r : regions) {
    r.visual.resize(mc.VisualDim());
    for (double &v : r.visual) v = rng.Uniform(-1, 1);
    for (double &v : r.spatial) v = rng.Uniform(-1, 1);
  }
  const grounding::Candidates candidates = grounding::BuildCandidates(regions);

  struct Target {
    std::vector<size_t> ids;
    size_t subject, object;
  };
  std::vector<Target> targets;
  for (size_t e = 0; e < config.expressions; ++e) {
    Target t;
    const size_t len = config.tokens > 0 ? config.tokens : 3 + rng.UniformInt(4);
    for (size_t i = 0; i < len; ++i) t.ids.push_back(rng.UniformInt(words.size()));
    t.subject = rng.UniformInt(config.candidates);
    t.object = (t.subject + 1 + rng.UniformInt(config.candidates - 1)) % config.candidates;
    targets.push_back(std::move(t));
  }

  const bool training = config.dropout_keep < 1.0;
  const uint64_t dropout_seed = Rng::Derive(config.seed, 8);
  LossFn loss = [&](Tape &tape) {
    Rng dropout(dropout_seed);
    Tensor total;
    for (const Target &t : targets) {
      const ModelOutput out = model.Forward(tape, candidates, t.ids, training, dropout);
      Tensor l;
      if (config.kind == ModelKind::kBaselineLoc) {
        l = CrossEntropyWithLogits(tape, out.unary_scores, t.subject);
      } else if (config.supervision == Supervision::kStrong) {
        l = LossStrong(tape, out.pair_scores, t.subject, t.object);
      } else {
        l = LossWeak(tape, out.unary_scores, t.subject);
      }
      total = total.defined() ? Add(tape, total, l) : l;
    }
    return total;
  };
  return Check(model.params(), loss, h, floor);
}

nlohmann::json ToJson(const Report &report) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const TensorCheck &t : report.tensors) {
    tensors.push_back({{"name", t.name},
                       {"n", t.n},
                       {"max_rel_error", t.max_rel_error},
                       {"max_abs_error", t.max_abs_error}});
  }
  return {{"max_rel_error", report.max_rel_error},
          {"n_checked", report.n_checked},
          {"tensors", tensors}};
}

}  // namespace cmn::gradcheck
