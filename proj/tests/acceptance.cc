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

// End-to-end acceptance run: prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmn/checkpoint.h"
#include "cmn/errors.h"
#include "cmn/gradcheck.h"
#include "cmn/grounding.h"
#include "cmn/harness.h"
#include "cmn/losses.h"
#include "cmn/ops.h"
#include "oracle.h"

namespace cmn {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

class Ledger {
 public:
  void Record(const std::string &id, bool pass, const std::string &detail) {
    std::printf("%s criterion %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    results_.push_back({{"criterion", id}, {"pass", pass}, {"detail", detail}});
    all_pass_ = all_pass_ && pass;
  }
  bool all_pass() const { return all_pass_; }
  const nlohmann::json &results() const { return results_; }

 private:
  nlohmann::json results_ = nlohmann::json::array();
  bool all_pass_ = true;
};

std::string Format(const char *fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

harness::ExperimentSpec DeskSpec(ModelKind model, Supervision supervision,
                                 const std::filesystem::path &out) {
  harness::ExperimentSpec spec;
  spec.model = model;
  spec.generator.n_scenes = 3500;
  spec.generator.grid_size = 5;
  spec.generator.seed = 1;
  spec.n_test = 500;
  spec.train.supervision = supervision;
  spec.train.seed = 1;
  spec.baseline_pair = model == ModelKind::kBaselineLoc;
  spec.out_dir = out.string();
  return spec;
}

struct Timed {
  harness::ExperimentResult result;
  double seconds;
};

Timed Run(const harness::ExperimentSpec &spec) {
  const auto start = Clock::now();
  harness::ExperimentResult r = harness::RunExperiment(spec);
  return {std::move(r), Seconds(start)};
}

// Criteria 3-6 need no trained model.

void GradientCheck(Ledger &ledger) {
  const auto start = Clock::now();
  gradcheck::MicroProblemConfig config;
  config.seed = 0;
  config.expressions = 2;
  config.candidates = 4;
  const gradcheck::Report r = gradcheck::CheckMicroProblem(config, 1e-5);
  const double secs = Seconds(start);
  std::string worst;
  double worst_err = -1;
  for (const auto &t : r.tensors) {
    if (t.max_rel_error > worst_err) {
      worst_err = t.max_rel_error;
      worst = t.name;
    }
  }
  ledger.Record("3", r.max_rel_error <= 1e-4 && secs <= 60,
                Format("max rel error %.3g (%s) over %zu scalars, %.1f s", r.max_rel_error,
                       worst.c_str(), r.n_checked, secs));
}

void OracleEquivalence(Ledger &ledger) {
  double worst = 0;
  size_t argmax_mismatch = 0;
  const std::vector<std::string> words = {"the", "a",      "red",  "green", "square",
                                          "circle", "left", "of",   "above", "small"};
  const langrep::Vocabulary vocab(words);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(Rng::Derive(7000, seed));
    const size_t n = 1 + rng.UniformInt(6);
    const size_t visual = 1 + rng.UniformInt(8);
    const size_t d_e = 2 + rng.UniformInt(7);
    ParamSet params;
    const auto lang = langrep::MakeLangParams(
        params, vocab.size(), langrep::LangConfig{d_e, 1 + rng.UniformInt(5), 1.0}, rng);
    const auto loc = grounding::MakeLocParams(params, visual, d_e, rng);
    const auto rel = grounding::MakeRelParams(params, d_e, rng);
    oracle::Randomize(params, rng);
    std::vector<size_t> ids(2 + rng.UniformInt(6));
    for (size_t &id : ids) id = rng.UniformInt(vocab.size());
    const auto regions = oracle::RandomRegions(n, visual, rng);

    Tape tape(Tape::Mode::kInference);
    Rng unused(0);
    const auto parsed = langrep::ParseExpression(tape, lang, ids, false, 1.0, unused);
    const Tensor pairs =
        grounding::PairScores(tape, grounding::BuildCandidates(regions), parsed, loc, rel);
    const grounding::ScoreTable table = grounding::MakeScoreTable(pairs);
    const oracle::Table expect =
        oracle::Score(loc, rel, regions, oracle::Values(parsed.q_subj),
                      oracle::Values(parsed.q_rel), oracle::Values(parsed.q_obj));
    for (size_t k = 0; k < n * n; ++k)
      worst = std::max(worst, std::abs(table.pair_scores[k] - expect.pair[k]));
    for (size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(table.subj_scores[i] - expect.subj[i]));
    if (table.best_pair != std::make_pair(expect.best_i, expect.best_j)) ++argmax_mismatch;
  }
  ledger.Record("4", worst <= 1e-12 && argmax_mismatch == 0,
                Format("50 instances, max |diff| %.3g, best_pair mismatches %zu", worst,
                       argmax_mismatch));
}

void AnalyticLosses(Ledger &ledger) {
  Tape tape(Tape::Mode::kInference);
  double worst = 0;
  for (size_t k : {1u, 2u, 5u, 25u}) {
    const double ln_k = std::log(static_cast<double>(k));
    for (double c : {0.0, 1.7, -42.0}) {
      const Tensor subj({k}, std::vector<double>(k, c));
      const Tensor pairs({k, k}, std::vector<double>(k * k, c));
      for (size_t target = 0; target < k; ++target) {
        worst = std::max(worst, std::abs(LossWeak(tape, subj, target).item() - ln_k));
        worst = std::max(worst,
                         std::abs(LossStrong(tape, pairs, target, k - 1 - target).item() -
                                  2 * ln_k));
      }
    }
  }
  ledger.Record("5", worst <= 1e-12,
                Format("K in {1,2,5,25}: max |loss - ln K| or |loss - 2 ln K| = %.3g", worst));
}

void NormalizationInvariants(Ledger &ledger) {
  shapeworld::GeneratorConfig g;
  g.n_scenes = 20;
  g.seed = 11;
  const shapeworld::Dataset data = shapeworld::GenerateDataset(g);
  TrainConfig tc;
  double attn_err = 0, norm_err = 0, min_attn = INFINITY;
  size_t zero_rows = 0;
  for (uint64_t pass = 0; pass < 100; ++pass) {
    Rng rng(Rng::Derive(8000, pass));
    const Model model(MakeModelConfig(tc, ModelKind::kCmn, data),
                      langrep::Vocabulary(shapeworld::TemplateVocabulary(data.palette)),
                      Rng::Derive(8100, pass));
    const auto &scene = data.scenes[pass % data.scenes.size()];
    const auto &expr = scene.expressions[pass % scene.expressions.size()];
    const auto candidates = model.SceneCandidates(scene);
    Tape tape(Tape::Mode::kInference);
    const bool training = pass % 2 == 1;
    const ModelOutput out =
        model.Forward(tape, candidates, model.vocab().Encode(expr.tokens), training, rng);
    for (const Tensor *a : {&out.parsed.a_subj, &out.parsed.a_rel, &out.parsed.a_obj}) {
      double sum = 0;
      for (double v : a->values()) {
        sum += v;
        min_attn = std::min(min_attn, v);
      }
      attn_err = std::max(attn_err, std::abs(sum - 1.0));
    }
    const Tensor z_subj =
        grounding::LocEmbedding(tape, candidates.regions, out.parsed.q_subj, model.loc());
    const Tensor z_obj =
        grounding::LocEmbedding(tape, candidates.regions, out.parsed.q_obj, model.loc());
    const Tensor z_rel =
        grounding::RelEmbedding(tape, candidates.pair_spatial, out.parsed.q_rel, model.rel());
    for (const Tensor *z : {&z_subj, &z_obj, &z_rel}) {
      const size_t rows = z->dim(0), cols = z->dim(1);
      for (size_t r = 0; r < rows; ++r) {
        double sq = 0;
        for (size_t c = 0; c < cols; ++c) sq += z->at(r, c) * z->at(r, c);
        if (sq == 0) {
          ++zero_rows;
        } else {
          norm_err = std::max(norm_err, std::abs(std::sqrt(sq) - 1.0));
        }
      }
    }
  }
  ledger.Record("6", attn_err <= 1e-9 && min_attn >= 0 && norm_err <= 1e-9,
                Format("100 passes: max |sum a - 1| %.3g, min weight %.3g, max |norm - 1| "
                       "%.3g, exact-zero rows %zu",
                       attn_err, min_attn, norm_err, zero_rows));
}

grounding::ScoreTable ProbeTable(const Model &model, const shapeworld::Scene &scene,
                                 size_t e) {
  Tape tape(Tape::Mode::kInference);
  Rng unused(0);
  const auto out = model.Forward(tape, model.SceneCandidates(scene),
                                 model.vocab().Encode(scene.expressions[e].tokens), false,
                                 unused);
  return grounding::MakeScoreTable(out.pair_scores, model.config().exclude_self_pair);
}

bool RejectsWithFormatError(const std::string &bytes) {
  std::istringstream in(bytes);
  try {
    ReadCheckpoint(in);
  } catch (const FormatError &) {
    return true;
  }
  return false;
}

void CheckpointRoundTrip(Ledger &ledger, const Checkpoint &ckpt,
                         const shapeworld::Dataset &data, const std::filesystem::path &dir) {
  const auto path = dir / "roundtrip.cmn";
  SaveCheckpoint(ckpt, path.string());
  const Checkpoint back = LoadCheckpoint(path.string());
  size_t compared = 0, mismatched = 0;
  for (size_t s = 0; s < std::min<size_t>(data.scenes.size(), 25); ++s) {
    const auto &scene = data.scenes[s];
    for (size_t e = 0; e < scene.expressions.size(); ++e) {
      const auto a = ProbeTable(ckpt.model, scene, e);
      const auto b = ProbeTable(back.model, scene, e);
      const bool same = a.best_pair == b.best_pair &&
                        std::memcmp(a.pair_scores.data(), b.pair_scores.data(),
                                    a.pair_scores.size() * sizeof(double)) == 0 &&
                        std::memcmp(a.subj_scores.data(), b.subj_scores.data(),
                                    a.subj_scores.size() * sizeof(double)) == 0;
      ++compared;
      mismatched += same ? 0 : 1;
    }
  }
  std::ostringstream raw;
  WriteCheckpoint(ckpt, raw);
  const std::string good = raw.str();
  std::string bad_magic = good, bad_version = good, bad_json = good;
  bad_magic[1] = 'Z';
  bad_version[4] = 7;
  bad_json[16] = '!';
  const std::vector<std::pair<std::string, std::string>> corrupt = {
      {"magic", bad_magic},
      {"version", bad_version},
      {"snapshot", bad_json},
      {"truncated", good.substr(0, good.size() * 2 / 3)},
      {"truncated-tail", good.substr(0, good.size() - 8)},
      {"trailing", good + std::string(3, '\0')}};
  size_t rejected = 0;
  std::string missed;
  for (const auto &[name, bytes] : corrupt) {
    if (RejectsWithFormatError(bytes)) {
      ++rejected;
    } else {
      missed += " " + name;
    }
  }
  ledger.Record("8", mismatched == 0 && compared > 0 && rejected == corrupt.size(),
                Format("%zu probe tables bitwise equal (%zu differ); %zu/%zu corrupted files "
                       "rejected%s",
                       compared - mismatched, mismatched, rejected, corrupt.size(),
                       missed.empty() ? "" : (" missed:" + missed).c_str()));
}

void InspectSpan(Ledger &ledger, const Model &model) {
  using shapeworld::Cell;
  using shapeworld::ShapeClass;
  using shapeworld::SizeClass;
  shapeworld::Scene scene;
  scene.scene_id = "handcrafted";
  scene.grid_size = model.config().grid_size;
  scene.cells[{1, 3}] = {ShapeClass::kSquare, "green", SizeClass::kLarge};
  scene.cells[{1, 1}] = {ShapeClass::kCircle, "red", SizeClass::kSmall};
  scene.cells[{3, 0}] = {ShapeClass::kSquare, "green", SizeClass::kSmall};
  scene.cells[{3, 4}] = {ShapeClass::kCircle, "blue", SizeClass::kLarge};
  scene.cells[{0, 2}] = {ShapeClass::kTriangle, "yellow", SizeClass::kSmall};
  scene.cells[{4, 2}] = {ShapeClass::kCircle, "red", SizeClass::kLarge};
  shapeworld::Description subj{"the", ShapeClass::kSquare, "green", std::nullopt};
  shapeworld::Description obj{"a", ShapeClass::kCircle, "red", std::nullopt};
  const auto expr =
      shapeworld::GroundExpression(scene, subj, shapeworld::Relation::kRightOf, obj);
  if (!expr) {
    ledger.Record("inspect", false, "handcrafted scene does not ground uniquely");
    return;
  }
  scene.expressions.push_back(*expr);
  const harness::InspectDump dump = harness::Inspect(model, scene, 0);
  std::string phrase;
  double span = 0;
  std::string weights;
  for (size_t t = 0; t < dump.tokens.size(); ++t) {
    phrase += (t ? " " : "") + dump.tokens[t];
    weights += Format(" %s=%.3f", dump.tokens[t].c_str(), dump.attention_rel[t]);
    if (dump.tokens[t] == "right" || dump.tokens[t] == "of") span += dump.attention_rel[t];
  }
  const bool grounded = dump.predicted_subject == expr->subject_cell;
  ledger.Record("inspect", span >= 0.5,
                Format("\"%s\": relationship weight on \"right of\" %.3f (%s), subject %s",
                       phrase.c_str(), span, weights.c_str() + 1,
                       grounded ? "correct" : "wrong"));
}

int Main(int argc, char **argv) {
  CLI::App app("Acceptance run for the compositional grounding model");
  std::string work_dir = "acceptance_out";
  app.add_option("--work-dir", work_dir, "Directory for run artifacts");
  CLI11_PARSE(app, argc, argv);
  const std::filesystem::path dir(work_dir);
  std::filesystem::create_directories(dir);

  Ledger ledger;
  GradientCheck(ledger);
  OracleEquivalence(ledger);
  AnalyticLosses(ledger);
  NormalizationInvariants(ledger);

  const Timed weak = Run(DeskSpec(ModelKind::kCmn, Supervision::kWeak, dir / "weak"));
  const Timed base = Run(DeskSpec(ModelKind::kBaselineLoc, Supervision::kWeak, dir / "baseline"));
  const double cmn_p = weak.result.report.p_at_1_subj;
  const double base_p = base.result.report.p_at_1_subj;
  ledger.Record(
      "1", cmn_p >= 0.95 && base_p <= 0.65 && cmn_p - base_p >= 0.30 && weak.seconds <= 1800,
      Format("split %zu/%zu scenes, %zu test expressions; CMN P@1-subj %.4f (%.0f s), "
             "baseline P@1-subj %.4f (%.0f s), gap %.4f",
             weak.result.n_train_scenes, weak.result.n_test_scenes,
             weak.result.report.n_expressions, cmn_p, weak.seconds, base_p, base.seconds,
             cmn_p - base_p));

  const Timed strong = Run(DeskSpec(ModelKind::kCmn, Supervision::kStrong, dir / "strong"));
  const double weak_pair = weak.result.report.p_at_1_pair;
  const double strong_pair = strong.result.report.p_at_1_pair;
  ledger.Record("2", strong_pair >= 0.90 && strong_pair >= weak_pair - 0.02,
                Format("strong P@1-pair %.4f, weak P@1-pair %.4f, baseline P@1-pair %.4f",
                       strong_pair, weak_pair, base.result.report.p_at_1_pair));

  const auto &metrics = weak.result.metrics;
  bool finite = !metrics.empty();
  for (const auto &m : metrics)
    finite = finite && std::isfinite(m.train_loss) && std::isfinite(m.batch_loss);
  for (const auto &m : strong.result.metrics)
    finite = finite && std::isfinite(m.train_loss) && std::isfinite(m.batch_loss);
  const double first = metrics.empty() ? 0 : metrics.front().train_loss;
  const double last = metrics.empty() ? 0 : metrics.back().train_loss;
  ledger.Record("7", finite && last <= 0.5 * first,
                Format("train loss %.4f at step 0, %.4g at step %llu; %zu logged steps finite",
                       first, last,
                       static_cast<unsigned long long>(metrics.empty() ? 0 : metrics.back().step),
                       metrics.size()));

  shapeworld::GeneratorConfig probe_gen;
  probe_gen.n_scenes = 25;
  probe_gen.seed = 99;
  CheckpointRoundTrip(ledger, weak.result.checkpoint, shapeworld::GenerateDataset(probe_gen),
                      dir);

  InspectSpan(ledger, weak.result.checkpoint.model);

  const Timed weak_again = Run(DeskSpec(ModelKind::kCmn, Supervision::kWeak, ""));
  const Timed base_again = Run(DeskSpec(ModelKind::kBaselineLoc, Supervision::kWeak, ""));
  const bool same_cmn = weak_again.result.report == weak.result.report;
  const bool same_base = base_again.result.report == base.result.report;
  ledger.Record("9", same_cmn && same_base,
                Format("rerun EvalReports identical: CMN %s, baseline %s",
                       same_cmn ? "yes" : "no", same_base ? "yes" : "no"));

  std::ofstream summary(dir / "acceptance.json");
  summary << ledger.results().dump(2) << '\n';
  return ledger.all_pass() ? 0 : 1;
}

}  // namespace
}  // namespace cmn

int main(int argc, char **argv) {
  try {
    return cmn::Main(argc, argv);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
