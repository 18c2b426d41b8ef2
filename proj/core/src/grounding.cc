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

#include "cmn/grounding.h"

#include "cmn/errors.h"
#include "cmn/init.h"
#include "cmn/ops.h"

namespace cmn::grounding {

LocParams MakeLocParams(ParamSet &params, size_t visual_dim, size_t embedding_dim,
                        Rng &rng) {
  LocParams p;
  p.w_vs = params.Add("loc.w_vs",
                      XavierUniform({embedding_dim, visual_dim + kSpatialDim}, rng));
  p.b_vs = params.Add("loc.b_vs", Tensor({embedding_dim}));
  p.w_loc = params.Add("loc.w_loc", XavierUniform({embedding_dim}, rng));
  p.b_loc = params.Add("loc.b_loc", Tensor({1}));
  return p;
}

RelParams MakeRelParams(ParamSet &params, size_t embedding_dim, Rng &rng) {
  RelParams p;
  p.w_s1s2 = params.Add("rel.w_s1s2", XavierUniform({embedding_dim, 2 * kSpatialDim}, rng));
  p.b_s1s2 = params.Add("rel.b_s1s2", Tensor({embedding_dim}));
  p.w_rel = params.Add("rel.w_rel", XavierUniform({embedding_dim}, rng));
  p.b_rel = params.Add("rel.b_rel", Tensor({1}));
  return p;
}

Tensor RegionMatrix(std::span<const shapeworld::RegionFeatures> regions) {
  if (regions.empty()) throw ContractViolation("candidate set is empty");
  const size_t dv = regions.front().visual.size();
  const size_t cols = dv + kSpatialDim;
  Tensor out({regions.size(), cols});
  auto v = out.mutable_values();
  for (size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].visual.size() != dv) {
      throw ContractViolation("candidate visual features differ in length");
    }
    std::copy(regions[i].visual.begin(), regions[i].visual.end(), v.begin() + i * cols);
    std::copy(regions[i].spatial.begin(), regions[i].spatial.end(),
              v.begin() + i * cols + dv);
  }
  return out;
}

Tensor PairSpatialMatrix(std::span<const shapeworld::RegionFeatures> regions) {
  if (regions.empty()) throw ContractViolation("candidate set is empty");
  const size_t n = regions.size();
  Tensor out({n * n, 2 * kSpatialDim});
  auto v = out.mutable_values();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      double *row = v.data() + (i * n + j) * 2 * kSpatialDim;
      std::copy(regions[i].spatial.begin(), regions[i].spatial.end(), row);
      std::copy(regions[j].spatial.begin(), regions[j].spatial.end(), row + kSpatialDim);
    }
  return out;
}

Candidates BuildCandidates(std::span<const shapeworld::RegionFeatures> regions) {
  return {RegionMatrix(regions), PairSpatialMatrix(regions)};
}

namespace {

Tensor Embedding(Tape &tape, const Tensor &inputs, const Tensor &q, const Tensor &w,
                 const Tensor &b) {
  if (q.rank() != 1 || q.dim(0) != w.dim(0)) {
    throw ContractViolation("query of shape " + ShapeString(q.shape()) +
                            " does not match embedding size " + std::to_string(w.dim(0)));
  }
  const Tensor joint = MulRowVector(tape, Linear(tape, inputs, w, b), q);
  return L2Normalize(tape, joint, kNormEpsilon);
}

Tensor AsRow(const shapeworld::RegionFeatures &r) {
  return RegionMatrix(std::span<const shapeworld::RegionFeatures>(&r, 1));
}

}  // namespace

Tensor LocEmbedding(Tape &tape, const Tensor &regions, const Tensor &q,
                    const LocParams &theta) {
  return Embedding(tape, regions, q, theta.w_vs, theta.b_vs);
}

Tensor RelEmbedding(Tape &tape, const Tensor &pair_spatial, const Tensor &q,
                    const RelParams &theta) {
  return Embedding(tape, pair_spatial, q, theta.w_s1s2, theta.b_s1s2);
}

Tensor LocScores(Tape &tape, const Tensor &regions, const Tensor &q,
                 const LocParams &theta) {
  return AddScalar(tape, MatVec(tape, LocEmbedding(tape, regions, q, theta), theta.w_loc),
                   theta.b_loc);
}

Tensor RelScores(Tape &tape, const Tensor &pair_spatial, const Tensor &q,
                 const RelParams &theta) {
  return AddScalar(tape,
                   MatVec(tape, RelEmbedding(tape, pair_spatial, q, theta), theta.w_rel),
                   theta.b_rel);
}

Tensor LocScore(Tape &tape, const shapeworld::RegionFeatures &region, const Tensor &q,
                const LocParams &theta) {
  return LocScores(tape, AsRow(region), q, theta);
}

Tensor RelScore(Tape &tape, const shapeworld::RegionFeatures &first,
                const shapeworld::RegionFeatures &second, const Tensor &q,
                const RelParams &theta) {
  std::vector<double> row(first.spatial.begin(), first.spatial.end());
  row.insert(row.end(), second.spatial.begin(), second.spatial.end());
  return RelScores(tape, Tensor({1, 2 * kSpatialDim}, std::move(row)), q, theta);
}

Tensor PairScore(Tape &tape, const shapeworld::RegionFeatures &subject,
                 const shapeworld::RegionFeatures &object,
                 const langrep::ParsedExpression &parsed, const LocParams &loc,
                 const RelParams &rel) {
  return Add(tape,
             Add(tape, LocScore(tape, subject, parsed.q_subj, loc),
                 LocScore(tape, object, parsed.q_obj, loc)),
             RelScore(tape, subject, object, parsed.q_rel, rel));
}

Tensor PairScores(Tape &tape, const Candidates &candidates,
                  const langrep::ParsedExpression &parsed, const LocParams &loc,
                  const RelParams &rel) {
  const size_t n = candidates.size();
  if (candidates.pair_spatial.dim(0) != n * n) {
    throw ContractViolation("pair features do not match the candidate count");
  }
  const Tensor subj = LocScores(tape, candidates.regions, parsed.q_subj, loc);
  const Tensor obj = LocScores(tape, candidates.regions, parsed.q_obj, loc);
  const Tensor relation = RelScores(tape, candidates.pair_spatial, parsed.q_rel, rel);
  return Add(tape, OuterSum(tape, subj, obj), Reshape(tape, relation, {n, n}));
}

Tensor SubjectScores(Tape &tape, const Tensor &pair_scores, bool exclude_self_pair) {
  return MaxOverAxis(tape, pair_scores, 1, exclude_self_pair);
}

size_t ArgMax(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("argmax of an empty range");
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

ScoreTable MakeScoreTable(const Tensor &pair_scores, bool exclude_self_pair) {
  if (pair_scores.rank() != 2 || pair_scores.dim(0) != pair_scores.dim(1)) {
    throw ContractViolation("pair scores must be a square matrix");
  }
  Tape inference(Tape::Mode::kInference);
  ScoreTable table;
  table.n = pair_scores.dim(0);
  table.pair_scores.assign(pair_scores.values().begin(), pair_scores.values().end());
  std::vector<size_t> best_objects;
  const Tensor subj = MaxOverAxis(inference, pair_scores, 1, exclude_self_pair, &best_objects);
  const Tensor obj = MaxOverAxis(inference, pair_scores, 0, exclude_self_pair);
  table.subj_scores.assign(subj.values().begin(), subj.values().end());
  table.obj_scores.assign(obj.values().begin(), obj.values().end());
  const size_t i = ArgMax(table.subj_scores);
  table.best_pair = {i, best_objects[i]};
  return table;
}

}  // namespace cmn::grounding
