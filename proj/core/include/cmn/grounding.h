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

#ifndef CMN_GROUNDING_H_
#define CMN_GROUNDING_H_

#include <span>
#include <utility>
#include <vector>

#include "cmn/langrep.h"
#include "cmn/params.h"
#include "cmn/random.h"
#include "cmn/shapeworld.h"
#include "cmn/tape.h"
#include "cmn/tensor.h"

namespace cmn::grounding {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr size_t kSpatialDim = 5;

struct LocParams {
  Tensor w_vs;   // [d_e, visual + 5]
  Tensor b_vs;   // [d_e]
  Tensor w_loc;  // [d_e]
  Tensor b_loc;  // [1]
};

struct RelParams {
  Tensor w_s1s2;  // [d_e, 10]
  Tensor b_s1s2;  // [d_e]
  Tensor w_rel;   // [d_e]
  Tensor b_rel;   // [1]
};

LocParams MakeLocParams(ParamSet &params, size_t visual_dim, size_t embedding_dim,
                        Rng &rng);
RelParams MakeRelParams(ParamSet &params, size_t embedding_dim, Rng &rng);

// Constant inputs for one candidate set B.
struct Candidates {
  Tensor regions;       // [B, visual + 5], row i = [x_v(i), x_s(i)]
  Tensor pair_spatial;  // [B*B, 10], row i*B + j = [x_s(i), x_s(j)]
  size_t size() const { return regions.dim(0); }
};

Tensor RegionMatrix(std::span<const shapeworld::RegionFeatures> regions);
Tensor PairSpatialMatrix(std::span<const shapeworld::RegionFeatures> regions);
Candidates BuildCandidates(std::span<const shapeworld::RegionFeatures> regions);

// Normalized joint embedding z_hat = l2norm((W x + b) * q), one row per input
// row. Rows whose pre-normalization norm is within kNormEpsilon are zero.
Tensor LocEmbedding(Tape &tape, const Tensor &regions, const Tensor &q,
                    const LocParams &theta);
Tensor RelEmbedding(Tape &tape, const Tensor &pair_spatial, const Tensor &q,
                    const RelParams &theta);

// w^T z_hat + b for every row: [B] localization scores, [B*B] relationship
// scores.
Tensor LocScores(Tape &tape, const Tensor &regions, const Tensor &q,
                 const LocParams &theta);
Tensor RelScores(Tape &tape, const Tensor &pair_spatial, const Tensor &q,
                 const RelParams &theta);

// Single-region and single-pair forms, returning scalars.
Tensor LocScore(Tape &tape, const shapeworld::RegionFeatures &region, const Tensor &q,
                const LocParams &theta);
Tensor RelScore(Tape &tape, const shapeworld::RegionFeatures &first,
                const shapeworld::RegionFeatures &second, const Tensor &q,
                const RelParams &theta);
Tensor PairScore(Tape &tape, const shapeworld::RegionFeatures &subject,
                 const shapeworld::RegionFeatures &object,
                 const langrep::ParsedExpression &parsed, const LocParams &loc,
                 const RelParams &rel);

// [B, B] matrix of loc(b_i, q_subj) + loc(b_j, q_obj) + rel(b_i, b_j, q_rel).
Tensor PairScores(Tape &tape, const Candidates &candidates,
                  const langrep::ParsedExpression &parsed, const LocParams &loc,
                  const RelParams &rel);

// s_subj(b_i) = max_j pair(i, j), differentiable through the argmax entry.
Tensor SubjectScores(Tape &tape, const Tensor &pair_scores, bool exclude_self_pair);

struct ScoreTable {
  size_t n = 0;
  std::vector<double> pair_scores;  // row-major n x n
  std::vector<double> subj_scores;  // max over objects
  // max over subjects; shown as an object score map, not used for grounding.
  std::vector<double> obj_scores;
  std::pair<size_t, size_t> best_pair{0, 0};

  double pair(size_t i, size_t j) const { return pair_scores[i * n + j]; }
  size_t best_subject() const { return best_pair.first; }
  size_t best_object() const { return best_pair.second; }
  bool operator==(const ScoreTable &) const = default;
};

// Ties break toward the smallest index: best subject is the first maximal
// s_subj, best object the first maximal entry in that row.
ScoreTable MakeScoreTable(const Tensor &pair_scores, bool exclude_self_pair = false);

// Smallest index of the maximum.
size_t ArgMax(std::span<const double> values);

}  // namespace cmn::grounding

#endif  // CMN_GROUNDING_H_
