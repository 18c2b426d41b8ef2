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

#ifndef CMN_OPS_H_
#define CMN_OPS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cmn/random.h"
#include "cmn/tape.h"
#include "cmn/tensor.h"

// Differentiable operations. Each op validates shapes (ContractViolation),
// checks its output for NaN/Inf (NumericFault naming the op) and, when the
// tape is recording and any input requires gradients, records a backward
// rule. Rank-1 tensors are vectors; rank-2 tensors are row-major matrices.
namespace cmn {

// [m,k] x [k,n] -> [m,n]
Tensor MatMul(Tape &tape, const Tensor &a, const Tensor &b);
// [m,k] x [k] -> [m]
Tensor MatVec(Tape &tape, const Tensor &m, const Tensor &x);
// Weighted sum of rows: [t] x [t,d] -> [d]
Tensor WeightedSum(Tape &tape, const Tensor &weights, const Tensor &rows);
// Affine map applied to each row: x[m,in], w[out,in], b[out] -> [m,out].
Tensor Linear(Tape &tape, const Tensor &x, const Tensor &w, const Tensor &b);

Tensor Add(Tape &tape, const Tensor &a, const Tensor &b);
// a[m,n] + v[n] on every row (a rank-1 `a` is the m = 1 case).
Tensor AddRowVector(Tape &tape, const Tensor &a, const Tensor &v);
// a + s for a scalar tensor s.
Tensor AddScalar(Tape &tape, const Tensor &a, const Tensor &s);
Tensor Mul(Tape &tape, const Tensor &a, const Tensor &b);
Tensor MulRowVector(Tape &tape, const Tensor &a, const Tensor &v);
Tensor Scale(Tape &tape, const Tensor &a, double factor);
// Sum of all entries -> scalar.
Tensor Sum(Tape &tape, const Tensor &a);
// u[m], v[n] -> [m,n] with out(i,j) = u(i) + v(j).
Tensor OuterSum(Tape &tape, const Tensor &u, const Tensor &v);

// Concatenation of vectors.
Tensor Concat(Tape &tape, const std::vector<Tensor> &parts);
// Contiguous sub-vector.
Tensor Slice(Tape &tape, const Tensor &a, size_t offset, size_t length);
// n vectors of length d -> [n,d]
Tensor StackRows(Tape &tape, const std::vector<Tensor> &rows);
// table[v,d], indices -> [n,d]
Tensor GatherRows(Tape &tape, const Tensor &table,
                  std::span<const size_t> indices);
Tensor Reshape(Tape &tape, const Tensor &a, Shape shape);

Tensor Sigmoid(Tape &tape, const Tensor &a);
Tensor Tanh(Tape &tape, const Tensor &a);

// Softmax over the last axis (whole vector, or each matrix row).
Tensor Softmax(Tape &tape, const Tensor &a);
// x / max(|x|, epsilon)-style guard over the last axis: rows with norm at or
// below epsilon are returned as exact zeros and pass zero gradient.
Tensor L2Normalize(Tape &tape, const Tensor &a, double epsilon);

// Inverted dropout. Identity when !training or keep_prob == 1.
Tensor Dropout(Tape &tape, const Tensor &a, double keep_prob, bool training,
               Rng &rng);

// Max of a[m,n] over `axis` (0: per column, 1: per row). Ties resolve to the
// smallest index; backward routes the whole gradient to that entry. With
// skip_diagonal, entries (i,i) are never selected (requires n >= 2).
Tensor MaxOverAxis(Tape &tape, const Tensor &a, size_t axis,
                   bool skip_diagonal = false,
                   std::vector<size_t> *argmax = nullptr);

// -log softmax(logits)[target], computed with the max subtracted. When
// `allowed` is non-empty, logits with allowed[i] == 0 are excluded.
Tensor CrossEntropyWithLogits(Tape &tape, const Tensor &logits, size_t target,
                              std::span<const uint8_t> allowed = {});

}  // namespace cmn

#endif  // CMN_OPS_H_
