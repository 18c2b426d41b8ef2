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

#include "cmn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmn/errors.h"

namespace cmn {
namespace {

void Require(bool condition, const char *op, const std::string &message) {
  if (!condition) throw ContractViolation(std::string(op) + ": " + message);
}

void RequireRank(const Tensor &t, size_t rank, const char *op) {
  Require(t.defined(), op, "undefined operand");
  Require(t.rank() == rank, op,
          "expected rank " + std::to_string(rank) + ", got shape " +
              ShapeString(t.shape()));
}

void CheckFinite(const Tensor &t, const char *op) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericFault(op, "non-finite output value");
  }
}

// Rows and columns of a tensor viewed as a matrix over its last axis.
size_t Rows(const Tensor &t) { return t.rank() == 1 ? 1 : t.dim(0); }
size_t Cols(const Tensor &t) { return t.shape().back(); }

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor MatMul(Tape &tape, const Tensor &a, const Tensor &b) {
  constexpr const char *kOp = "matmul";
  RequireRank(a, 2, kOp);
  RequireRank(b, 2, kOp);
  const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Require(b.dim(0) == k, kOp,
          ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  const bool record = tape.ShouldRecord({&a, &b});
  Tensor out({m, n}, record);
  auto av = a.values(), bv = b.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < m; ++i) {
    for (size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
    }
  }
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, b}, [a = a, b = b, out, m, k, n]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        auto bv = b.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t p = 0; p < k; ++p) {
            double acc = 0;
            for (size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        auto av = a.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor MatVec(Tape &tape, const Tensor &m, const Tensor &x) {
  constexpr const char *kOp = "matvec";
  RequireRank(m, 2, kOp);
  RequireRank(x, 1, kOp);
  const size_t rows = m.dim(0), cols = m.dim(1);
  Require(x.dim(0) == cols, kOp,
          ShapeString(m.shape()) + " x " + ShapeString(x.shape()));
  const bool record = tape.ShouldRecord({&m, &x});
  Tensor out({rows}, record);
  auto mv = m.values(), xv = x.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows; ++i) {
    double acc = 0;
    const double *row = mv.data() + i * cols;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
    ov[i] = acc;
  }
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {m, x}, [m = m, x = x, out, rows, cols]() mutable {
      auto g = out.grad();
      if (m.requires_grad()) {
        auto gm = m.mutable_grad();
        auto xv = x.values();
        for (size_t i = 0; i < rows; ++i) {
          if (g[i] == 0) continue;
          double *row = gm.data() + i * cols;
          for (size_t j = 0; j < cols; ++j) row[j] += g[i] * xv[j];
        }
      }
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        auto mv = m.values();
        for (size_t i = 0; i < rows; ++i) {
          if (g[i] == 0) continue;
          const double *row = mv.data() + i * cols;
          for (size_t j = 0; j < cols; ++j) gx[j] += g[i] * row[j];
        }
      }
    });
  }
  return out;
}

Tensor WeightedSum(Tape &tape, const Tensor &weights, const Tensor &rows) {
  constexpr const char *kOp = "weighted_sum";
  RequireRank(weights, 1, kOp);
  RequireRank(rows, 2, kOp);
  const size_t t = rows.dim(0), d = rows.dim(1);
  Require(weights.dim(0) == t, kOp,
          ShapeString(weights.shape()) + " x " + ShapeString(rows.shape()));
  const bool record = tape.ShouldRecord({&weights, &rows});
  Tensor out({d}, record);
  auto wv = weights.values(), rv = rows.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < t; ++i)
    for (size_t j = 0; j < d; ++j) ov[j] += wv[i] * rv[i * d + j];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {weights, rows}, [weights = weights, rows = rows, out, t, d]() mutable {
      auto g = out.grad();
      if (weights.requires_grad()) {
        auto gw = weights.mutable_grad();
        auto rv = rows.values();
        for (size_t i = 0; i < t; ++i) {
          double acc = 0;
          for (size_t j = 0; j < d; ++j) acc += g[j] * rv[i * d + j];
          gw[i] += acc;
        }
      }
      if (rows.requires_grad()) {
        auto gr = rows.mutable_grad();
        auto wv = weights.values();
        for (size_t i = 0; i < t; ++i)
          for (size_t j = 0; j < d; ++j) gr[i * d + j] += wv[i] * g[j];
      }
    });
  }
  return out;
}

Tensor Linear(Tape &tape, const Tensor &x, const Tensor &w, const Tensor &b) {
  constexpr const char *kOp = "linear";
  RequireRank(x, 2, kOp);
  RequireRank(w, 2, kOp);
  RequireRank(b, 1, kOp);
  const size_t m = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  Require(w.dim(1) == in && b.dim(0) == out_dim, kOp,
          "x " + ShapeString(x.shape()) + ", w " + ShapeString(w.shape()) +
              ", b " + ShapeString(b.shape()));
  const bool record = tape.ShouldRecord({&x, &w, &b});
  Tensor out({m, out_dim}, record);
  auto xv = x.values(), wv = w.values(), bv = b.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < m; ++i) {
    const double *xrow = xv.data() + i * in;
    for (size_t o = 0; o < out_dim; ++o) {
      const double *wrow = wv.data() + o * in;
      double acc = bv[o];
      for (size_t k = 0; k < in; ++k) acc += wrow[k] * xrow[k];
      ov[i * out_dim + o] = acc;
    }
  }
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {x, w, b}, [x = x, w = w, b = b, out, m, in, out_dim]() mutable {
      auto g = out.grad();
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        auto wv = w.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t o = 0; o < out_dim; ++o) {
            const double go = g[i * out_dim + o];
            if (go == 0) continue;
            const double *wrow = wv.data() + o * in;
            for (size_t k = 0; k < in; ++k) gx[i * in + k] += go * wrow[k];
          }
      }
      if (w.requires_grad()) {
        auto gw = w.mutable_grad();
        auto xv = x.values();
        for (size_t i = 0; i < m; ++i)
          for (size_t o = 0; o < out_dim; ++o) {
            const double go = g[i * out_dim + o];
            if (go == 0) continue;
            const double *xrow = xv.data() + i * in;
            for (size_t k = 0; k < in; ++k) gw[o * in + k] += go * xrow[k];
          }
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (size_t i = 0; i < m; ++i)
          for (size_t o = 0; o < out_dim; ++o) gb[o] += g[i * out_dim + o];
      }
    });
  }
  return out;
}

Tensor Add(Tape &tape, const Tensor &a, const Tensor &b) {
  constexpr const char *kOp = "add";
  Require(a.defined() && b.defined() && a.shape() == b.shape(), kOp,
          "shape mismatch");
  const bool record = tape.ShouldRecord({&a, &b});
  Tensor out(a.shape(), record);
  auto av = a.values(), bv = b.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, b}, [a = a, b = b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor AddRowVector(Tape &tape, const Tensor &a, const Tensor &v) {
  constexpr const char *kOp = "add_row_vector";
  Require(a.defined() && a.rank() <= 2, kOp, "expected a vector or matrix");
  RequireRank(v, 1, kOp);
  const size_t rows = Rows(a), cols = Cols(a);
  Require(v.dim(0) == cols, kOp,
          ShapeString(a.shape()) + " + " + ShapeString(v.shape()));
  const bool record = tape.ShouldRecord({&a, &v});
  Tensor out(a.shape(), record);
  auto av = a.values(), vv = v.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) ov[i * cols + j] = av[i * cols + j] + vv[j];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, v}, [a = a, v = v, out, rows, cols]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (v.requires_grad()) {
        auto gv = v.mutable_grad();
        for (size_t i = 0; i < rows; ++i)
          for (size_t j = 0; j < cols; ++j) gv[j] += g[i * cols + j];
      }
    });
  }
  return out;
}

Tensor AddScalar(Tape &tape, const Tensor &a, const Tensor &s) {
  constexpr const char *kOp = "add_scalar";
  Require(a.defined() && s.defined() && s.size() == 1, kOp,
          "second operand must be a scalar");
  const bool record = tape.ShouldRecord({&a, &s});
  Tensor out(a.shape(), record);
  auto av = a.values();
  const double sv = s.item();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + sv;
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, s}, [a = a, s = s, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (s.requires_grad()) {
        double acc = 0;
        for (double gi : g) acc += gi;
        s.mutable_grad()[0] += acc;
      }
    });
  }
  return out;
}

Tensor Mul(Tape &tape, const Tensor &a, const Tensor &b) {
  constexpr const char *kOp = "mul";
  Require(a.defined() && b.defined() && a.shape() == b.shape(), kOp,
          "shape mismatch");
  const bool record = tape.ShouldRecord({&a, &b});
  Tensor out(a.shape(), record);
  auto av = a.values(), bv = b.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, b}, [a = a, b = b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        auto bv = b.values();
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        auto av = a.values();
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor MulRowVector(Tape &tape, const Tensor &a, const Tensor &v) {
  constexpr const char *kOp = "mul_row_vector";
  Require(a.defined() && a.rank() <= 2, kOp, "expected a vector or matrix");
  RequireRank(v, 1, kOp);
  const size_t rows = Rows(a), cols = Cols(a);
  Require(v.dim(0) == cols, kOp,
          ShapeString(a.shape()) + " * " + ShapeString(v.shape()));
  const bool record = tape.ShouldRecord({&a, &v});
  Tensor out(a.shape(), record);
  auto av = a.values(), vv = v.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) ov[i * cols + j] = av[i * cols + j] * vv[j];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a, v}, [a = a, v = v, out, rows, cols]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        auto vv = v.values();
        for (size_t i = 0; i < rows; ++i)
          for (size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[i * cols + j] * vv[j];
      }
      if (v.requires_grad()) {
        auto gv = v.mutable_grad();
        auto av = a.values();
        for (size_t i = 0; i < rows; ++i)
          for (size_t j = 0; j < cols; ++j) gv[j] += g[i * cols + j] * av[i * cols + j];
      }
    });
  }
  return out;
}

Tensor Scale(Tape &tape, const Tensor &a, double factor) {
  constexpr const char *kOp = "scale";
  Require(a.defined(), kOp, "undefined operand");
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * factor;
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, factor]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor Sum(Tape &tape, const Tensor &a) {
  constexpr const char *kOp = "sum";
  Require(a.defined(), kOp, "undefined operand");
  const bool record = tape.ShouldRecord({&a});
  Tensor out({1}, record);
  double acc = 0;
  for (double v : a.values()) acc += v;
  out.mutable_values()[0] = acc;
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out]() mutable {
      const double g = out.grad()[0];
      for (double &ga : a.mutable_grad()) ga += g;
    });
  }
  return out;
}

Tensor OuterSum(Tape &tape, const Tensor &u, const Tensor &v) {
  constexpr const char *kOp = "outer_sum";
  RequireRank(u, 1, kOp);
  RequireRank(v, 1, kOp);
  const size_t m = u.dim(0), n = v.dim(0);
  const bool record = tape.ShouldRecord({&u, &v});
  Tensor out({m, n}, record);
  auto uv = u.values(), vv = v.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) ov[i * n + j] = uv[i] + vv[j];
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {u, v}, [u = u, v = v, out, m, n]() mutable {
      auto g = out.grad();
      if (u.requires_grad()) {
        auto gu = u.mutable_grad();
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) gu[i] += g[i * n + j];
      }
      if (v.requires_grad()) {
        auto gv = v.mutable_grad();
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) gv[j] += g[i * n + j];
      }
    });
  }
  return out;
}

Tensor Concat(Tape &tape, const std::vector<Tensor> &parts) {
  constexpr const char *kOp = "concat";
  Require(!parts.empty(), kOp, "no operands");
  size_t total = 0;
  for (const Tensor &p : parts) {
    RequireRank(p, 1, kOp);
    total += p.size();
  }
  const bool record = tape.ShouldRecord(parts);
  Tensor out({total}, record);
  auto ov = out.mutable_values();
  size_t offset = 0;
  for (const Tensor &p : parts) {
    std::copy(p.values().begin(), p.values().end(), ov.begin() + offset);
    offset += p.size();
  }
  if (record) {
    tape.Record(kOp, parts, [parts = parts, out]() mutable {
      auto g = out.grad();
      size_t offset = 0;
      for (Tensor &p : parts) {
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor Slice(Tape &tape, const Tensor &a, size_t offset, size_t length) {
  constexpr const char *kOp = "slice";
  RequireRank(a, 1, kOp);
  Require(length > 0 && offset + length <= a.size(), kOp,
          "range out of bounds");
  const bool record = tape.ShouldRecord({&a});
  Tensor out({length}, record);
  auto av = a.values();
  std::copy(av.begin() + offset, av.begin() + offset + length,
            out.mutable_values().begin());
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, offset, length]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < length; ++i) ga[offset + i] += g[i];
    });
  }
  return out;
}

Tensor StackRows(Tape &tape, const std::vector<Tensor> &rows) {
  constexpr const char *kOp = "stack_rows";
  Require(!rows.empty(), kOp, "no operands");
  const size_t d = rows.front().size();
  for (const Tensor &r : rows) {
    RequireRank(r, 1, kOp);
    Require(r.size() == d, kOp, "rows differ in length");
  }
  const bool record = tape.ShouldRecord(rows);
  Tensor out({rows.size(), d}, record);
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].values().begin(), rows[i].values().end(),
              ov.begin() + i * d);
  }
  if (record) {
    tape.Record(kOp, rows, [rows = rows, out, d]() mutable {
      auto g = out.grad();
      for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].requires_grad()) continue;
        auto gr = rows[i].mutable_grad();
        for (size_t j = 0; j < d; ++j) gr[j] += g[i * d + j];
      }
    });
  }
  return out;
}

Tensor GatherRows(Tape &tape, const Tensor &table,
                  std::span<const size_t> indices) {
  constexpr const char *kOp = "gather_rows";
  RequireRank(table, 2, kOp);
  Require(!indices.empty(), kOp, "no indices");
  const size_t v = table.dim(0), d = table.dim(1);
  for (size_t idx : indices) Require(idx < v, kOp, "row index out of range");
  const bool record = tape.ShouldRecord({&table});
  Tensor out({indices.size(), d}, record);
  auto tv = table.values();
  auto ov = out.mutable_values();
  for (size_t r = 0; r < indices.size(); ++r) {
    std::copy(tv.begin() + indices[r] * d, tv.begin() + (indices[r] + 1) * d,
              ov.begin() + r * d);
  }
  if (record) {
    std::vector<size_t> idx(indices.begin(), indices.end());
    tape.Record(kOp, {table}, [table = table, out, idx, d]() mutable {
      auto g = out.grad();
      auto gt = table.mutable_grad();
      for (size_t r = 0; r < idx.size(); ++r)
        for (size_t j = 0; j < d; ++j) gt[idx[r] * d + j] += g[r * d + j];
    });
  }
  return out;
}

Tensor Reshape(Tape &tape, const Tensor &a, Shape shape) {
  constexpr const char *kOp = "reshape";
  Require(a.defined() && NumElements(shape) == a.size(), kOp,
          ShapeString(a.shape()) + " -> " + ShapeString(shape));
  const bool record = tape.ShouldRecord({&a});
  Tensor out(std::move(shape),
             std::vector<double>(a.values().begin(), a.values().end()), record);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

Tensor Sigmoid(Tape &tape, const Tensor &a) {
  constexpr const char *kOp = "sigmoid";
  Require(a.defined(), kOp, "undefined operand");
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = StableSigmoid(av[i]);
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out]() mutable {
      auto g = out.grad();
      auto y = out.values();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
  }
  return out;
}

Tensor Tanh(Tape &tape, const Tensor &a) {
  constexpr const char *kOp = "tanh";
  Require(a.defined(), kOp, "undefined operand");
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = std::tanh(av[i]);
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out]() mutable {
      auto g = out.grad();
      auto y = out.values();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }
  return out;
}

Tensor Softmax(Tape &tape, const Tensor &a) {
  constexpr const char *kOp = "softmax";
  Require(a.defined() && a.rank() <= 2, kOp, "expected a vector or matrix");
  const size_t rows = Rows(a), cols = Cols(a);
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows; ++i) {
    const double *x = av.data() + i * cols;
    double *y = ov.data() + i * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0;
    for (size_t j = 0; j < cols; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, rows, cols]() mutable {
      auto g = out.grad();
      auto y = out.values();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < rows; ++i) {
        double dot = 0;
        for (size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * y[i * cols + j];
        for (size_t j = 0; j < cols; ++j)
          ga[i * cols + j] += y[i * cols + j] * (g[i * cols + j] - dot);
      }
    });
  }
  return out;
}

Tensor L2Normalize(Tape &tape, const Tensor &a, double epsilon) {
  constexpr const char *kOp = "l2_normalize";
  Require(a.defined() && a.rank() <= 2, kOp, "expected a vector or matrix");
  Require(epsilon > 0, kOp, "epsilon must be positive");
  const size_t rows = Rows(a), cols = Cols(a);
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  std::vector<double> norms(rows, 0.0);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < rows; ++i) {
    double sq = 0;
    for (size_t j = 0; j < cols; ++j) sq += av[i * cols + j] * av[i * cols + j];
    norms[i] = std::sqrt(sq);
    if (norms[i] <= epsilon) continue;
    for (size_t j = 0; j < cols; ++j) ov[i * cols + j] = av[i * cols + j] / norms[i];
  }
  CheckFinite(out, kOp);
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, norms, rows, cols, epsilon]() mutable {
      auto g = out.grad();
      auto y = out.values();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < rows; ++i) {
        if (norms[i] <= epsilon) continue;
        double dot = 0;
        for (size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * y[i * cols + j];
        for (size_t j = 0; j < cols; ++j)
          ga[i * cols + j] += (g[i * cols + j] - y[i * cols + j] * dot) / norms[i];
      }
    });
  }
  return out;
}

Tensor Dropout(Tape &tape, const Tensor &a, double keep_prob, bool training,
               Rng &rng) {
  constexpr const char *kOp = "dropout";
  Require(a.defined(), kOp, "undefined operand");
  Require(keep_prob > 0 && keep_prob <= 1, kOp,
          "keep probability must lie in (0, 1]");
  if (!training || keep_prob == 1.0) return a;
  const bool record = tape.ShouldRecord({&a});
  Tensor out(a.shape(), record);
  std::vector<double> mask(a.size());
  for (double &m : mask) m = rng.Bernoulli(keep_prob) ? 1.0 / keep_prob : 0.0;
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * mask[i];
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, mask]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
  }
  return out;
}

Tensor MaxOverAxis(Tape &tape, const Tensor &a, size_t axis,
                   bool skip_diagonal, std::vector<size_t> *argmax) {
  constexpr const char *kOp = "max_over_axis";
  RequireRank(a, 2, kOp);
  Require(axis <= 1, kOp, "axis must be 0 or 1");
  const size_t m = a.dim(0), n = a.dim(1);
  const size_t reduced = axis == 1 ? n : m;
  const size_t kept = axis == 1 ? m : n;
  Require(!skip_diagonal || reduced >= 2, kOp,
          "skipping the diagonal leaves nothing to reduce");
  const bool record = tape.ShouldRecord({&a});
  Tensor out({kept}, record);
  std::vector<size_t> flat(kept);
  std::vector<size_t> picked(kept);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (size_t k = 0; k < kept; ++k) {
    bool found = false;
    for (size_t r = 0; r < reduced; ++r) {
      if (skip_diagonal && r == k) continue;
      const size_t idx = axis == 1 ? k * n + r : r * n + k;
      if (!found || av[idx] > ov[k]) {
        ov[k] = av[idx];
        flat[k] = idx;
        picked[k] = r;
        found = true;
      }
    }
  }
  if (argmax != nullptr) *argmax = picked;
  if (record) {
    tape.Record(kOp, {a}, [a = a, out, flat]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (size_t k = 0; k < flat.size(); ++k) ga[flat[k]] += g[k];
    });
  }
  return out;
}

Tensor CrossEntropyWithLogits(Tape &tape, const Tensor &logits, size_t target,
                              std::span<const uint8_t> allowed) {
  constexpr const char *kOp = "cross_entropy";
  RequireRank(logits, 1, kOp);
  const size_t n = logits.size();
  Require(target < n, kOp, "target index out of range");
  Require(allowed.empty() || allowed.size() == n, kOp, "mask size mismatch");
  auto is_allowed = [&](size_t i) { return allowed.empty() || allowed[i] != 0; };
  Require(is_allowed(target), kOp, "target is masked out");
  auto lv = logits.values();
  double mx = lv[target];
  for (size_t i = 0; i < n; ++i)
    if (is_allowed(i)) mx = std::max(mx, lv[i]);
  double z = 0;
  for (size_t i = 0; i < n; ++i)
    if (is_allowed(i)) z += std::exp(lv[i] - mx);
  const double log_z = mx + std::log(z);
  const bool record = tape.ShouldRecord({&logits});
  Tensor out({1}, {log_z - lv[target]}, record);
  CheckFinite(out, kOp);
  if (record) {
    std::vector<uint8_t> mask(allowed.begin(), allowed.end());
    tape.Record(kOp, {logits}, [logits = logits, out, target, log_z, mask]() mutable {
      const double g = out.grad()[0];
      auto lv = logits.values();
      auto gl = logits.mutable_grad();
      for (size_t i = 0; i < lv.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        gl[i] += g * (std::exp(lv[i] - log_z) - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

}  // namespace cmn
