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

#include <gtest/gtest.h>

#include <cmath>

#include "cmn/errors.h"
#include "cmn/ops.h"
#include "test_util.h"

namespace cmn {
namespace {

using testing::OpGradError;
using testing::RandomTensor;
using Inputs = std::vector<Tensor>;

TEST(OpsTest, SoftmaxOfEqualLogitsIsUniform) {
  Tape tape(Tape::Mode::kInference);
  Tensor s = Softmax(tape, Tensor::Vector({0, 0, 0}));
  for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(OpsTest, SoftmaxIsStableForLargeLogits) {
  Tape tape(Tape::Mode::kInference);
  Tensor s = Softmax(tape, Tensor::Vector({1000, 1000, -1000}));
  EXPECT_DOUBLE_EQ(s.at(0), 0.5);
  EXPECT_DOUBLE_EQ(s.at(2), 0.0);
}

TEST(OpsTest, L2NormalizeGuardsZeroVector) {
  Tape tape;
  Tensor z({4}, true);
  Tensor y = L2Normalize(tape, z, 1e-12);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
  Tensor loss = testing::Probe(tape, y, 3);
  tape.Backward(loss);
  for (double g : z.grad()) EXPECT_EQ(g, 0.0);
}

TEST(OpsTest, DropoutKeepAllIsIdentity) {
  Rng rng(1);
  Tensor x = RandomTensor({3, 5}, rng);
  Tape tape;
  EXPECT_TRUE(IdenticalValues(Dropout(tape, x, 1.0, true, rng), x));
  EXPECT_TRUE(IdenticalValues(Dropout(tape, x, 0.5, false, rng), x));
}

TEST(OpsTest, DropoutScalesKeptEntries) {
  Rng rng(2);
  Tensor x({20000}, std::vector<double>(20000, 1.0));
  Tape tape(Tape::Mode::kInference);
  Tensor y = Dropout(tape, x, 0.7, true, rng);
  double sum = 0;
  size_t kept = 0;
  for (double v : y.values()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.7) < 1e-15);
    sum += v;
    kept += v != 0.0;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 20000.0, 0.7, 0.02);
  EXPECT_NEAR(sum / 20000.0, 1.0, 0.03);
  EXPECT_THROW(Dropout(tape, x, 0.0, true, rng), ContractViolation);
  EXPECT_THROW(Dropout(tape, x, 1.5, true, rng), ContractViolation);
}

TEST(OpsTest, MatMulMatchesTripleLoop) {
  Rng rng(11);
  Tensor a = RandomTensor({3, 4}, rng, false);
  Tensor b = RandomTensor({4, 2}, rng, false);
  Tape tape(Tape::Mode::kInference);
  Tensor c = MatMul(tape, a, b);
  ASSERT_EQ(c.shape(), (Shape{3, 2}));
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), s, 1e-15);
    }
  }
}

TEST(OpsTest, MatMulFixedIntegers) {
  Tensor a({3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  Tensor b({4, 2}, {1, -1, 2, 0, 0, 3, -2, 1});
  Tape tape(Tape::Mode::kInference);
  Tensor c = MatMul(tape, a, b);
  const std::vector<double> expected = {-3, 12, 1, 24, 5, 36};
  for (size_t i = 0; i < 6; ++i) EXPECT_EQ(c.at(i), expected[i]);
}

TEST(OpsTest, ShapeMismatchIsContractViolation) {
  Tape tape;
  EXPECT_THROW(MatMul(tape, Tensor({2, 3}), Tensor({2, 3})), ContractViolation);
  EXPECT_THROW(Add(tape, Tensor({2}), Tensor({3})), ContractViolation);
  EXPECT_THROW(Mul(tape, Tensor({2, 2}), Tensor({4})), ContractViolation);
  EXPECT_THROW(OuterSum(tape, Tensor({2, 2}), Tensor({2})), ContractViolation);
  EXPECT_THROW(Slice(tape, Tensor({3}), 2, 2), ContractViolation);
  EXPECT_THROW(Reshape(tape, Tensor({2, 3}), {4}), ContractViolation);
  EXPECT_THROW(CrossEntropyWithLogits(tape, Tensor({3}), 3), ContractViolation);
  EXPECT_THROW(L2Normalize(tape, Tensor({3}), 0.0), ContractViolation);
}

TEST(OpsTest, NonFiniteOutputNamesOp) {
  Tape tape;
  try {
    Scale(tape, Tensor::Vector({1e308}), 1e10);
    FAIL() << "expected a numeric fault";
  } catch (const NumericFault &e) {
    EXPECT_EQ(e.op(), "scale");
  }
  try {
    Mul(tape, Tensor::Vector({1e200}), Tensor::Vector({1e200}));
    FAIL() << "expected a numeric fault";
  } catch (const NumericFault &e) {
    EXPECT_EQ(e.op(), "mul");
  }
}

TEST(BackwardTest, SquareHasGradientSix) {
  Tensor x = Tensor::Scalar(3.0, true);
  Tape tape;
  Tensor y = Mul(tape, x, x);
  tape.Backward(y);
  EXPECT_EQ(x.grad()[0], 6.0);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(BackwardTest, FanOutAccumulates) {
  Tensor x = Tensor::Scalar(1.5, true);
  Tape tape;
  Tensor y = Add(tape, x, x);
  tape.Backward(y);
  EXPECT_EQ(x.grad()[0], 2.0);
}

TEST(BackwardTest, SoftmaxNllGradientIsPMinusOnehot) {
  Rng rng(5);
  Tensor logits = RandomTensor({6}, rng);
  Tape tape;
  Tensor loss = CrossEntropyWithLogits(tape, logits, 2);
  tape.Backward(loss);
  Tape plain(Tape::Mode::kInference);
  Tensor p = Softmax(plain, logits);
  for (size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(logits.grad()[i], p.at(i) - (i == 2 ? 1.0 : 0.0), 1e-15);
  }
}

TEST(BackwardTest, NonScalarLossIsRejected) {
  Tensor x = Tensor::Vector({1, 2}, true);
  Tape tape;
  Tensor y = Scale(tape, x, 2);
  EXPECT_THROW(tape.Backward(y), ContractViolation);
  Tape empty;
  Tensor s = Tensor::Scalar(1, true);
  EXPECT_THROW(empty.Backward(s), ContractViolation);
}

TEST(BackwardTest, InferenceTapeRecordsNothing) {
  Tensor x = Tensor::Vector({1, 2}, true);
  Tape tape(Tape::Mode::kInference);
  Tensor y = Sum(tape, Mul(tape, x, x));
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(BackwardTest, ConstantsDoNotRecord) {
  Tape tape;
  Sum(tape, Mul(tape, Tensor::Vector({1, 2}), Tensor::Vector({3, 4})));
  EXPECT_EQ(tape.size(), 0u);
}

// Finite-difference checks, one per op family.
class OpGradTest : public ::testing::Test {
 protected:
  static constexpr double kTol = 1e-4;
  Rng rng_{2024};
  Tensor R(const Shape &s) { return RandomTensor(s, rng_); }
};

TEST_F(OpGradTest, MatMul) {
  EXPECT_LE(OpGradError({R({3, 4}), R({4, 2})},
                        [](Tape &t, const Inputs &x) { return MatMul(t, x[0], x[1]); }),
            kTol);
}

TEST_F(OpGradTest, MatVec) {
  EXPECT_LE(OpGradError({R({3, 4}), R({4})},
                        [](Tape &t, const Inputs &x) { return MatVec(t, x[0], x[1]); }),
            kTol);
}

TEST_F(OpGradTest, WeightedSum) {
  EXPECT_LE(OpGradError({R({5}), R({5, 3})},
                        [](Tape &t, const Inputs &x) { return WeightedSum(t, x[0], x[1]); }),
            kTol);
}

TEST_F(OpGradTest, Linear) {
  EXPECT_LE(OpGradError({R({4, 3}), R({2, 3}), R({2})},
                        [](Tape &t, const Inputs &x) { return Linear(t, x[0], x[1], x[2]); }),
            kTol);
}

TEST_F(OpGradTest, ElementwiseFamily) {
  EXPECT_LE(OpGradError({R({2, 3}), R({2, 3})},
                        [](Tape &t, const Inputs &x) { return Add(t, x[0], x[1]); }),
            kTol);
  EXPECT_LE(OpGradError({R({2, 3}), R({2, 3})},
                        [](Tape &t, const Inputs &x) { return Mul(t, x[0], x[1]); }),
            kTol);
  EXPECT_LE(OpGradError({R({2, 3}), R({3})},
                        [](Tape &t, const Inputs &x) { return AddRowVector(t, x[0], x[1]); }),
            kTol);
  EXPECT_LE(OpGradError({R({2, 3}), R({3})},
                        [](Tape &t, const Inputs &x) { return MulRowVector(t, x[0], x[1]); }),
            kTol);
  EXPECT_LE(OpGradError({R({4}), R({1})},
                        [](Tape &t, const Inputs &x) { return AddScalar(t, x[0], x[1]); }),
            kTol);
  EXPECT_LE(OpGradError({R({4})}, [](Tape &t, const Inputs &x) { return Scale(t, x[0], -1.7); }),
            kTol);
}

TEST_F(OpGradTest, Reductions) {
  EXPECT_LE(OpGradError({R({2, 3})}, [](Tape &t, const Inputs &x) { return Sum(t, x[0]); }),
            kTol);
  EXPECT_LE(OpGradError({R({3}), R({4})},
                        [](Tape &t, const Inputs &x) { return OuterSum(t, x[0], x[1]); }),
            kTol);
}

TEST_F(OpGradTest, StructuralOps) {
  EXPECT_LE(OpGradError({R({2}), R({3}), R({1})},
                        [](Tape &t, const Inputs &x) { return Concat(t, x); }),
            kTol);
  EXPECT_LE(OpGradError({R({6})}, [](Tape &t, const Inputs &x) { return Slice(t, x[0], 2, 3); }),
            kTol);
  EXPECT_LE(OpGradError({R({3}), R({3})},
                        [](Tape &t, const Inputs &x) { return StackRows(t, x); }),
            kTol);
  EXPECT_LE(OpGradError({R({4, 3})},
                        [](Tape &t, const Inputs &x) {
                          const std::vector<size_t> idx = {2, 0, 2, 3};
                          return GatherRows(t, x[0], idx);
                        }),
            kTol);
  EXPECT_LE(OpGradError({R({2, 3})},
                        [](Tape &t, const Inputs &x) { return Reshape(t, x[0], {3, 2}); }),
            kTol);
}

TEST_F(OpGradTest, Nonlinearities) {
  EXPECT_LE(OpGradError({R({5})}, [](Tape &t, const Inputs &x) { return Sigmoid(t, x[0]); }),
            kTol);
  EXPECT_LE(OpGradError({R({5})}, [](Tape &t, const Inputs &x) { return Tanh(t, x[0]); }),
            kTol);
  EXPECT_LE(OpGradError({R({3, 4})}, [](Tape &t, const Inputs &x) { return Softmax(t, x[0]); }),
            kTol);
  EXPECT_LE(OpGradError({R({3, 4})},
                        [](Tape &t, const Inputs &x) { return L2Normalize(t, x[0], 1e-12); }),
            kTol);
}

TEST_F(OpGradTest, DropoutWithFixedMask) {
  EXPECT_LE(OpGradError({R({10})},
                        [](Tape &t, const Inputs &x) {
                          Rng mask(17);
                          return Dropout(t, x[0], 0.6, true, mask);
                        }),
            kTol);
}

TEST_F(OpGradTest, MaxOverAxis) {
  for (size_t axis : {0u, 1u}) {
    for (bool skip : {false, true}) {
      EXPECT_LE(OpGradError({R({4, 4})},
                            [axis, skip](Tape &t, const Inputs &x) {
                              return MaxOverAxis(t, x[0], axis, skip);
                            }),
                kTol)
          << "axis " << axis << " skip " << skip;
    }
  }
}

TEST_F(OpGradTest, CrossEntropy) {
  EXPECT_LE(OpGradError({R({6})},
                        [](Tape &t, const Inputs &x) {
                          return CrossEntropyWithLogits(t, x[0], 4);
                        }),
            kTol);
  EXPECT_LE(OpGradError({R({6})},
                        [](Tape &t, const Inputs &x) {
                          static const std::vector<uint8_t> mask = {1, 0, 1, 1, 0, 1};
                          return CrossEntropyWithLogits(t, x[0], 2, mask);
                        }),
            kTol);
}

TEST(OpsPropertyTest, SoftmaxRowsAreDistributions) {
  Rng rng(77);
  Tape tape(Tape::Mode::kInference);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t rows = 1 + rng.UniformInt(4), cols = 1 + rng.UniformInt(30);
    Tensor x = RandomTensor({rows, cols}, rng, false, -50, 50);
    Tensor y = Softmax(tape, x);
    for (size_t i = 0; i < rows; ++i) {
      double s = 0;
      for (size_t j = 0; j < cols; ++j) {
        EXPECT_GE(y.at(i, j), 0.0);
        s += y.at(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(OpsPropertyTest, L2NormalizeRowsHaveUnitNorm) {
  Rng rng(78);
  Tape tape(Tape::Mode::kInference);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t rows = 1 + rng.UniformInt(4), cols = 1 + rng.UniformInt(20);
    const double scale = std::pow(10.0, rng.Uniform(-5, 5));
    Tensor x = RandomTensor({rows, cols}, rng, false, -scale, scale);
    if (trial % 10 == 0) {
      for (size_t j = 0; j < cols; ++j) x.mutable_values()[j] = 0.0;
    }
    Tensor y = L2Normalize(tape, x, 1e-12);
    for (size_t i = 0; i < rows; ++i) {
      double sq = 0, in = 0;
      for (size_t j = 0; j < cols; ++j) {
        sq += y.at(i * cols + j) * y.at(i * cols + j);
        in += x.at(i * cols + j) * x.at(i * cols + j);
      }
      if (std::sqrt(in) > 1e-12) {
        EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
      } else {
        EXPECT_EQ(sq, 0.0);
      }
    }
  }
}

TEST(OpsPropertyTest, MaxOverAxisBreaksTiesTowardSmallestIndex) {
  Tape tape;
  Tensor a({2, 3}, {1, 5, 5, 7, 7, 2}, true);
  std::vector<size_t> arg;
  Tensor m = MaxOverAxis(tape, a, 1, false, &arg);
  EXPECT_EQ(arg, (std::vector<size_t>{1, 0}));
  EXPECT_EQ(m.at(0), 5);
}

TEST(OpsPropertyTest, MaxOverAxisRoutesGradientToArgmaxOnly) {
  Tape tape;
  Tensor a({2, 3}, {1, 5, 5, 7, 7, 2}, true);
  Tensor loss = Sum(tape, MaxOverAxis(tape, a, 1));
  tape.Backward(loss);
  const std::vector<double> expected = {0, 1, 0, 1, 0, 0};
  for (size_t i = 0; i < 6; ++i) EXPECT_EQ(a.grad()[i], expected[i]);
}

TEST(OpsPropertyTest, CrossEntropyMatchesLogSumExp) {
  Rng rng(4);
  Tape tape(Tape::Mode::kInference);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.UniformInt(25);
    Tensor x = RandomTensor({n}, rng, false, -20, 20);
    const size_t k = rng.UniformInt(n);
    std::vector<double> v(x.values().begin(), x.values().end());
    EXPECT_NEAR(CrossEntropyWithLogits(tape, x, k).item(), testing::LogSumExp(v) - v[k], 1e-12);
  }
}

}  // namespace
}  // namespace cmn
