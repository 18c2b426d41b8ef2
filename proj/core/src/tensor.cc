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

#include "cmn/tensor.h"

#include <algorithm>
#include <cstring>
#include <sstream>

#include "cmn/errors.h"

namespace cmn {

size_t NumElements(const Shape &shape) {
  size_t n = 1;
  for (size_t extent : shape) n *= extent;
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

namespace {

void ValidateShape(const Shape &shape) {
  if (shape.empty()) throw ContractViolation("tensor shape must have rank >= 1");
  for (size_t extent : shape) {
    if (extent == 0) {
      throw ContractViolation("tensor extents must be positive, got " +
                              ShapeString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  ValidateShape(shape);
  storage_->values.assign(NumElements(shape), 0.0);
  storage_->shape = std::move(shape);
  set_requires_grad(requires_grad);
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  ValidateShape(shape);
  if (values.size() != NumElements(shape)) {
    throw ContractViolation("value count " + std::to_string(values.size()) +
                            " does not match shape " + ShapeString(shape));
  }
  storage_->shape = std::move(shape);
  storage_->values = std::move(values);
  set_requires_grad(requires_grad);
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::Vector(std::vector<double> values, bool requires_grad) {
  const size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor::Storage &Tensor::storage() const {
  if (!storage_) throw ContractViolation("use of an undefined tensor");
  return *storage_;
}

const Shape &Tensor::shape() const { return storage().shape; }

size_t Tensor::dim(size_t axis) const {
  const Shape &s = shape();
  if (axis >= s.size()) {
    throw ContractViolation("axis " + std::to_string(axis) +
                            " out of range for shape " + ShapeString(s));
  }
  return s[axis];
}

size_t Tensor::size() const { return storage().values.size(); }

std::span<const double> Tensor::values() const { return storage().values; }
std::span<double> Tensor::mutable_values() { return storage().values; }

bool Tensor::requires_grad() const { return storage().requires_grad; }

void Tensor::set_requires_grad(bool on) {
  Storage &s = storage();
  s.requires_grad = on;
  if (on) {
    s.grad.assign(s.values.size(), 0.0);
  } else {
    s.grad.clear();
    s.grad.shrink_to_fit();
  }
}

std::span<const double> Tensor::grad() const {
  if (!requires_grad()) throw ContractViolation("tensor has no gradient");
  return storage().grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!requires_grad()) throw ContractViolation("tensor has no gradient");
  return storage().grad;
}

void Tensor::ZeroGrad() {
  if (requires_grad()) std::fill(storage().grad.begin(), storage().grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractViolation("item() on non-scalar tensor of shape " +
                            ShapeString(shape()));
  }
  return storage().values[0];
}

double Tensor::at(size_t i) const {
  if (i >= size()) throw ContractViolation("flat index out of range");
  return storage().values[i];
}

double Tensor::at(size_t row, size_t col) const {
  if (rank() != 2 || row >= dim(0) || col >= dim(1)) {
    throw ContractViolation("2-d index out of range for shape " +
                            ShapeString(shape()));
  }
  return storage().values[row * dim(1) + col];
}

Tensor Tensor::Clone() const {
  return Tensor(shape(), std::vector<double>(values().begin(), values().end()));
}

bool IdenticalValues(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(),
                     a.size() * sizeof(double)) == 0;
}

}  // namespace cmn
