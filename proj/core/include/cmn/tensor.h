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

#ifndef CMN_TENSOR_H_
#define CMN_TENSOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cmn {

using Shape = std::vector<size_t>;

size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

// Dense row-major array of doubles with an optional gradient buffer.
//
// Tensor is a handle: copies share storage, which is what lets the tape
// capture operands and write their gradients later. Use Clone() for a deep
// copy. A scalar is a tensor of shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor Scalar(double value, bool requires_grad = false);
  static Tensor Vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape &shape() const;
  size_t rank() const { return shape().size(); }
  size_t dim(size_t axis) const;
  size_t size() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();

  bool requires_grad() const;
  // Turning gradients on allocates a zeroed buffer; turning them off drops it.
  void set_requires_grad(bool on);
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  double item() const;
  double at(size_t i) const;
  double at(size_t row, size_t col) const;

  Tensor Clone() const;
  bool SharesStorageWith(const Tensor &other) const {
    return storage_ == other.storage_;
  }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  Storage &storage() const;

  std::shared_ptr<Storage> storage_;
};

// Bitwise equality of shape and values.
bool IdenticalValues(const Tensor &a, const Tensor &b);

}  // namespace cmn

#endif  // CMN_TENSOR_H_
