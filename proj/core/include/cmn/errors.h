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

#ifndef CMN_ERRORS_H_
#define CMN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cmn {

// Caller broke a precondition: shape mismatch, bad index, empty input.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A forward or backward computation produced NaN or Inf.
class NumericFault : public std::runtime_error {
 public:
  NumericFault(const std::string &op, const std::string &detail)
      : std::runtime_error("numeric fault in " + op + ": " + detail), op_(op) {}
  const std::string &op() const { return op_; }

 private:
  std::string op_;
};

// Malformed text record; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(size_t line, const std::string &detail)
      : std::runtime_error("line " + std::to_string(line) + ": " + detail),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

// Binary container with the wrong magic, version or truncated contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmn

#endif  // CMN_ERRORS_H_
