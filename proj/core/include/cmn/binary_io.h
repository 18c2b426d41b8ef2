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

#ifndef CMN_BINARY_IO_H_
#define CMN_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "cmn/errors.h"

// Little-endian primitives shared by the binary formats.
namespace cmn::binary {

inline void WriteU64(std::ostream &out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline void WriteU32(std::ostream &out, uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void WriteF64(std::ostream &out, double v) {
  WriteU64(out, std::bit_cast<uint64_t>(v));
}

inline void WriteString(std::ostream &out, const std::string &s) {
  WriteU64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void ReadExact(std::istream &in, char *dst, size_t n, const char *what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
}

inline uint64_t ReadU64(std::istream &in, const char *what) {
  unsigned char bytes[8];
  ReadExact(in, reinterpret_cast<char *>(bytes), 8, what);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  return v;
}

inline uint32_t ReadU32(std::istream &in, const char *what) {
  unsigned char bytes[4];
  ReadExact(in, reinterpret_cast<char *>(bytes), 4, what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[i]) << (8 * i);
  return v;
}

inline double ReadF64(std::istream &in, const char *what) {
  return std::bit_cast<double>(ReadU64(in, what));
}

inline std::string ReadString(std::istream &in, uint64_t max_length, const char *what) {
  const uint64_t n = ReadU64(in, what);
  if (n > max_length) throw FormatError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  if (n > 0) ReadExact(in, s.data(), n, what);
  return s;
}

}  // namespace cmn::binary

#endif  // CMN_BINARY_IO_H_
