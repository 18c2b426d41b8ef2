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

#include "cmn/checkpoint.h"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "cmn/binary_io.h"
#include "cmn/config_json.h"
#include "cmn/errors.h"

namespace cmn {
namespace {

constexpr uint64_t kMaxNameLength = 1 << 12;
constexpr uint64_t kMaxSnapshotLength = 1 << 24;
constexpr uint64_t kMaxRank = 8;
constexpr uint64_t kMaxElements = uint64_t{1} << 32;

void WriteTensor(std::ostream &out, const std::string &name, const Tensor &t) {
  binary::WriteString(out, name);
  binary::WriteU64(out, t.rank());
  for (size_t extent : t.shape()) binary::WriteU64(out, extent);
  for (double v : t.values()) binary::WriteF64(out, v);
}

std::pair<std::string, Tensor> ReadTensor(std::istream &in) {
  std::string name = binary::ReadString(in, kMaxNameLength, "tensor name");
  const uint64_t rank = binary::ReadU64(in, "tensor rank");
  if (rank == 0 || rank > kMaxRank) throw FormatError("bad rank for tensor " + name);
  Shape shape(rank);
  uint64_t count = 1;
  for (auto &extent : shape) {
    extent = binary::ReadU64(in, "tensor extent");
    if (extent == 0 || extent > kMaxElements) throw FormatError("bad extent for " + name);
    count *= extent;
    if (count > kMaxElements) throw FormatError("tensor " + name + " is implausibly large");
  }
  std::vector<double> values(count);
  for (double &v : values) v = binary::ReadF64(in, "tensor values");
  return {std::move(name), Tensor(std::move(shape), std::move(values))};
}

}  // namespace

void WriteCheckpoint(const Checkpoint &checkpoint, std::ostream &out) {
  const Model &model = checkpoint.model;
  const nlohmann::json snapshot = {{"format_version", kCheckpointVersion},
                                   {"model_config", ToJson(model.config())},
                                   {"train_config", ToJson(checkpoint.train_config)},
                                   {"vocabulary", model.vocab().tokens()},
                                   {"step_count", checkpoint.optimizer.step_count}};
  out.write("CMN1", 4);
  binary::WriteU32(out, kCheckpointVersion);
  binary::WriteString(out, snapshot.dump());
  const auto &entries = model.params().entries();
  binary::WriteU64(out, entries.size());
  for (const auto &[name, tensor] : entries) WriteTensor(out, name, tensor);
  const auto &velocity = checkpoint.optimizer.velocity;
  if (!velocity.empty() && velocity.size() != entries.size()) {
    throw ContractViolation("optimizer velocity does not match the parameters");
  }
  binary::WriteU64(out, velocity.size());
  for (size_t k = 0; k < velocity.size(); ++k) WriteTensor(out, entries[k].first, velocity[k]);
}

void SaveCheckpoint(const Checkpoint &checkpoint, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteCheckpoint(checkpoint, out);
  if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint ReadCheckpoint(std::istream &in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "CMN1") {
    throw FormatError("not a checkpoint: missing magic CMN1");
  }
  const uint32_t version = binary::ReadU32(in, "format version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json snapshot;
  try {
    snapshot = nlohmann::json::parse(binary::ReadString(in, kMaxSnapshotLength, "snapshot"));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("corrupt config snapshot: ") + e.what());
  }

  ModelConfig model_config;
  TrainConfig train_config;
  std::vector<std::string> tokens;
  uint64_t step_count = 0;
  try {
    ApplyJson(snapshot.at("model_config"), model_config);
    ApplyJson(snapshot.at("train_config"), train_config);
    tokens = snapshot.at("vocabulary").get<std::vector<std::string>>();
    step_count = snapshot.at("step_count").get<uint64_t>();
  } catch (const std::exception &e) {
    throw FormatError(std::string("corrupt config snapshot: ") + e.what());
  }

  std::map<std::string, Tensor> tensors;
  const uint64_t n_tensors = binary::ReadU64(in, "tensor count");
  for (uint64_t k = 0; k < n_tensors; ++k) {
    auto [name, tensor] = ReadTensor(in);
    if (!tensors.emplace(name, tensor).second) throw FormatError("duplicate tensor " + name);
  }
  std::map<std::string, Tensor> velocity;
  const uint64_t n_velocity = binary::ReadU64(in, "velocity count");
  for (uint64_t k = 0; k < n_velocity; ++k) {
    auto [name, tensor] = ReadTensor(in);
    if (!velocity.emplace(name, tensor).second) throw FormatError("duplicate velocity " + name);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after checkpoint");
  }

  Checkpoint checkpoint{train_config, Model(model_config, langrep::Vocabulary(tokens), 0),
                        OptimizerState{}};
  checkpoint.optimizer.config = train_config.sgd;
  checkpoint.optimizer.step_count = step_count;
  auto &entries = checkpoint.model.params().entries();
  if (entries.size() != tensors.size()) {
    throw FormatError("checkpoint holds " + std::to_string(tensors.size()) +
                      " tensors, model expects " + std::to_string(entries.size()));
  }
  for (auto &[name, param] : entries) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint is missing tensor " + name);
    if (it->second.shape() != param.shape()) throw FormatError("shape mismatch for " + name);
    std::copy(it->second.values().begin(), it->second.values().end(),
              param.mutable_values().begin());
  }
  if (!velocity.empty()) {
    if (velocity.size() != entries.size()) throw FormatError("incomplete optimizer state");
    for (const auto &[name, param] : entries) {
      auto it = velocity.find(name);
      if (it == velocity.end() || it->second.shape() != param.shape()) {
        throw FormatError("bad velocity for " + name);
      }
      checkpoint.optimizer.velocity.push_back(it->second);
    }
  }
  return checkpoint;
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open checkpoint " + path);
  return ReadCheckpoint(in);
}

}  // namespace cmn
