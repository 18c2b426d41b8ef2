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

#include "cmn/dataset_io.h"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "cmn/binary_io.h"
#include "cmn/errors.h"

namespace cmn::shapeworld {
namespace {

using nlohmann::json;

json CellToJson(const Cell &c) { return json::array({c.row, c.col}); }

Cell CellFromJson(const json &j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("cell must be [row, col]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

json SceneToJson(const Scene &scene) {
  json objects = json::array();
  for (const auto &[cell, instance] : scene.cells) {
    objects.push_back({{"row", cell.row},
                       {"col", cell.col},
                       {"shape", ToString(instance.shape)},
                       {"color", instance.color},
                       {"size", ToString(instance.size)}});
  }
  json expressions = json::array();
  for (const GroundedExpression &e : scene.expressions) {
    expressions.push_back({{"tokens", e.tokens},
                           {"subject_cell", CellToJson(e.subject_cell)},
                           {"object_cell", e.object_cell ? CellToJson(*e.object_cell) : json()},
                           {"template_parts",
                            {{"subj", e.template_parts.subj},
                             {"rel", e.template_parts.rel},
                             {"obj", e.template_parts.obj}}}});
  }
  return {{"scene_id", scene.scene_id},
          {"grid_size", scene.grid_size},
          {"objects", objects},
          {"expressions", expressions}};
}

Scene SceneFromJson(const json &j, const std::vector<std::string> &palette) {
  Scene scene;
  scene.scene_id = j.at("scene_id").get<std::string>();
  scene.grid_size = j.at("grid_size").get<int>();
  if (scene.grid_size < 1) throw std::invalid_argument("grid_size must be positive");
  for (const json &o : j.at("objects")) {
    const Cell cell{o.at("row").get<int>(), o.at("col").get<int>()};
    if (!scene.InGrid(cell)) throw std::invalid_argument("object outside the grid");
    ShapeInstance instance;
    const auto shape = ParseShapeClass(o.at("shape").get<std::string>());
    const auto size = ParseSizeClass(o.at("size").get<std::string>());
    if (!shape) throw std::invalid_argument("unknown shape " + o.at("shape").dump());
    if (!size) throw std::invalid_argument("unknown size " + o.at("size").dump());
    instance.shape = *shape;
    instance.size = *size;
    instance.color = o.at("color").get<std::string>();
    if (std::find(palette.begin(), palette.end(), instance.color) == palette.end()) {
      throw std::invalid_argument("color " + instance.color + " not in palette");
    }
    if (!scene.cells.emplace(cell, instance).second) {
      throw std::invalid_argument("two objects in one cell");
    }
  }
  for (const json &e : j.at("expressions")) {
    GroundedExpression expr;
    expr.tokens = e.at("tokens").get<std::vector<std::string>>();
    if (expr.tokens.empty()) throw std::invalid_argument("empty token list");
    expr.subject_cell = CellFromJson(e.at("subject_cell"));
    if (!e.at("object_cell").is_null()) expr.object_cell = CellFromJson(e.at("object_cell"));
    if (!scene.At(expr.subject_cell) || (expr.object_cell && !scene.At(*expr.object_cell))) {
      throw std::invalid_argument("ground-truth cell is empty");
    }
    if (expr.object_cell == expr.subject_cell) {
      throw std::invalid_argument("subject and object cells coincide");
    }
    const json &parts = e.at("template_parts");
    expr.template_parts = {parts.at("subj").get<std::string>(),
                           parts.at("rel").get<std::string>(),
                           parts.at("obj").get<std::string>()};
    scene.expressions.push_back(std::move(expr));
  }
  return scene;
}

}  // namespace

void WriteDataset(const Dataset &dataset, std::ostream &out) {
  const json header = {{"format", kDatasetFormat},
                       {"grid_size", dataset.grid_size},
                       {"n_scenes", dataset.scenes.size()},
                       {"palette", dataset.palette}};
  out << header.dump() << '\n';
  for (const Scene &scene : dataset.scenes) out << SceneToJson(scene).dump() << '\n';
}

void SaveDataset(const Dataset &dataset, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteDataset(dataset, out);
  if (!out) throw std::runtime_error("write failed for " + path);
}

Dataset ReadDataset(std::istream &in) {
  Dataset dataset;
  std::string line;
  size_t line_no = 0;
  size_t declared = 0;
  bool have_header = false;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (j.value("format", "") != kDatasetFormat) {
          throw std::invalid_argument(std::string("expected format ") + kDatasetFormat);
        }
        dataset.grid_size = j.at("grid_size").get<int>();
        dataset.palette = j.at("palette").get<std::vector<std::string>>();
        declared = j.at("n_scenes").get<size_t>();
        have_header = true;
        continue;
      }
      Scene scene = SceneFromJson(j, dataset.palette);
      if (scene.grid_size != dataset.grid_size) {
        throw std::invalid_argument("scene grid size differs from header");
      }
      if (!ids.insert(scene.scene_id).second) {
        throw std::invalid_argument("duplicate scene_id " + scene.scene_id);
      }
      dataset.scenes.push_back(std::move(scene));
    } catch (const std::exception &e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(line_no + 1, "missing shapeworld header");
  if (dataset.scenes.size() != declared) {
    throw ParseError(line_no, "header declares " + std::to_string(declared) +
                                  " scenes, found " +
                                  std::to_string(dataset.scenes.size()));
  }
  return dataset;
}

Dataset LoadDataset(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open dataset " + path);
  return ReadDataset(in);
}

uint64_t SceneHash(const std::string &scene_id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scene_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

size_t TestCountForFraction(size_t n_scenes, double test_fraction) {
  if (test_fraction < 0 || test_fraction > 1) {
    throw ConfigError("test fraction must lie in [0, 1]");
  }
  return static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n_scenes)));
}

DatasetSplit SplitByHash(const Dataset &dataset, size_t n_test) {
  if (n_test > dataset.scenes.size()) {
    throw ContractViolation("test split larger than the dataset");
  }
  std::vector<std::pair<uint64_t, size_t>> ranked;
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    ranked.emplace_back(SceneHash(dataset.scenes[i].scene_id), i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto &a, const auto &b) {
    if (a.first != b.first) return a.first < b.first;
    return dataset.scenes[a.second].scene_id < dataset.scenes[b.second].scene_id;
  });
  std::vector<bool> in_test(dataset.scenes.size(), false);
  for (size_t k = 0; k < n_test; ++k) in_test[ranked[k].second] = true;
  DatasetSplit split;
  for (Dataset *part : {&split.train, &split.test}) {
    part->grid_size = dataset.grid_size;
    part->palette = dataset.palette;
  }
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    (in_test[i] ? split.test : split.train).scenes.push_back(dataset.scenes[i]);
  }
  return split;
}

void WriteRegionFile(const std::vector<RegionRecord> &records, std::ostream &out) {
  out.write("CMNF", 4);
  for (const RegionRecord &r : records) {
    binary::WriteU64(out, r.region_id);
    for (double v : r.box) binary::WriteF64(out, v);
    binary::WriteU64(out, r.feature.size());
    for (double v : r.feature) binary::WriteF64(out, v);
  }
}

std::vector<RegionRecord> ReadRegionFile(std::istream &in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "CMNF") {
    throw FormatError("region file does not start with magic CMNF");
  }
  std::vector<RegionRecord> records;
  while (in.peek() != std::char_traits<char>::eof()) {
    RegionRecord r;
    r.region_id = binary::ReadU64(in, "region id");
    for (double &v : r.box) v = binary::ReadF64(in, "region box");
    const uint64_t n = binary::ReadU64(in, "feature length");
    if (n > (uint64_t{1} << 32)) throw FormatError("implausible feature length");
    r.feature.resize(n);
    for (double &v : r.feature) v = binary::ReadF64(in, "feature value");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace cmn::shapeworld
