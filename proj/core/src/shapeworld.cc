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

#include "cmn/shapeworld.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cmn/errors.h"

namespace cmn::shapeworld {

std::vector<std::string> DefaultPalette() {
  return {"red", "green", "blue", "yellow", "magenta", "cyan"};
}

std::string ToString(ShapeClass s) {
  switch (s) {
    case ShapeClass::kCircle: return "circle";
    case ShapeClass::kSquare: return "square";
    case ShapeClass::kTriangle: return "triangle";
  }
  return "?";
}

std::string ToString(SizeClass s) {
  return s == SizeClass::kSmall ? "small" : "large";
}

std::string ToString(Relation r) {
  switch (r) {
    case Relation::kLeftOf: return "left of";
    case Relation::kRightOf: return "right of";
    case Relation::kAbove: return "above";
    case Relation::kBelow: return "below";
  }
  return "?";
}

std::optional<ShapeClass> ParseShapeClass(const std::string &s) {
  for (ShapeClass c : kAllShapes)
    if (ToString(c) == s) return c;
  return std::nullopt;
}

std::optional<SizeClass> ParseSizeClass(const std::string &s) {
  for (SizeClass c : kAllSizes)
    if (ToString(c) == s) return c;
  return std::nullopt;
}

std::optional<Relation> ParseRelation(const std::string &phrase) {
  for (Relation r : kAllRelations)
    if (ToString(r) == phrase) return r;
  return std::nullopt;
}

bool Description::Matches(const ShapeInstance &instance) const {
  if (instance.shape != shape) return false;
  if (color && instance.color != *color) return false;
  if (size && instance.size != *size) return false;
  return true;
}

std::vector<std::string> Description::Tokens() const {
  std::vector<std::string> out{determiner};
  if (size) out.push_back(ToString(*size));
  if (color) out.push_back(*color);
  out.push_back(ToString(shape));
  return out;
}

const ShapeInstance *Scene::At(const Cell &c) const {
  auto it = cells.find(c);
  return it == cells.end() ? nullptr : &it->second;
}

const Scene *Dataset::FindScene(const std::string &scene_id) const {
  for (const Scene &s : scenes)
    if (s.scene_id == scene_id) return &s;
  return nullptr;
}

bool Dataset::HasObjectGroundTruth() const {
  for (const Scene &s : scenes)
    for (const GroundedExpression &e : s.expressions)
      if (!e.object_cell) return false;
  return true;
}

size_t Dataset::NumExpressions() const {
  size_t n = 0;
  for (const Scene &s : scenes) n += s.expressions.size();
  return n;
}

bool RelationHolds(Relation relation, const Cell &subject, const Cell &object) {
  switch (relation) {
    case Relation::kLeftOf:
      return subject.row == object.row && subject.col < object.col;
    case Relation::kRightOf:
      return subject.row == object.row && subject.col > object.col;
    case Relation::kAbove:
      return subject.col == object.col && subject.row < object.row;
    case Relation::kBelow:
      return subject.col == object.col && subject.row > object.row;
  }
  return false;
}

std::vector<Cell> MatchingCells(const Scene &scene, const Description &desc) {
  std::vector<Cell> out;
  for (const auto &[cell, instance] : scene.cells)
    if (desc.Matches(instance)) out.push_back(cell);
  return out;
}

std::vector<std::pair<Cell, Cell>> Groundings(const Scene &scene,
                                              const Description &subj,
                                              Relation relation,
                                              const Description &obj) {
  std::vector<std::pair<Cell, Cell>> out;
  const std::vector<Cell> objects = MatchingCells(scene, obj);
  for (const Cell &s : MatchingCells(scene, subj))
    for (const Cell &o : objects)
      if (s != o && RelationHolds(relation, s, o)) out.emplace_back(s, o);
  return out;
}

namespace {

enum class Rejection { kNone, kLayout, kAmbiguity, kUniqueness };

std::string Describe(Rejection r) {
  switch (r) {
    case Rejection::kLayout:
      return "layout (not enough free cells for subject, object and distractor)";
    case Rejection::kAmbiguity:
      return "ambiguity (subject phrase must match at least two cells)";
    case Rejection::kUniqueness:
      return "uniqueness (exactly one subject/object pair must satisfy the expression)";
    case Rejection::kNone:
      break;
  }
  return "none";
}

std::string Join(const std::vector<std::string> &words) {
  std::string out;
  for (const std::string &w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Rejection Check(const Scene &scene, const Description &subj, Relation relation,
                const Description &obj) {
  if (MatchingCells(scene, subj).size() < 2) return Rejection::kAmbiguity;
  if (Groundings(scene, subj, relation, obj).size() != 1) return Rejection::kUniqueness;
  return Rejection::kNone;
}

GroundedExpression Realize(const Description &subj, Relation relation,
                           const Description &obj, const Cell &s, const Cell &o) {
  GroundedExpression expr;
  expr.template_parts = {Join(subj.Tokens()), ToString(relation), Join(obj.Tokens())};
  expr.tokens = subj.Tokens();
  const std::vector<std::string> rel_tokens =
      relation == Relation::kLeftOf    ? std::vector<std::string>{"left", "of"}
      : relation == Relation::kRightOf ? std::vector<std::string>{"right", "of"}
                                       : std::vector<std::string>{ToString(relation)};
  expr.tokens.insert(expr.tokens.end(), rel_tokens.begin(), rel_tokens.end());
  for (const std::string &t : obj.Tokens()) expr.tokens.push_back(t);
  expr.subject_cell = s;
  expr.object_cell = o;
  return expr;
}

template <typename T, size_t N>
T Pick(const std::array<T, N> &items, Rng &rng) {
  return items[rng.UniformInt(N)];
}

const std::string &PickColor(const std::vector<std::string> &palette, Rng &rng) {
  return palette[rng.UniformInt(palette.size())];
}

ShapeInstance RandomInstance(const std::vector<std::string> &palette, Rng &rng) {
  ShapeInstance out;
  out.shape = Pick(kAllShapes, rng);
  out.color = PickColor(palette, rng);
  out.size = Pick(kAllSizes, rng);
  return out;
}

ShapeInstance RandomInstanceMatching(const Description &desc,
                                     const std::vector<std::string> &palette,
                                     Rng &rng) {
  ShapeInstance out = RandomInstance(palette, rng);
  out.shape = desc.shape;
  if (desc.color) out.color = *desc.color;
  if (desc.size) out.size = *desc.size;
  return out;
}

std::string RandomDeterminer(Rng &rng) { return rng.Bernoulli(0.5) ? "the" : "a"; }

Description RandomDescription(const GeneratorConfig &config, Rng &rng) {
  Description d;
  d.determiner = RandomDeterminer(rng);
  d.shape = Pick(kAllShapes, rng);
  if (rng.Bernoulli(config.color_probability)) d.color = PickColor(config.palette, rng);
  if (rng.Bernoulli(config.size_probability)) d.size = Pick(kAllSizes, rng);
  return d;
}

Description DescribeInstance(const ShapeInstance &instance,
                             const GeneratorConfig &config, Rng &rng) {
  Description d;
  d.determiner = RandomDeterminer(rng);
  d.shape = instance.shape;
  if (rng.Bernoulli(config.color_probability)) d.color = instance.color;
  if (rng.Bernoulli(config.size_probability)) d.size = instance.size;
  return d;
}

std::vector<Cell> FreeCells(const Scene &scene) {
  std::vector<Cell> out;
  for (int r = 0; r < scene.grid_size; ++r)
    for (int c = 0; c < scene.grid_size; ++c)
      if (!scene.cells.count({r, c})) out.push_back({r, c});
  return out;
}

// Places a subject/object pair satisfying a random relation, one or two
// subject look-alikes, then random filler shapes. Returns the rejection
// reason when the layout does not pin down a unique grounding.
Rejection PlantedScene(const GeneratorConfig &config, Rng &rng, Scene &scene) {
  const int capacity = config.grid_size * config.grid_size;
  const int n_shapes = std::min<int>(
      capacity, static_cast<int>(rng.UniformRange(config.min_shapes, config.max_shapes)));
  if (n_shapes < 3) return Rejection::kLayout;

  const Description subj = RandomDescription(config, rng);
  const Relation relation = Pick(kAllRelations, rng);
  const Description obj = RandomDescription(config, rng);

  const Cell s{static_cast<int>(rng.UniformInt(config.grid_size)),
               static_cast<int>(rng.UniformInt(config.grid_size))};
  std::vector<Cell> partners;
  for (int r = 0; r < config.grid_size; ++r)
    for (int c = 0; c < config.grid_size; ++c)
      if (RelationHolds(relation, s, {r, c})) partners.push_back({r, c});
  if (partners.empty()) return Rejection::kLayout;
  const Cell o = partners[rng.UniformInt(partners.size())];
  scene.cells[s] = RandomInstanceMatching(subj, config.palette, rng);
  scene.cells[o] = RandomInstanceMatching(obj, config.palette, rng);

  const int n_distractors = std::min<int>(n_shapes - 2,
                                          static_cast<int>(rng.UniformRange(1, 2)));
  for (int k = 0; k < n_distractors; ++k) {
    std::vector<Cell> free = FreeCells(scene);
    scene.cells[free[rng.UniformInt(free.size())]] =
        RandomInstanceMatching(subj, config.palette, rng);
  }
  while (static_cast<int>(scene.cells.size()) < n_shapes) {
    std::vector<Cell> free = FreeCells(scene);
    scene.cells[free[rng.UniformInt(free.size())]] = RandomInstance(config.palette, rng);
  }

  const Rejection verdict = Check(scene, subj, relation, obj);
  if (verdict != Rejection::kNone) return verdict;
  scene.expressions.push_back(Realize(subj, relation, obj, s, o));
  return Rejection::kNone;
}

void ValidateConfig(const GeneratorConfig &config) {
  if (config.n_scenes < 1) throw ConfigError("n_scenes must be >= 1");
  if (config.grid_size < 1) throw ConfigError("grid_size must be >= 1");
  if (config.palette.empty()) throw ConfigError("palette must not be empty");
  if (config.min_shapes < 1 || config.max_shapes < config.min_shapes) {
    throw ConfigError("shape count range is empty");
  }
  if (config.expressions_per_scene < 1) {
    throw ConfigError("expressions_per_scene must be >= 1");
  }
  if (config.retry_budget < 1) throw ConfigError("retry_budget must be >= 1");
}

std::string SceneId(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene-%06zu", index);
  return buf;
}

}  // namespace

std::optional<GroundedExpression> GroundExpression(const Scene &scene,
                                                   const Description &subj,
                                                   Relation relation,
                                                   const Description &obj) {
  if (Check(scene, subj, relation, obj) != Rejection::kNone) return std::nullopt;
  const auto pair = Groundings(scene, subj, relation, obj).front();
  return Realize(subj, relation, obj, pair.first, pair.second);
}

std::optional<GroundedExpression> SampleExpression(const Scene &scene,
                                                   const GeneratorConfig &config,
                                                   Rng &rng, int attempts) {
  if (scene.cells.size() < 2) return std::nullopt;
  std::vector<Cell> occupied;
  for (const auto &entry : scene.cells) occupied.push_back(entry.first);
  for (int a = 0; a < attempts; ++a) {
    const Cell s = occupied[rng.UniformInt(occupied.size())];
    const Relation relation = Pick(kAllRelations, rng);
    std::vector<Cell> partners;
    for (const Cell &c : occupied)
      if (RelationHolds(relation, s, c)) partners.push_back(c);
    if (partners.empty()) continue;
    const Cell o = partners[rng.UniformInt(partners.size())];
    const Description subj = DescribeInstance(scene.cells.at(s), config, rng);
    const Description obj = DescribeInstance(scene.cells.at(o), config, rng);
    auto expr = GroundExpression(scene, subj, relation, obj);
    if (expr && expr->subject_cell == s && expr->object_cell == o) return expr;
  }
  return std::nullopt;
}

Dataset GenerateDataset(const GeneratorConfig &config) {
  ValidateConfig(config);
  Dataset dataset;
  dataset.grid_size = config.grid_size;
  dataset.palette = config.palette;
  dataset.scenes.reserve(config.n_scenes);
  for (size_t i = 0; i < config.n_scenes; ++i) {
    Rng rng(Rng::Derive(config.seed, i));
    std::map<Rejection, int> rejections;
    std::optional<Scene> accepted;
    for (int attempt = 0; attempt < config.retry_budget && !accepted; ++attempt) {
      Scene scene;
      scene.scene_id = SceneId(i);
      scene.grid_size = config.grid_size;
      const Rejection verdict = PlantedScene(config, rng, scene);
      if (verdict == Rejection::kNone) {
        accepted = std::move(scene);
      } else {
        ++rejections[verdict];
      }
    }
    if (!accepted) {
      auto worst = std::max_element(
          rejections.begin(), rejections.end(),
          [](const auto &a, const auto &b) { return a.second < b.second; });
      throw GenerationFailure("scene " + std::to_string(i) + ": no valid layout in " +
                              std::to_string(config.retry_budget) +
                              " attempts; failing constraint: " +
                              Describe(worst->first));
    }
    while (static_cast<int>(accepted->expressions.size()) < config.expressions_per_scene) {
      auto extra = SampleExpression(*accepted, config, rng, 50);
      if (!extra) break;
      const bool duplicate = std::any_of(
          accepted->expressions.begin(), accepted->expressions.end(),
          [&](const GroundedExpression &e) { return e.tokens == extra->tokens; });
      if (duplicate) break;
      accepted->expressions.push_back(std::move(*extra));
    }
    dataset.scenes.push_back(std::move(*accepted));
  }
  return dataset;
}

std::vector<std::string> TemplateVocabulary(const std::vector<std::string> &palette) {
  std::vector<std::string> words = {"the", "a", "left", "right", "of", "above", "below"};
  for (ShapeClass s : kAllShapes) words.push_back(ToString(s));
  for (SizeClass s : kAllSizes) words.push_back(ToString(s));
  words.insert(words.end(), palette.begin(), palette.end());
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

std::array<double, 5> SpatialFeature(const Box &box, double image_width,
                                     double image_height) {
  const double area = (box.x_max - box.x_min) * (box.y_max - box.y_min);
  return {box.x_min / image_width, box.y_min / image_height,
          box.x_max / image_width, box.y_max / image_height,
          area / (image_width * image_height)};
}

Box CellBox(int grid_size, const Cell &cell) {
  const double g = static_cast<double>(grid_size);
  return {cell.col / g, cell.row / g, (cell.col + 1) / g, (cell.row + 1) / g};
}

size_t VisualFeatureSize(const FeatureConfig &config, size_t palette_size) {
  if (config.mode == FeatureMode::kRaster) {
    return static_cast<size_t>(config.raster_size) * config.raster_size;
  }
  return kAllShapes.size() + palette_size + kAllSizes.size();
}

namespace {

bool Covers(const ShapeInstance &instance, double u, double v) {
  // u, v are pixel-center offsets from the cell center in [-0.5, 0.5].
  const double r = instance.size == SizeClass::kLarge ? 0.42 : 0.25;
  switch (instance.shape) {
    case ShapeClass::kCircle:
      return u * u + v * v <= r * r;
    case ShapeClass::kSquare:
      return std::abs(u) <= 0.85 * r && std::abs(v) <= 0.85 * r;
    case ShapeClass::kTriangle: {
      if (v < -r || v > r) return false;
      const double t = (v + r) / (2 * r);  // 0 at the apex, 1 at the base
      return std::abs(u) <= t * r;
    }
  }
  return false;
}

}  // namespace

RegionFeatures ComputeRegionFeatures(const Scene &scene, const Cell &cell,
                                     const std::vector<std::string> &palette,
                                     const FeatureConfig &config) {
  if (!scene.InGrid(cell)) throw ContractViolation("cell outside the grid");
  RegionFeatures out;
  out.spatial = SpatialFeature(CellBox(scene.grid_size, cell), 1.0, 1.0);
  out.visual.assign(VisualFeatureSize(config, palette.size()), 0.0);
  const ShapeInstance *instance = scene.At(cell);
  if (instance == nullptr) return out;
  auto color_it = std::find(palette.begin(), palette.end(), instance->color);
  if (color_it == palette.end()) {
    throw ContractViolation("color " + instance->color + " is not in the palette");
  }
  const size_t color_index = static_cast<size_t>(color_it - palette.begin());
  if (config.mode == FeatureMode::kSymbolic) {
    out.visual[static_cast<size_t>(instance->shape)] = 1.0;
    out.visual[kAllShapes.size() + color_index] = 1.0;
    out.visual[kAllShapes.size() + palette.size() + static_cast<size_t>(instance->size)] = 1.0;
    return out;
  }
  const int n = config.raster_size;
  const double intensity = static_cast<double>(color_index + 1) / palette.size();
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double u = (x + 0.5) / n - 0.5, v = (y + 0.5) / n - 0.5;
      if (Covers(*instance, u, v)) out.visual[static_cast<size_t>(y * n + x)] = intensity;
    }
  return out;
}

}  // namespace cmn::shapeworld
