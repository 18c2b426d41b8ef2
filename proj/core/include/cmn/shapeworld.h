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

#ifndef CMN_SHAPEWORLD_H_
#define CMN_SHAPEWORLD_H_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmn/random.h"

// Synthetic grid scenes of colored shapes with templated referring
// expressions of the form "[subj] [relationship] [obj]". Row 0 is the top
// row, so "above" means a smaller row index.
namespace cmn::shapeworld {

enum class ShapeClass { kCircle, kSquare, kTriangle };
enum class SizeClass { kSmall, kLarge };
enum class Relation { kLeftOf, kRightOf, kAbove, kBelow };

inline constexpr std::array<ShapeClass, 3> kAllShapes = {
    ShapeClass::kCircle, ShapeClass::kSquare, ShapeClass::kTriangle};
inline constexpr std::array<SizeClass, 2> kAllSizes = {SizeClass::kSmall,
                                                       SizeClass::kLarge};
inline constexpr std::array<Relation, 4> kAllRelations = {
    Relation::kLeftOf, Relation::kRightOf, Relation::kAbove, Relation::kBelow};

std::vector<std::string> DefaultPalette();

std::string ToString(ShapeClass s);
std::string ToString(SizeClass s);
// Multi-word phrase, e.g. "left of".
std::string ToString(Relation r);
std::optional<ShapeClass> ParseShapeClass(const std::string &s);
std::optional<SizeClass> ParseSizeClass(const std::string &s);
std::optional<Relation> ParseRelation(const std::string &phrase);

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell &) const = default;
};

struct ShapeInstance {
  ShapeClass shape = ShapeClass::kCircle;
  std::string color;
  SizeClass size = SizeClass::kSmall;
  bool operator==(const ShapeInstance &) const = default;
};

// Phrase used in a template slot. The shape class is always named; color and
// size are optional attributes.
struct Description {
  std::string determiner = "the";
  ShapeClass shape = ShapeClass::kCircle;
  std::optional<std::string> color;
  std::optional<SizeClass> size;

  bool Matches(const ShapeInstance &instance) const;
  std::vector<std::string> Tokens() const;
  bool operator==(const Description &) const = default;
};

struct TemplateParts {
  std::string subj;
  std::string rel;
  std::string obj;
  bool operator==(const TemplateParts &) const = default;
};

struct GroundedExpression {
  std::vector<std::string> tokens;
  Cell subject_cell;
  // Absent for data annotated with the subject only.
  std::optional<Cell> object_cell;
  // Generation-time substrings; diagnostics only, never model input.
  TemplateParts template_parts;
  bool operator==(const GroundedExpression &) const = default;
};

struct Scene {
  std::string scene_id;
  int grid_size = 5;
  std::map<Cell, ShapeInstance> cells;
  std::vector<GroundedExpression> expressions;

  bool InGrid(const Cell &c) const {
    return c.row >= 0 && c.col >= 0 && c.row < grid_size && c.col < grid_size;
  }
  const ShapeInstance *At(const Cell &c) const;
  // Candidate regions are every grid cell in row-major order.
  size_t NumCandidates() const {
    return static_cast<size_t>(grid_size) * static_cast<size_t>(grid_size);
  }
  size_t IndexOf(const Cell &c) const {
    return static_cast<size_t>(c.row) * grid_size + static_cast<size_t>(c.col);
  }
  Cell CellAt(size_t index) const {
    return {static_cast<int>(index) / grid_size, static_cast<int>(index) % grid_size};
  }
  bool operator==(const Scene &) const = default;
};

struct Dataset {
  int grid_size = 5;
  std::vector<std::string> palette;
  std::vector<Scene> scenes;
  bool operator==(const Dataset &) const = default;

  const Scene *FindScene(const std::string &scene_id) const;
  size_t NumExpressions() const;
  // True when every expression carries an object cell.
  bool HasObjectGroundTruth() const;
};

// Grid semantics: left/right of require the same row and a strictly smaller
// or greater column; above/below require the same column and a strictly
// smaller or greater row. Distance is unrestricted.
bool RelationHolds(Relation relation, const Cell &subject, const Cell &object);

std::vector<Cell> MatchingCells(const Scene &scene, const Description &desc);

// Every (subject, object) cell pair satisfying the full expression.
std::vector<std::pair<Cell, Cell>> Groundings(const Scene &scene,
                                              const Description &subj,
                                              Relation relation,
                                              const Description &obj);

struct GeneratorConfig {
  size_t n_scenes = 100;
  int grid_size = 5;
  uint64_t seed = 0;
  std::vector<std::string> palette = DefaultPalette();
  int min_shapes = 6;
  int max_shapes = 12;
  // Upper bound on expressions per scene; every scene gets at least one.
  int expressions_per_scene = 2;
  // Layout resamples allowed per scene before giving up.
  int retry_budget = 1000;
  double color_probability = 0.7;
  double size_probability = 0.4;
};

// Generates scenes whose expressions need the relationship to resolve: the
// subject phrase alone matches at least two cells, and exactly one
// (subject, object) pair satisfies the whole expression. Deterministic for a
// given config; each scene draws from its own derived seed. Throws
// GenerationFailure naming the constraint that could not be met.
Dataset GenerateDataset(const GeneratorConfig &config);

// Samples one valid expression for an existing scene, or nullopt after
// `attempts` rejected draws.
std::optional<GroundedExpression> SampleExpression(const Scene &scene,
                                                   const GeneratorConfig &config,
                                                   Rng &rng, int attempts);

// Builds a GroundedExpression from descriptions if they pin down exactly one
// pair with an ambiguous subject; otherwise nullopt.
std::optional<GroundedExpression> GroundExpression(const Scene &scene,
                                                   const Description &subj,
                                                   Relation relation,
                                                   const Description &obj);

// Closed vocabulary of the template language, sorted.
std::vector<std::string> TemplateVocabulary(const std::vector<std::string> &palette);

// --- Region features -------------------------------------------------------

enum class FeatureMode { kSymbolic, kRaster };

struct FeatureConfig {
  FeatureMode mode = FeatureMode::kSymbolic;
  // Side length of the grayscale crop in raster mode.
  int raster_size = 8;
};

struct Box {
  double x_min, y_min, x_max, y_max;
};

struct RegionFeatures {
  std::vector<double> visual;
  std::array<double, 5> spatial;
};

// [x_min/W, y_min/H, x_max/W, y_max/H, area(box)/(W*H)]
std::array<double, 5> SpatialFeature(const Box &box, double image_width,
                                     double image_height);

// Box of a grid cell on the unit-square image.
Box CellBox(int grid_size, const Cell &cell);

size_t VisualFeatureSize(const FeatureConfig &config, size_t palette_size);

// Symbolic mode: onehot(shape) ++ onehot(color) ++ onehot(size), or zeros for
// an empty cell. Raster mode: flattened grayscale crop of the rendered cell.
RegionFeatures ComputeRegionFeatures(const Scene &scene, const Cell &cell,
                                     const std::vector<std::string> &palette,
                                     const FeatureConfig &config = {});

}  // namespace cmn::shapeworld

#endif  // CMN_SHAPEWORLD_H_
