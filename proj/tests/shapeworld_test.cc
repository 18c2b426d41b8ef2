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

#include <set>
#include <sstream>

#include "cmn/dataset_io.h"
#include "cmn/errors.h"
#include "cmn/shapeworld.h"

namespace cmn::shapeworld {
namespace {

// Independent reading of a token sequence: determiner, optional size,
// optional color, shape, relation words, then the same for the object.
struct Phrase {
  std::string shape;
  std::string color;
  std::string size;
};

struct ParsedTokens {
  Phrase subj, obj;
  std::string rel;
};

ParsedTokens ParseTokens(const std::vector<std::string> &tokens,
                         const std::vector<std::string> &palette) {
  size_t i = 0;
  auto phrase = [&](Phrase &p) {
    EXPECT_TRUE(tokens.at(i) == "the" || tokens.at(i) == "a");
    ++i;
    if (tokens.at(i) == "small" || tokens.at(i) == "large") p.size = tokens.at(i++);
    if (std::find(palette.begin(), palette.end(), tokens.at(i)) != palette.end()) {
      p.color = tokens.at(i++);
    }
    p.shape = tokens.at(i++);
    EXPECT_TRUE(p.shape == "circle" || p.shape == "square" || p.shape == "triangle") << p.shape;
  };
  ParsedTokens out;
  phrase(out.subj);
  if (tokens.at(i) == "left" || tokens.at(i) == "right") {
    out.rel = tokens.at(i) + " " + tokens.at(i + 1);
    EXPECT_EQ(tokens.at(i + 1), "of");
    i += 2;
  } else {
    out.rel = tokens.at(i++);
  }
  phrase(out.obj);
  EXPECT_EQ(i, tokens.size());
  return out;
}

const char *ShapeName(ShapeClass s) {
  switch (s) {
    case ShapeClass::kCircle: return "circle";
    case ShapeClass::kSquare: return "square";
    default: return "triangle";
  }
}

bool PhraseMatches(const Phrase &p, const ShapeInstance &s) {
  if (p.shape != ShapeName(s.shape)) return false;
  if (!p.color.empty() && p.color != s.color) return false;
  if (!p.size.empty() && p.size != (s.size == SizeClass::kSmall ? "small" : "large")) return false;
  return true;
}

bool RelHolds(const std::string &rel, int r1, int c1, int r2, int c2) {
  if (rel == "left of") return r1 == r2 && c1 < c2;
  if (rel == "right of") return r1 == r2 && c1 > c2;
  if (rel == "above") return c1 == c2 && r1 < r2;
  if (rel == "below") return c1 == c2 && r1 > r2;
  ADD_FAILURE() << "unknown relation " << rel;
  return false;
}

struct Evaluation {
  size_t subject_matches = 0;
  std::vector<std::pair<Cell, Cell>> pairs;
};

Evaluation Evaluate(const Scene &scene, const std::vector<std::string> &tokens,
                    const std::vector<std::string> &palette) {
  const ParsedTokens parsed = ParseTokens(tokens, palette);
  Evaluation e;
  for (const auto &[c1, s1] : scene.cells) {
    if (!PhraseMatches(parsed.subj, s1)) continue;
    ++e.subject_matches;
    for (const auto &[c2, s2] : scene.cells) {
      if (c1 == c2 || !PhraseMatches(parsed.obj, s2)) continue;
      if (RelHolds(parsed.rel, c1.row, c1.col, c2.row, c2.col)) e.pairs.push_back({c1, c2});
    }
  }
  return e;
}

TEST(ShapeworldTest, GenerationIsDeterministic) {
  GeneratorConfig config;
  config.n_scenes = 10;
  config.seed = 7;
  std::ostringstream a, b;
  WriteDataset(GenerateDataset(config), a);
  WriteDataset(GenerateDataset(config), b);
  EXPECT_EQ(a.str(), b.str());
  config.seed = 8;
  std::ostringstream c;
  WriteDataset(GenerateDataset(config), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(ShapeworldTest, EveryExpressionHasExactlyTheStoredGrounding) {
  GeneratorConfig config;
  config.n_scenes = 500;
  config.seed = 3;
  const Dataset dataset = GenerateDataset(config);
  size_t expressions = 0;
  for (const Scene &scene : dataset.scenes) {
    ASSERT_FALSE(scene.expressions.empty());
    EXPECT_GE(static_cast<int>(scene.cells.size()), config.min_shapes);
    EXPECT_LE(static_cast<int>(scene.cells.size()), config.max_shapes);
    EXPECT_EQ(scene.NumCandidates(), 25u);
    for (const auto &expr : scene.expressions) {
      ++expressions;
      const Evaluation e = Evaluate(scene, expr.tokens, dataset.palette);
      EXPECT_GE(e.subject_matches, 2u) << scene.scene_id;
      ASSERT_EQ(e.pairs.size(), 1u) << scene.scene_id;
      EXPECT_EQ(e.pairs[0].first, expr.subject_cell);
      ASSERT_TRUE(expr.object_cell.has_value());
      EXPECT_EQ(e.pairs[0].second, *expr.object_cell);
      EXPECT_NE(expr.subject_cell, *expr.object_cell);
      EXPECT_NE(scene.At(expr.subject_cell), nullptr);
      EXPECT_NE(scene.At(*expr.object_cell), nullptr);
    }
  }
  EXPECT_GE(expressions, 1000u);
}

TEST(ShapeworldTest, TemplatePartsConcatenateToTokens) {
  GeneratorConfig config;
  config.n_scenes = 50;
  const Dataset dataset = GenerateDataset(config);
  for (const Scene &scene : dataset.scenes) {
    for (const auto &expr : scene.expressions) {
      std::string joined;
      for (const auto &t : expr.tokens) joined += (joined.empty() ? "" : " ") + t;
      const auto &p = expr.template_parts;
      EXPECT_EQ(joined, p.subj + " " + p.rel + " " + p.obj);
    }
  }
}

TEST(ShapeworldTest, AllRelationsAndTokensAppear) {
  GeneratorConfig config;
  config.n_scenes = 300;
  const Dataset dataset = GenerateDataset(config);
  std::set<std::string> rels, words;
  for (const Scene &scene : dataset.scenes) {
    for (const auto &expr : scene.expressions) {
      rels.insert(expr.template_parts.rel);
      words.insert(expr.tokens.begin(), expr.tokens.end());
    }
  }
  EXPECT_EQ(rels, (std::set<std::string>{"left of", "right of", "above", "below"}));
  const auto vocab = TemplateVocabulary(dataset.palette);
  for (const auto &w : words) {
    EXPECT_TRUE(std::binary_search(vocab.begin(), vocab.end(), w)) << w;
  }
}

TEST(ShapeworldTest, RelationSemantics) {
  EXPECT_TRUE(RelationHolds(Relation::kAbove, {1, 2}, {3, 2}));
  EXPECT_FALSE(RelationHolds(Relation::kAbove, {3, 2}, {1, 2}));
  EXPECT_FALSE(RelationHolds(Relation::kAbove, {1, 2}, {3, 3}));
  EXPECT_TRUE(RelationHolds(Relation::kBelow, {4, 0}, {0, 0}));
  EXPECT_TRUE(RelationHolds(Relation::kLeftOf, {2, 0}, {2, 4}));
  EXPECT_FALSE(RelationHolds(Relation::kLeftOf, {2, 0}, {1, 4}));
  EXPECT_TRUE(RelationHolds(Relation::kRightOf, {2, 3}, {2, 1}));
  EXPECT_FALSE(RelationHolds(Relation::kRightOf, {2, 3}, {2, 3}));
}

TEST(ShapeworldTest, RelationPredicateHoldsOnGroundTruth) {
  GeneratorConfig config;
  config.n_scenes = 600;
  config.seed = 11;
  const Dataset dataset = GenerateDataset(config);
  size_t checked = 0;
  for (const Scene &scene : dataset.scenes) {
    for (const auto &expr : scene.expressions) {
      const auto rel = ParseRelation(expr.template_parts.rel);
      ASSERT_TRUE(rel.has_value());
      const Cell s = expr.subject_cell, o = *expr.object_cell;
      EXPECT_TRUE(RelHolds(expr.template_parts.rel, s.row, s.col, o.row, o.col));
      ++checked;
    }
  }
  EXPECT_GE(checked, 1000u);
}

TEST(ShapeworldTest, UnsatisfiableConfigFailsWithConstraint) {
  GeneratorConfig config;
  config.n_scenes = 1;
  config.grid_size = 1;
  config.min_shapes = 1;
  config.max_shapes = 1;
  config.retry_budget = 20;
  try {
    GenerateDataset(config);
    FAIL() << "expected a generation failure";
  } catch (const GenerationFailure &e) {
    EXPECT_NE(std::string(e.what()).find("constraint"), std::string::npos) << e.what();
  }
}

TEST(ShapeworldTest, GroundExpressionRejectsUnambiguousSubject) {
  Scene scene;
  scene.cells[{0, 0}] = {ShapeClass::kCircle, "red", SizeClass::kSmall};
  scene.cells[{0, 3}] = {ShapeClass::kSquare, "blue", SizeClass::kSmall};
  Description subj{"the", ShapeClass::kCircle, std::nullopt, std::nullopt};
  Description obj{"a", ShapeClass::kSquare, std::nullopt, std::nullopt};
  EXPECT_FALSE(GroundExpression(scene, subj, Relation::kLeftOf, obj).has_value());
  scene.cells[{2, 2}] = {ShapeClass::kCircle, "green", SizeClass::kLarge};
  const auto g = GroundExpression(scene, subj, Relation::kLeftOf, obj);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->subject_cell, (Cell{0, 0}));
  EXPECT_EQ(*g->object_cell, (Cell{0, 3}));
  EXPECT_EQ(g->tokens, (std::vector<std::string>{"the", "circle", "left", "of", "a", "square"}));
}

TEST(FeaturesTest, SpatialFeatureOfWholeImage) {
  const auto x = SpatialFeature({0, 0, 1, 1}, 1, 1);
  EXPECT_EQ(x, (std::array<double, 5>{0, 0, 1, 1, 1}));
  const auto y = SpatialFeature({0, 0, 640, 480}, 640, 480);
  EXPECT_EQ(y, (std::array<double, 5>{0, 0, 1, 1, 1}));
}

TEST(FeaturesTest, TopLeftCell) {
  Scene scene;
  const auto f = ComputeRegionFeatures(scene, {0, 0}, DefaultPalette());
  const std::array<double, 5> expected = {0, 0, 0.2, 0.2, 0.04};
  for (size_t i = 0; i < 5; ++i) EXPECT_NEAR(f.spatial[i], expected[i], 1e-12);
}

TEST(FeaturesTest, EmptyCellHasZeroVisual) {
  Scene scene;
  const auto f = ComputeRegionFeatures(scene, {3, 4}, DefaultPalette());
  EXPECT_EQ(f.visual.size(), 11u);
  for (double v : f.visual) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(f.spatial[4], 0.04, 1e-12);
}

TEST(FeaturesTest, SymbolicOnehots) {
  Scene scene;
  scene.cells[{1, 1}] = {ShapeClass::kTriangle, "blue", SizeClass::kLarge};
  const auto f = ComputeRegionFeatures(scene, {1, 1}, DefaultPalette());
  std::vector<double> expected(11, 0.0);
  expected[2] = 1;       // triangle
  expected[3 + 2] = 1;   // blue
  expected[9 + 1] = 1;   // large
  EXPECT_EQ(f.visual, expected);
}

TEST(FeaturesTest, RasterModeHasCropSize) {
  Scene scene;
  scene.cells[{1, 1}] = {ShapeClass::kCircle, "red", SizeClass::kLarge};
  FeatureConfig config{FeatureMode::kRaster, 6};
  const auto f = ComputeRegionFeatures(scene, {1, 1}, DefaultPalette(), config);
  EXPECT_EQ(f.visual.size(), 36u);
  double ink = 0;
  for (double v : f.visual) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    ink += v;
  }
  EXPECT_GT(ink, 0.0);
  const auto empty = ComputeRegionFeatures(scene, {0, 0}, DefaultPalette(), config);
  for (double v : empty.visual) EXPECT_EQ(v, 0.0);
}

TEST(FeaturesTest, SpatialPropertiesOnAllGrids) {
  for (int g = 1; g <= 9; ++g) {
    Scene scene;
    scene.grid_size = g;
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        const auto f = ComputeRegionFeatures(scene, {r, c}, DefaultPalette());
        for (double v : f.spatial) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 1.0);
        }
        EXPECT_NEAR(f.spatial[4], (f.spatial[2] - f.spatial[0]) * (f.spatial[3] - f.spatial[1]),
                    1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace cmn::shapeworld
