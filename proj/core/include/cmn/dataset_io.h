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

#ifndef CMN_DATASET_IO_H_
#define CMN_DATASET_IO_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmn/shapeworld.h"

namespace cmn::shapeworld {

inline constexpr const char *kDatasetFormat = "shapeworld-v1";

// Line-delimited JSON. Line 1 is the header
//   {"format":"shapeworld-v1","grid_size":5,"n_scenes":N,"palette":[...]}
// and every following line is one scene:
//   {"scene_id":"scene-000000","grid_size":5,
//    "objects":[{"row":0,"col":1,"shape":"square","color":"green","size":"small"}],
//    "expressions":[{"tokens":[...],"subject_cell":[r,c],"object_cell":[r,c] or null,
//                    "template_parts":{"subj":"...","rel":"...","obj":"..."}}]}
// Keys are written in sorted order, so output is byte-stable.
void WriteDataset(const Dataset &dataset, std::ostream &out);
void SaveDataset(const Dataset &dataset, const std::string &path);

// Throws ParseError naming the offending line.
Dataset ReadDataset(std::istream &in);
Dataset LoadDataset(const std::string &path);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

// Deterministic split by scene-id hash: the `n_test` scenes with the smallest
// FNV-1a hash of their id form the test set. Scene order is preserved inside
// each part.
DatasetSplit SplitByHash(const Dataset &dataset, size_t n_test);
size_t TestCountForFraction(size_t n_scenes, double test_fraction);
uint64_t SceneHash(const std::string &scene_id);

// --- Region-feature container ---------------------------------------------
//
// Binary file: magic "CMNF", then records until end of file, each
//   u64 region_id, 4 x f64 box (x_min, y_min, x_max, y_max),
//   u64 feature length, length x f64 feature values,
// all little-endian.
struct RegionRecord {
  uint64_t region_id = 0;
  std::array<double, 4> box{};
  std::vector<double> feature;
  bool operator==(const RegionRecord &) const = default;
};

void WriteRegionFile(const std::vector<RegionRecord> &records, std::ostream &out);
// Throws FormatError on a bad magic or a truncated record.
std::vector<RegionRecord> ReadRegionFile(std::istream &in);

}  // namespace cmn::shapeworld

#endif  // CMN_DATASET_IO_H_
