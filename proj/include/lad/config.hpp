// Copyright 2026 The lad Authors.
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

#ifndef LAD_CONFIG_HPP_
#define LAD_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lad/bank.hpp"
#include "lad/dcga.hpp"
#include "lad/matcher.hpp"
#include "lad/metrics.hpp"
#include "lad/scorer.hpp"
#include "lad/upsampler.hpp"

namespace lad {

struct MaskFilter {
  double min_area_frac = 0.001;
  double max_area_frac = 0.95;
};

/// Everything that may differ between dataset categories.
struct Profile {
  MaskFilter mask_filter;
  std::size_t k = kDefaultNeighbors;
  JbuParams upsample;
  DcgaParams dcga;
  SinkhornParams match;
  double match_threshold = kDefaultMatchThreshold;
  AmmParams amm;
};

void validate(const Profile& profile);

// Fields present in `j` override `base`; unknown keys are rejected.
Profile profile_from_json(const nlohmann::json& j, const Profile& base);
nlohmann::json to_json(const Profile& profile);

struct PipelineConfig {
  Profile base;
  std::map<std::string, Profile> categories;
  std::uint64_t seed = 0;
  std::size_t image_size = 224;
  std::size_t toy_patch = 8;
  bool lightweight = false;
  std::string ablation = "none";

  const Profile& profile(const std::string& category) const;
  std::vector<Profile*> all_profiles();
};

PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

/// Ablation ids: "none", "dcga=dcga", "dcga=gmp", "dcga=gap".
void apply_ablation(PipelineConfig& config, const std::string& id);

/// Propagates the configuration seed into every profile.
void apply_seed(PipelineConfig& config, std::uint64_t seed);

/// One image of a dataset manifest. Paths are absolute once loaded.
struct SceneRecord {
  std::string id;
  std::string category = "default";
  std::filesystem::path image;
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> masks;
  std::string backbone = "toy";
  std::string upsample_source = "core";  // "bridge" means features are already full size
  std::optional<int> label;
  std::optional<std::filesystem::path> gt;
  bool no_objects = false;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<SceneRecord> records;
};

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

struct GroundTruth {
  int label = 0;
  std::string anomaly = "none";
  std::vector<GtRegion> regions;
  std::vector<std::string> mask_labels;  // correspondence label per mask page
};

GroundTruth load_ground_truth(const std::filesystem::path& gt_json);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace lad

#endif  // LAD_CONFIG_HPP_
