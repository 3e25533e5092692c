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

#ifndef LAD_PIPELINE_HPP_
#define LAD_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lad/bank.hpp"
#include "lad/config.hpp"
#include "lad/scene_objects.hpp"
#include "lad/scorer.hpp"

namespace lad {

/// A scene with its image resized to the working resolution.
struct SceneInputs {
  std::string id;
  std::string category = "default";
  FeatureMap image;     // 3 x S x S guide in [0, 1]
  FeatureMap features;  // low-res backbone grid, or full size when pre-upsampled
  bool features_upsampled = false;
  std::vector<MaskPage> masks;
};

/// Reads image, features and masks. Missing features fall back to the toy extractor.
SceneInputs load_scene(const SceneRecord& record, const PipelineConfig& config);

FeatureMap load_image(const std::filesystem::path& path, std::size_t size);

/// Full-resolution features: JBU on the core path, passthrough for bridge output.
FeatureMap upsample_scene(const SceneInputs& scene, const Profile& profile);

struct SceneObjects {
  std::vector<ObjectRecord> records;
  std::vector<std::optional<std::size_t>> source_pages;  // empty entry for the pseudo-object
  DescriptorSet descriptors;
  bool pseudo = false;
};

/// Filters masks and builds per-object maps and descriptors. With
/// `force_pseudo`, or when nothing survives filtering, the whole frame
/// becomes a single object.
SceneObjects analyze_objects(const SceneInputs& scene, const FeatureMap& up, const Profile& profile,
                             bool force_pseudo);

/// Result of running the detector on one query.
struct Detection {
  std::string id;
  std::string category;
  AnomalyMap map;
  nlohmann::json report;  // "timing" holds the only run-dependent fields
  FeatureMap image;
  std::vector<std::string> references;
  std::vector<Assignment> assignments;
  std::vector<std::optional<std::size_t>> query_pages;
  std::vector<std::vector<std::optional<std::size_t>>> reference_pages;
};

class Detector {
 public:
  Detector(PipelineConfig config, LoadedBank bank);

  Detection detect(const SceneRecord& query) const;
  Detection detect(const SceneInputs& query) const;

  const PipelineConfig& config() const { return config_; }
  const TemplateBank& bank() const { return bank_.bank; }

 private:
  std::shared_ptr<const SceneObjects> reference(std::size_t bank_index, const std::string& category,
                                                bool pseudo) const;

  PipelineConfig config_;
  LoadedBank bank_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const SceneObjects>> cache_;
};

/// Writes anomaly.sltf, overlay.png and report.json into `dir`.
void write_detection(const Detection& d, const std::filesystem::path& dir);

/// Report with the run-dependent timing fields removed.
nlohmann::json strip_timing(nlohmann::json report);

struct EvalOptions {
  std::size_t workers = 1;
  std::optional<std::filesystem::path> out_dir;
};

struct EvalResult {
  nlohmann::json metrics;
  std::vector<Detection> detections;  // dataset order
  std::vector<GroundTruth> truths;
};

/// Detects every record with a bounded worker pool and aggregates image
/// AUROC and pixel sPRO. Output order never depends on scheduling.
EvalResult evaluate(const Detector& detector, const Dataset& dataset, const EvalOptions& options);

/// Builds and saves a bank from template records, optionally reduced by coreset.
LoadedBank build_bank_from_dataset(const PipelineConfig& config, const Dataset& templates,
                                   const std::filesystem::path& out,
                                   std::optional<std::size_t> coreset);

/// Counts for labelled correspondence checks between two scenes.
struct MatchQuality {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t expected = 0;
  double precision() const;
  double recall() const;
  MatchQuality& operator+=(const MatchQuality& o);
};

MatchQuality match_quality(const Assignment& assignment,
                           const std::vector<std::string>& query_labels,
                           const std::vector<std::string>& reference_labels);

/// Labels of analysed objects from the per-page labels of their source masks.
std::vector<std::string> object_labels(const std::vector<std::optional<std::size_t>>& pages,
                                       const std::vector<std::string>& page_labels);

}  // namespace lad

#endif  // LAD_PIPELINE_HPP_
