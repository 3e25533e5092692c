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

#ifndef LAD_BANK_HPP_
#define LAD_BANK_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lad/common.hpp"
#include "lad/tensor_store.hpp"

namespace lad {

struct FeatureShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t flat_size() const { return channels * height * width; }
  bool operator==(const FeatureShape&) const = default;
};

struct BankEntry {
  std::string template_id;
  std::vector<float> flat;
};

struct NamedFeatureMap {
  std::string id;
  FeatureMap map;
};

/// Anomaly-free template feature maps, flattened row-major. Immutable once built.
class TemplateBank {
 public:
  TemplateBank(FeatureShape shape, std::vector<BankEntry> entries);

  const FeatureShape& shape() const { return shape_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<BankEntry>& entries() const { return entries_; }
  const BankEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::optional<std::size_t> find(const std::string& template_id) const;
  FeatureMap feature_map(std::size_t i) const;

 private:
  FeatureShape shape_;
  std::vector<BankEntry> entries_;
};

TemplateBank build_bank(std::span<const NamedFeatureMap> maps);

/// Greedy k-center (farthest point) reduction to m entries. The first pick is
/// drawn from a mt19937_64 seeded with `seed`; the kept entries stay in
/// their original order.
TemplateBank coreset_subsample(const TemplateBank& bank, std::size_t m, std::uint64_t seed);

struct Neighbor {
  std::string template_id;
  std::size_t index = 0;  // position in the bank
  double distance = 0.0;
  std::size_t rank = 0;
};

struct RetrievalResult {
  std::vector<Neighbor> neighbors;
};

inline constexpr std::size_t kDefaultNeighbors = 2;

/// Exact top-k by Euclidean distance on flattened maps; ties go to the smaller id.
RetrievalResult image_nns(const TemplateBank& bank, const FeatureMap& query, std::size_t k);

double euclidean_distance(std::span<const float> a, std::span<const float> b);

// Largest distance from any bank entry to its closest kept entry.
double covering_radius(const TemplateBank& bank, std::span<const std::size_t> kept);

/// Files stored next to a template's features.
struct TemplateAssets {
  std::optional<std::filesystem::path> image;
  std::optional<std::filesystem::path> masks;
};

struct LoadedBank {
  TemplateBank bank;
  std::map<std::string, TemplateAssets> assets;  // absolute paths inside the bank dir
};

/// Tensors stored next to a template's features when the bank is saved.
struct TemplateAssetData {
  std::optional<Tensor> image;
  std::optional<Tensor> masks;
};

/// Writes `manifest.json` plus one `<id>.sltf` per template. Assets, when
/// given, land in `<id>.image.sltf` / `<id>.masks.sltf`.
void save_bank(const TemplateBank& bank, const std::filesystem::path& dir,
               const std::map<std::string, TemplateAssetData>& assets = {});
LoadedBank load_bank(const std::filesystem::path& dir);

}  // namespace lad

#endif  // LAD_BANK_HPP_
