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

#ifndef LAD_SCORER_HPP_
#define LAD_SCORER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lad/matcher.hpp"
#include "lad/scene_objects.hpp"

namespace lad {

/// An object's masked features over its bounding box, resampled to R x R.
struct CanonicalCrop {
  FeatureMap grid;
  BBox source_bbox;
};

CanonicalCrop canonical_crop(const ObjectRecord& record, std::size_t grid_size);

enum class CovMode { kDiag, kFull };

CovMode parse_cov_mode(const std::string& s);
std::string to_string(CovMode mode);

/// Per-cell Gaussian over k aligned crops. Cell (y, x) stores its mean at
/// mean[(y*R + x)*C + c]; diag mode stores variances in the same layout,
/// full mode stores row-major C x C blocks.
struct GaussianField {
  std::size_t grid = 0;
  std::vector<std::size_t> channels;  // source channels modelled, ascending
  CovMode mode = CovMode::kDiag;
  double epsilon = 0.0;
  std::size_t samples = 0;
  std::vector<double> mean;
  std::vector<double> cov;

  std::size_t dim() const { return channels.size(); }
  Eigen::VectorXd cell_mean(std::size_t y, std::size_t x) const;
  Eigen::MatrixXd cell_cov(std::size_t y, std::size_t x) const;  // diag mode expands
};

/// Sample mean and (k-1)-normalised covariance plus epsilon * I at every
/// cell. In full mode with more than `channel_subsample` channels (> 0), a
/// seeded uniform subset of that many channels is modelled.
GaussianField estimate_gaussian_field(std::span<const CanonicalCrop> crops, double epsilon,
                                      CovMode mode, std::size_t channel_subsample = 0,
                                      std::uint64_t seed = 0);

/// sqrt((f - mu)^T Sigma^-1 (f - mu)) per cell.
Grid<double> mahalanobis_map(const CanonicalCrop& query, const GaussianField& field);

enum class ScoreReduction { kMax, kMeanTopQ };

ScoreReduction parse_reduction(const std::string& s);
std::string to_string(ScoreReduction r);

struct AmmParams {
  std::size_t grid = 32;
  double epsilon = 0.01;
  CovMode cov_mode = CovMode::kDiag;
  std::size_t channel_subsample = 64;
  std::uint64_t seed = 0;
  ScoreReduction reduction = ScoreReduction::kMax;
  double top_q = 0.01;
};

struct AnomalyMap {
  Grid<float> scores;
  double image_score = 0.0;
};

struct ObjectScore {
  std::size_t query_idx = 0;
  bool matched = false;
  // Reference object used from each reference image, if any.
  std::vector<std::optional<std::size_t>> ref_idx;
  bool fallback = false;
  double peak = 0.0;
};

/// Matched-set and unmatched-set score maps kept apart.
struct ScoreParts {
  Grid<float> matched;
  Grid<float> unmatched;
  std::vector<ObjectScore> objects;
  std::vector<std::string> warnings;
};

/// Scores every query object against the reference objects it was assigned
/// to in each of the k per-reference assignments (its match where it has
/// one, otherwise its nearest reference object). Maps are pasted into the
/// object's box, masked, and resized to out_h x out_w.
ScoreParts score_parts(std::span<const Assignment> assignments,
                       std::span<const ObjectRecord> query_records,
                       std::span<const std::vector<ObjectRecord>> reference_records,
                       std::size_t out_h, std::size_t out_w, const AmmParams& params);

AnomalyMap fuse(const ScoreParts& parts, bool lightweight, const AmmParams& params);

/// Matched plus unmatched score maps.
AnomalyMap score_objects(std::span<const Assignment> assignments,
                         std::span<const ObjectRecord> query_records,
                         std::span<const std::vector<ObjectRecord>> reference_records,
                         std::size_t out_h, std::size_t out_w, const AmmParams& params);

/// Unmatched objects only; matched objects contribute zero.
AnomalyMap lightweight_fuse(std::span<const Assignment> assignments,
                            std::span<const ObjectRecord> query_records,
                            std::span<const std::vector<ObjectRecord>> reference_records,
                            std::size_t out_h, std::size_t out_w, const AmmParams& params);

double reduce_image_score(const Grid<float>& map, ScoreReduction reduction, double top_q);

}  // namespace lad

#endif  // LAD_SCORER_HPP_
