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

#ifndef LAD_METRICS_HPP_
#define LAD_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lad/common.hpp"

namespace lad {

/// Rank-based (Mann-Whitney) AUROC; tied scores count one half.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// One ground-truth defect region and the overlap at which it saturates.
struct GtRegion {
  Grid<std::uint8_t> mask;
  std::size_t saturation_area = 0;
};

GtRegion make_region(Grid<std::uint8_t> mask, std::size_t saturation_area);
GtRegion make_region(Grid<std::uint8_t> mask);  // saturates at the full region

inline constexpr double kDefaultFprCap = 0.05;

/// A point of the sPRO curve at one threshold.
struct SproPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double spro = 0.0;
};

/// Operating points for every unique score value, descending thresholds,
/// preceded by the (0, 0) point above the maximum. A pixel is positive
/// when its score is >= the threshold.
std::vector<SproPoint> spro_curve(std::span<const Grid<float>> maps,
                                  std::span<const std::vector<GtRegion>> regions);

/// Area under the mean saturated-overlap vs. FPR curve over [0, fpr_cap],
/// divided by fpr_cap. Points up to the cap are joined by trapezoids; the
/// last reachable point is held flat to the cap.
double spro(std::span<const Grid<float>> maps, std::span<const std::vector<GtRegion>> regions,
            double fpr_cap);

double integrate_spro_curve(std::span<const SproPoint> curve, double fpr_cap);

}  // namespace lad

#endif  // LAD_METRICS_HPP_
