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

#include "lad/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lad {

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  std::size_t positives = 0, negatives = 0;
  for (int l : labels) {
    if (l == 1) {
      ++positives;
    } else if (l == 0) {
      ++negatives;
    } else {
      throw DataError("labels must be 0 or 1");
    }
  }
  if (positives == 0 || negatives == 0) {
    throw DataError("AUROC needs at least one positive and one negative sample");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) rank_sum += mid;
    }
    i = j;
  }
  const double p = static_cast<double>(positives), n = static_cast<double>(negatives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

GtRegion make_region(Grid<std::uint8_t> mask, std::size_t saturation_area) {
  std::size_t area = 0;
  for (auto v : mask.data()) area += v != 0 ? 1 : 0;
  if (area == 0) throw ValidationError("ground-truth region is empty");
  if (saturation_area == 0 || saturation_area > area) {
    throw ValidationError("saturation area must lie in (0, region area]");
  }
  return GtRegion{std::move(mask), saturation_area};
}

GtRegion make_region(Grid<std::uint8_t> mask) {
  std::size_t area = 0;
  for (auto v : mask.data()) area += v != 0 ? 1 : 0;
  return make_region(std::move(mask), area);
}

namespace {

struct PixelEvent {
  float score;
  std::int32_t region;  // -1 for a normal pixel
};

}  // namespace

std::vector<SproPoint> spro_curve(std::span<const Grid<float>> maps,
                                  std::span<const std::vector<GtRegion>> regions) {
  if (maps.size() != regions.size()) throw DataError("need one region list per anomaly map");
  std::vector<PixelEvent> events;
  std::vector<double> saturation;
  std::size_t normal_total = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& map = maps[i];
    const std::int32_t base = static_cast<std::int32_t>(saturation.size());
    for (const auto& r : regions[i]) {
      if (r.mask.height() != map.height() || r.mask.width() != map.width()) {
        throw ShapeError("ground-truth region resolution differs from its anomaly map");
      }
      saturation.push_back(static_cast<double>(r.saturation_area));
    }
    for (std::size_t p = 0; p < map.size(); ++p) {
      const float s = map.data()[p];
      bool in_region = false;
      for (std::size_t r = 0; r < regions[i].size(); ++r) {
        if (regions[i][r].mask.data()[p] != 0) {
          in_region = true;
          events.push_back(PixelEvent{s, base + static_cast<std::int32_t>(r)});
        }
      }
      if (!in_region) {
        ++normal_total;
        events.push_back(PixelEvent{s, -1});
      }
    }
  }
  if (saturation.empty()) throw DataError("sPRO needs at least one ground-truth region");
  if (normal_total == 0) throw DataError("sPRO needs normal pixels to measure false positives");

  std::sort(events.begin(), events.end(),
            [](const PixelEvent& a, const PixelEvent& b) { return a.score > b.score; });
  std::vector<double> overlap(saturation.size(), 0.0);
  std::vector<SproPoint> curve{SproPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t false_pos = 0;
  double saturated_sum = 0.0;
  for (std::size_t i = 0; i < events.size();) {
    const float t = events[i].score;
    for (; i < events.size() && events[i].score == t; ++i) {
      const auto r = events[i].region;
      if (r < 0) {
        ++false_pos;
        continue;
      }
      const auto ri = static_cast<std::size_t>(r);
      const double before = std::min(overlap[ri] / saturation[ri], 1.0);
      overlap[ri] += 1.0;
      saturated_sum += std::min(overlap[ri] / saturation[ri], 1.0) - before;
    }
    curve.push_back(SproPoint{t, static_cast<double>(false_pos) / static_cast<double>(normal_total),
                              saturated_sum / static_cast<double>(saturation.size())});
  }
  return curve;
}

double integrate_spro_curve(std::span<const SproPoint> curve, double fpr_cap) {
  if (!(fpr_cap > 0.0 && fpr_cap <= 1.0)) throw ConfigError("fpr_cap must lie in (0, 1]");
  double area = 0.0;
  double last_fpr = 0.0, last_spro = 0.0;
  for (const auto& pt : curve) {
    if (pt.fpr > fpr_cap) break;
    area += 0.5 * (pt.fpr - last_fpr) * (pt.spro + last_spro);
    last_fpr = pt.fpr;
    last_spro = pt.spro;
  }
  area += (fpr_cap - last_fpr) * last_spro;
  return area / fpr_cap;
}

double spro(std::span<const Grid<float>> maps, std::span<const std::vector<GtRegion>> regions,
            double fpr_cap) {
  if (!(fpr_cap > 0.0 && fpr_cap <= 1.0)) throw ConfigError("fpr_cap must lie in (0, 1]");
  const auto curve = spro_curve(maps, regions);
  return integrate_spro_curve(curve, fpr_cap);
}

}  // namespace lad
