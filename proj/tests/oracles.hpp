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

#ifndef LAD_TESTS_ORACLES_HPP_
#define LAD_TESTS_ORACLES_HPP_

// Slow, direct reference implementations shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "lad/metrics.hpp"

namespace lad::oracles {

// ROC by sweeping every distinct threshold, joined by trapezoids.
inline double oracle_auroc(const std::vector<double>& s, const std::vector<int>& l) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const double p = std::count(l.begin(), l.end(), 1), n = std::count(l.begin(), l.end(), 0);
  double area = 0.0, last_tpr = 0.0, last_fpr = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (l[i] ? tp : fp) += 1;
    }
    const double tpr = tp / p, fpr = fp / n;
    area += (fpr - last_fpr) * (tpr + last_tpr) / 2.0;
    last_tpr = tpr;
    last_fpr = fpr;
  }
  return area;
}

struct ToyImage {
  Grid<float> map;
  std::vector<Grid<std::uint8_t>> masks;
  std::vector<std::size_t> saturation;
};

// Every threshold evaluated from scratch over every pixel.
inline double oracle_spro(const std::vector<ToyImage>& imgs, double cap) {
  std::set<float, std::greater<>> thresholds;
  std::size_t normal = 0, regions = 0;
  for (const auto& im : imgs) {
    thresholds.insert(im.map.data().begin(), im.map.data().end());
    regions += im.masks.size();
    for (std::size_t p = 0; p < im.map.size(); ++p) {
      bool inside = false;
      for (const auto& m : im.masks) inside = inside || m.data()[p];
      normal += inside ? 0 : 1;
    }
  }
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (float t : thresholds) {
    std::size_t fp = 0;
    double sum = 0.0;
    for (const auto& im : imgs) {
      for (std::size_t r = 0; r < im.masks.size(); ++r) {
        std::size_t hit = 0;
        for (std::size_t p = 0; p < im.map.size(); ++p) hit += im.masks[r].data()[p] && im.map.data()[p] >= t;
        sum += std::min(1.0, double(hit) / double(im.saturation[r]));
      }
      for (std::size_t p = 0; p < im.map.size(); ++p) {
        bool inside = false;
        for (const auto& m : im.masks) inside = inside || m.data()[p];
        fp += !inside && im.map.data()[p] >= t;
      }
    }
    pts.emplace_back(double(fp) / double(normal), sum / double(regions));
  }
  double area = 0.0;
  std::pair<double, double> last{0.0, 0.0};
  for (const auto& pt : pts) {
    if (pt.first > cap) break;
    area += (pt.first - last.first) * (pt.second + last.second) / 2.0;
    last = pt;
  }
  area += (cap - last.first) * last.second;
  return area / cap;
}

inline double run_spro(const std::vector<ToyImage>& imgs, double cap) {
  std::vector<Grid<float>> maps;
  std::vector<std::vector<GtRegion>> regions;
  for (const auto& im : imgs) {
    maps.push_back(im.map);
    regions.emplace_back();
    for (std::size_t r = 0; r < im.masks.size(); ++r) {
      regions.back().push_back(make_region(im.masks[r], im.saturation[r]));
    }
  }
  return spro(maps, regions, cap);
}

inline Grid<std::uint8_t> rect(std::size_t h, std::size_t w, std::size_t r0, std::size_t c0, std::size_t r1,
                        std::size_t c1) {
  Grid<std::uint8_t> g(h, w, 0);
  for (std::size_t y = r0; y < r1; ++y) for (std::size_t x = c0; x < c1; ++x) g.at(y, x) = 1;
  return g;
}

// Small maps on a coarse value lattice so ties are common.
inline std::vector<ToyImage> toy_case(int id) {
  std::mt19937_64 rng(100 + id);
  const std::size_t h = 6 + id % 3, w = 7 + id % 4;
  const int levels = 3 + id % 6;
  std::vector<ToyImage> imgs;
  const int n = 1 + id % 3;
  for (int i = 0; i < n; ++i) {
    ToyImage im{Grid<float>(h, w), {}, {}};
    for (float& v : im.map.data()) v = static_cast<float>(rng() % levels) / levels - 0.3f;
    if (i == 0 || rng() % 2) {
      const std::size_t r0 = rng() % (h - 2), c0 = rng() % (w - 2);
      im.masks.push_back(rect(h, w, r0, c0, r0 + 2, c0 + 2 + rng() % 2));
      for (std::size_t p = 0; p < im.map.size(); ++p) {
        if (im.masks.back().data()[p]) im.map.data()[p] += 0.4f;
      }
      std::size_t area = 0;
      for (auto v : im.masks.back().data()) area += v;
      im.saturation.push_back(id % 2 ? area : 1 + rng() % area);
    }
    if (id % 5 == 0) {
      // Overlapping second region.
      im.masks.push_back(rect(h, w, 0, 0, 3, 3));
      im.saturation.push_back(5);
    }
    imgs.push_back(std::move(im));
  }
  return imgs;
}

// 3 x 3 inverse through the adjugate, independent of any factorisation.
inline Eigen::Matrix3d adjugate_inverse(const Eigen::Matrix3d& m) {
  Eigen::Matrix3d adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      adj(i, j) = m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    }
  }
  const double det = m(0, 0) * adj(0, 0) + m(0, 1) * adj(1, 0) + m(0, 2) * adj(2, 0);
  return adj / det;
}

// Best total score over all bijections of a square matrix.
inline std::vector<int> max_weight_permutation(const Eigen::MatrixXd& s) {
  std::vector<int> perm(static_cast<std::size_t>(s.rows())), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_score = -1e300;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += s(static_cast<Eigen::Index>(i), perm[i]);
    if (total > best_score) {
      best_score = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace lad::oracles

#endif  // LAD_TESTS_ORACLES_HPP_
