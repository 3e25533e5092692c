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

#include "lad/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace lad {

CanonicalCrop canonical_crop(const ObjectRecord& record, std::size_t grid_size) {
  if (grid_size < 2) throw ConfigError("canonical crop size must be >= 2");
  const auto& feat = record.feat;
  const BBox& box = record.bbox_hi;
  if (box.row_min > box.row_max || box.col_min > box.col_max || box.row_max >= feat.height() ||
      box.col_max >= feat.width()) {
    throw DegenerateObjectError(record.object_id,
                                "object " + std::to_string(record.object_id) +
                                    " has a degenerate bounding box");
  }
  std::vector<float> data;
  data.reserve(feat.channels() * grid_size * grid_size);
  for (std::size_t c = 0; c < feat.channels(); ++c) {
    auto plane = resample_bilinear(feat.channel(c), feat.height(), feat.width(), box, grid_size,
                                   grid_size);
    data.insert(data.end(), plane.begin(), plane.end());
  }
  return CanonicalCrop{FeatureMap(feat.channels(), grid_size, grid_size, std::move(data)), box};
}

CovMode parse_cov_mode(const std::string& s) {
  if (s == "diag") return CovMode::kDiag;
  if (s == "full") return CovMode::kFull;
  throw ConfigError("unknown covariance mode '" + s + "' (expected diag or full)");
}

std::string to_string(CovMode mode) { return mode == CovMode::kDiag ? "diag" : "full"; }

ScoreReduction parse_reduction(const std::string& s) {
  if (s == "max") return ScoreReduction::kMax;
  if (s == "mean_topq") return ScoreReduction::kMeanTopQ;
  throw ConfigError("unknown score reduction '" + s + "' (expected max or mean_topq)");
}

std::string to_string(ScoreReduction r) { return r == ScoreReduction::kMax ? "max" : "mean_topq"; }

Eigen::VectorXd GaussianField::cell_mean(std::size_t y, std::size_t x) const {
  const std::size_t d = dim();
  return Eigen::Map<const Eigen::VectorXd>(mean.data() + (y * grid + x) * d,
                                            static_cast<Eigen::Index>(d));
}

Eigen::MatrixXd GaussianField::cell_cov(std::size_t y, std::size_t x) const {
  const std::size_t d = dim();
  const auto n = static_cast<Eigen::Index>(d);
  if (mode == CovMode::kDiag) {
    return Eigen::Map<const Eigen::VectorXd>(cov.data() + (y * grid + x) * d, n).asDiagonal();
  }
  // Row-major block; symmetric, so the column-major view is the same matrix.
  return Eigen::Map<const Eigen::MatrixXd>(cov.data() + (y * grid + x) * d * d, n, n);
}

namespace {

std::vector<std::size_t> choose_channels(std::size_t total, std::size_t wanted,
                                         std::uint64_t seed) {
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), 0);
  if (wanted == 0 || wanted >= total) return all;
  // Partial Fisher-Yates with an explicit modulo so the subset is portable.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < wanted; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (total - i));
    std::swap(all[i], all[j]);
  }
  all.resize(wanted);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GaussianField estimate_gaussian_field(std::span<const CanonicalCrop> crops, double epsilon,
                                      CovMode mode, std::size_t channel_subsample,
                                      std::uint64_t seed) {
  if (crops.size() < 2) throw DataError("a Gaussian field needs at least two crops");
  if (!(epsilon > 0.0)) throw ConfigError("covariance regulariser must be positive");
  const FeatureMap& first = crops.front().grid;
  if (first.height() != first.width()) throw ShapeError("canonical crops must be square");
  for (const auto& c : crops) {
    if (!c.grid.same_shape(first)) throw ShapeError("canonical crops differ in shape");
  }
  GaussianField field;
  field.grid = first.height();
  field.mode = mode;
  field.epsilon = epsilon;
  field.samples = crops.size();
  field.channels = choose_channels(first.channels(),
                                   mode == CovMode::kFull ? channel_subsample : 0, seed);
  const std::size_t d = field.dim();
  const std::size_t cells = field.grid * field.grid;
  const double k = static_cast<double>(crops.size());
  field.mean.assign(cells * d, 0.0);
  field.cov.assign(cells * (mode == CovMode::kDiag ? d : d * d), 0.0);

  std::vector<double> centred(crops.size() * d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double* mu = field.mean.data() + cell * d;
    for (std::size_t s = 0; s < crops.size(); ++s) {
      const auto data = crops[s].grid.data();
      for (std::size_t a = 0; a < d; ++a) mu[a] += data[field.channels[a] * cells + cell];
    }
    for (std::size_t a = 0; a < d; ++a) mu[a] /= k;
    for (std::size_t s = 0; s < crops.size(); ++s) {
      const auto data = crops[s].grid.data();
      for (std::size_t a = 0; a < d; ++a) {
        centred[s * d + a] = data[field.channels[a] * cells + cell] - mu[a];
      }
    }
    if (mode == CovMode::kDiag) {
      double* var = field.cov.data() + cell * d;
      for (std::size_t a = 0; a < d; ++a) {
        double acc = 0.0;
        for (std::size_t s = 0; s < crops.size(); ++s) acc += centred[s * d + a] * centred[s * d + a];
        var[a] = acc / (k - 1.0) + epsilon;
      }
    } else {
      double* sigma = field.cov.data() + cell * d * d;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
          double acc = 0.0;
          for (std::size_t s = 0; s < crops.size(); ++s) acc += centred[s * d + a] * centred[s * d + b];
          acc /= (k - 1.0);
          if (a == b) acc += epsilon;
          sigma[a * d + b] = acc;
          sigma[b * d + a] = acc;
        }
      }
    }
  }
  return field;
}

Grid<double> mahalanobis_map(const CanonicalCrop& query, const GaussianField& field) {
  const FeatureMap& q = query.grid;
  if (q.height() != field.grid || q.width() != field.grid) {
    throw ShapeError("query crop does not match the Gaussian field grid");
  }
  if (!field.channels.empty() && field.channels.back() >= q.channels()) {
    throw ShapeError("query crop has fewer channels than the Gaussian field");
  }
  const std::size_t d = field.dim();
  const std::size_t cells = field.grid * field.grid;
  Grid<double> out(field.grid, field.grid);
  Eigen::VectorXd diff(static_cast<Eigen::Index>(d));
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const double* mu = field.mean.data() + cell * d;
    for (std::size_t a = 0; a < d; ++a) {
      diff(static_cast<Eigen::Index>(a)) = q.data()[field.channels[a] * cells + cell] - mu[a];
    }
    double sq = 0.0;
    if (field.mode == CovMode::kDiag) {
      const double* var = field.cov.data() + cell * d;
      for (std::size_t a = 0; a < d; ++a) {
        const double v = diff(static_cast<Eigen::Index>(a));
        sq += v * v / var[a];
      }
    } else {
      const auto n = static_cast<Eigen::Index>(d);
      const Eigen::Map<const Eigen::MatrixXd> sigma(field.cov.data() + cell * d * d, n, n);
      const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
      if (llt.info() != Eigen::Success) {
        throw Error("covariance factorisation failed; the field invariant is broken");
      }
      const Eigen::VectorXd z = llt.matrixL().solve(diff);
      sq = z.squaredNorm();
    }
    out.data()[cell] = std::sqrt(std::max(sq, 0.0));
  }
  return out;
}

namespace {

// Pastes an R x R object map into the object's box, masks it, and resizes to
// the output resolution.
Grid<float> paste_object_map(const Grid<double>& local, const ObjectRecord& record,
                             std::size_t out_h, std::size_t out_w) {
  const BBox& box = record.bbox_hi;
  const std::size_t h = record.mask_hi.height(), w = record.mask_hi.width();
  std::vector<float> local_f(local.data().begin(), local.data().end());
  const auto patch = resize_bilinear(local_f, local.height(), local.width(), box.height(),
                                     box.width());
  Grid<float> hi(h, w, 0.0f);
  for (std::size_t y = 0; y < box.height(); ++y) {
    for (std::size_t x = 0; x < box.width(); ++x) {
      const std::size_t gy = box.row_min + y, gx = box.col_min + x;
      hi.at(gy, gx) = patch[y * box.width() + x] * record.mask_hi.at(gy, gx);
    }
  }
  Grid<float> out = resize_bilinear(hi, out_h, out_w);
  for (float& v : out.data()) v = std::max(v, 0.0f);
  return out;
}

Grid<double> squared_error_map(const CanonicalCrop& query, const CanonicalCrop& ref) {
  const std::size_t r = query.grid.height();
  const std::size_t cells = r * r;
  Grid<double> out(r, r);
  for (std::size_t c = 0; c < query.grid.channels(); ++c) {
    const auto a = query.grid.channel(c);
    const auto b = ref.grid.channel(c);
    for (std::size_t i = 0; i < cells; ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      out.data()[i] += d * d;
    }
  }
  return out;
}

void accumulate(Grid<float>& into, const Grid<float>& add) {
  for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += add.data()[i];
}

}  // namespace

ScoreParts score_parts(std::span<const Assignment> assignments,
                       std::span<const ObjectRecord> query_records,
                       std::span<const std::vector<ObjectRecord>> reference_records,
                       std::size_t out_h, std::size_t out_w, const AmmParams& params) {
  if (assignments.size() != reference_records.size()) {
    throw DataError("need one assignment per reference image");
  }
  ScoreParts parts{Grid<float>(out_h, out_w, 0.0f), Grid<float>(out_h, out_w, 0.0f), {}, {}};
  std::map<std::pair<std::size_t, std::size_t>, CanonicalCrop> ref_crops;
  auto ref_crop = [&](std::size_t r, std::size_t j) -> const CanonicalCrop& {
    auto key = std::make_pair(r, j);
    auto it = ref_crops.find(key);
    if (it == ref_crops.end()) {
      it = ref_crops.emplace(key, canonical_crop(reference_records[r].at(j), params.grid)).first;
    }
    return it->second;
  };

  for (std::size_t q = 0; q < query_records.size(); ++q) {
    ObjectScore score;
    score.query_idx = q;
    std::vector<const CanonicalCrop*> crops;
    double best_conf = -1.0;
    const CanonicalCrop* best = nullptr;
    for (std::size_t r = 0; r < assignments.size(); ++r) {
      std::optional<std::size_t> j;
      double conf = 0.0;
      if (const Match* m = assignments[r].match_for(q)) {
        score.matched = true;
        j = m->ref_idx;
        conf = m->confidence;
      } else if (const UnmatchedQuery* u = assignments[r].unmatched_for(q)) {
        j = u->nearest_ref_idx;
        conf = u->confidence;
      }
      score.ref_idx.push_back(j);
      if (!j) continue;
      crops.push_back(&ref_crop(r, *j));
      if (conf > best_conf) {
        best_conf = conf;
        best = crops.back();
      }
    }

    const CanonicalCrop query_crop = canonical_crop(query_records[q], params.grid);
    Grid<double> local;
    if (crops.size() >= 2) {
      std::vector<CanonicalCrop> samples;
      samples.reserve(crops.size());
      for (const auto* c : crops) samples.push_back(*c);
      const auto field = estimate_gaussian_field(samples, params.epsilon, params.cov_mode,
                                                 params.channel_subsample, params.seed);
      local = mahalanobis_map(query_crop, field);
    } else if (crops.size() == 1) {
      score.fallback = true;
      parts.warnings.push_back("object " + std::to_string(q) +
                               ": one reference crop, scored by squared error");
      local = squared_error_map(query_crop, *best);
    } else {
      score.fallback = true;
      parts.warnings.push_back("object " + std::to_string(q) +
                               ": no reference objects available, left unscored");
      local = Grid<double>(params.grid, params.grid, 0.0);
    }
    score.peak = local.empty() ? 0.0 : *std::max_element(local.data().begin(), local.data().end());
    const Grid<float> pasted = paste_object_map(local, query_records[q], out_h, out_w);
    accumulate(score.matched ? parts.matched : parts.unmatched, pasted);
    parts.objects.push_back(std::move(score));
  }
  return parts;
}

double reduce_image_score(const Grid<float>& map, ScoreReduction reduction, double top_q) {
  if (map.empty()) return 0.0;
  const std::size_t h = map.height(), w = map.width();
  if (reduction == ScoreReduction::kMeanTopQ) {
    if (!(top_q > 0.0 && top_q <= 1.0)) throw ConfigError("score.top_q must lie in (0, 1]");
    std::vector<float> v(map.data().begin(), map.data().end());
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top_q * v.size())));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n - 1), v.end(),
                     std::greater<>());
    std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), std::greater<>());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc / static_cast<double>(n);
  }
  // 3x3 box mean with clamped borders, then the maximum.
  double best = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        const auto yy = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) + dy, 0, h - 1));
        for (int dx = -1; dx <= 1; ++dx) {
          const auto xx = static_cast<std::size_t>(
              std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x) + dx, 0, w - 1));
          acc += map.at(yy, xx);
        }
      }
      best = std::max(best, acc / 9.0);
    }
  }
  return best;
}

AnomalyMap fuse(const ScoreParts& parts, bool lightweight, const AmmParams& params) {
  AnomalyMap out;
  out.scores = parts.unmatched;
  if (!lightweight) {
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
      out.scores.data()[i] = parts.matched.data()[i] + parts.unmatched.data()[i];
    }
  }
  out.image_score = reduce_image_score(out.scores, params.reduction, params.top_q);
  return out;
}

AnomalyMap score_objects(std::span<const Assignment> assignments,
                         std::span<const ObjectRecord> query_records,
                         std::span<const std::vector<ObjectRecord>> reference_records,
                         std::size_t out_h, std::size_t out_w, const AmmParams& params) {
  return fuse(score_parts(assignments, query_records, reference_records, out_h, out_w, params),
              false, params);
}

AnomalyMap lightweight_fuse(std::span<const Assignment> assignments,
                            std::span<const ObjectRecord> query_records,
                            std::span<const std::vector<ObjectRecord>> reference_records,
                            std::size_t out_h, std::size_t out_w, const AmmParams& params) {
  return fuse(score_parts(assignments, query_records, reference_records, out_h, out_w, params),
              true, params);
}

}  // namespace lad
