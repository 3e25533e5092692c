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

#include "lad/dcga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lad {

void validate(const DcgaParams& params) {
  if (params.kernel.empty() || params.kernel.size() % 2 == 0) {
    throw ConfigError("DCGA kernel length must be odd");
  }
  if (!(params.temperature > 0.0)) throw ConfigError("DCGA temperature must be positive");
}

PoolMode parse_pool_mode(const std::string& s) {
  if (s == "gmp") return PoolMode::kGmp;
  if (s == "gap") return PoolMode::kGap;
  throw ConfigError("unknown pool mode '" + s + "' (expected gmp or gap)");
}

DcgaVariant parse_dcga_variant(const std::string& s) {
  if (s == "literal") return DcgaVariant::kLiteral;
  if (s == "gated") return DcgaVariant::kGated;
  if (s == "none") return DcgaVariant::kNone;
  throw ConfigError("unknown DCGA variant '" + s + "' (expected literal, gated or none)");
}

std::string to_string(PoolMode mode) { return mode == PoolMode::kGmp ? "gmp" : "gap"; }

std::string to_string(DcgaVariant variant) {
  switch (variant) {
    case DcgaVariant::kLiteral: return "literal";
    case DcgaVariant::kGated: return "gated";
    case DcgaVariant::kNone: return "none";
  }
  return "?";
}

PooledFeatures pool_objects(std::span<const ObjectRecord> records, PoolMode mode) {
  if (records.empty()) throw DataError("cannot pool zero objects");
  const std::size_t channels = records.front().feat.channels();
  PooledFeatures out(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(channels));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.feat.channels() != channels) throw ShapeError("objects differ in channel count");
    const auto mask = r.mask_hi.data();
    std::size_t interior = 0;
    for (float m : mask) interior += m > kMaskThreshold ? 1 : 0;
    if (interior == 0) {
      throw DegenerateObjectError(r.object_id,
                                  "object " + std::to_string(r.object_id) + " has an empty interior");
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const auto plane = r.feat.channel(c);
      double acc = mode == PoolMode::kGmp ? -std::numeric_limits<double>::infinity() : 0.0;
      for (std::size_t p = 0; p < plane.size(); ++p) {
        if (!(mask[p] > kMaskThreshold)) continue;
        acc = mode == PoolMode::kGmp ? std::max(acc, static_cast<double>(plane[p])) : acc + plane[p];
      }
      if (mode == PoolMode::kGap) acc /= static_cast<double>(interior);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return out;
}

Eigen::VectorXd channel_attention(const Eigen::VectorXd& row, const DcgaParams& params) {
  validate(params);
  const Eigen::Index c = row.size();
  const auto half = static_cast<Eigen::Index>(params.kernel.size() / 2);
  Eigen::VectorXd logits(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(params.kernel.size()); ++t) {
      const Eigen::Index j = std::clamp<Eigen::Index>(i + t - half, 0, c - 1);
      acc += params.kernel[static_cast<std::size_t>(t)] * row(j);
    }
    logits(i) = acc / params.temperature;
  }
  const double peak = logits.maxCoeff();
  Eigen::VectorXd a = (logits.array() - peak).exp();
  return a / a.sum();
}

Eigen::MatrixXd channel_adjacency(const Eigen::VectorXd& row, const DcgaParams& params) {
  const Eigen::Index c = row.size();
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(c, c) / static_cast<double>(c);
  const Eigen::MatrixXd a1 = channel_attention(row, params).asDiagonal();
  return a0 * a1;
}

Eigen::MatrixXd object_adjacency(const PooledFeatures& f_in) {
  const Eigen::Index m = f_in.rows();
  Eigen::MatrixXd unit = f_in;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = f_in.row(i).norm();
    if (!(norm > 0.0)) {
      throw DataError("object " + std::to_string(i) + " has a zero pooled descriptor");
    }
    unit.row(i) /= norm;
  }
  Eigen::MatrixXd s = (unit * unit.transpose()).cwiseMax(0.0);
  s.diagonal().setZero();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double total = s.row(i).sum();
    if (total > 0.0) s.row(i) /= total;
  }
  return s;
}

DescriptorSet descriptors_from_pooled(const PooledFeatures& f_in, const DcgaParams& params) {
  validate(params);
  const Eigen::Index m = f_in.rows(), c = f_in.cols();
  Eigen::MatrixXd y;
  if (params.variant == DcgaVariant::kNone) {
    y = f_in;
  } else {
    // Row i of F_a is f_in[i] * A_i * C^2. A_i is diagonal, so only its
    // diagonal is formed here.
    const double c2 = static_cast<double>(c) * static_cast<double>(c);
    Eigen::MatrixXd gated(m, c);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::VectorXd row = f_in.row(i).transpose();
      const Eigen::VectorXd diag = channel_attention(row, params) / static_cast<double>(c);
      const Eigen::ArrayXd fa = row.array() * diag.array() * c2;
      const Eigen::ArrayXd sig = 1.0 / (1.0 + (-fa).exp());
      if (params.variant == DcgaVariant::kGated) {
        gated.row(i) = (row.array() * sig).matrix().transpose();
      } else {
        gated.row(i) = sig.matrix().transpose();
      }
    }
    const Eigen::MatrixXd mix = object_adjacency(f_in) + Eigen::MatrixXd::Identity(m, m);
    y = mix * gated;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = y.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DataError("object " + std::to_string(i) + " produced a degenerate descriptor");
    }
    y.row(i) /= norm;
  }
  return y;
}

DescriptorSet dcga_descriptors(std::span<const ObjectRecord> records, const DcgaParams& params) {
  return descriptors_from_pooled(pool_objects(records, params.pool_mode), params);
}

}  // namespace lad
