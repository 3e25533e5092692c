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

#ifndef LAD_DCGA_HPP_
#define LAD_DCGA_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lad/scene_objects.hpp"

namespace lad {

enum class PoolMode { kGmp, kGap };

// kNone skips the attention graph; descriptors are the normalized pooled
// rows (the plain GMP / GAP ablations).
enum class DcgaVariant { kLiteral, kGated, kNone };

struct DcgaParams {
  std::vector<double> kernel{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // odd length
  PoolMode pool_mode = PoolMode::kGmp;
  DcgaVariant variant = DcgaVariant::kLiteral;
  double temperature = 1.0;
};

void validate(const DcgaParams& params);

/// M x C pooled object features, one row per object.
using PooledFeatures = Eigen::MatrixXd;
/// M x C descriptors with unit-norm rows.
using DescriptorSet = Eigen::MatrixXd;

PoolMode parse_pool_mode(const std::string& s);
DcgaVariant parse_dcga_variant(const std::string& s);
std::string to_string(PoolMode mode);
std::string to_string(DcgaVariant variant);

/// Per-channel max (gmp) or mean (gap) over each object's mask interior.
PooledFeatures pool_objects(std::span<const ObjectRecord> records, PoolMode mode);

/// softmax(conv1d(row, kernel) / temperature), clamp-to-edge padding.
Eigen::VectorXd channel_attention(const Eigen::VectorXd& row, const DcgaParams& params);

/// Channel graph A = A0 * A1 with A0 = I / C and A1 = diag(channel_attention).
Eigen::MatrixXd channel_adjacency(const Eigen::VectorXd& row, const DcgaParams& params);

/// Object graph: non-negative cosine similarities, zero diagonal, rows
/// normalized to sum 1 (all-zero rows stay zero).
Eigen::MatrixXd object_adjacency(const PooledFeatures& f_in);

DescriptorSet descriptors_from_pooled(const PooledFeatures& f_in, const DcgaParams& params);
DescriptorSet dcga_descriptors(std::span<const ObjectRecord> records, const DcgaParams& params);

}  // namespace lad

#endif  // LAD_DCGA_HPP_
