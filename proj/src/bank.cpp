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

#include "lad/bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "lad/tensor_store.hpp"

namespace lad {

namespace fs = std::filesystem;
using nlohmann::json;

TemplateBank::TemplateBank(FeatureShape shape, std::vector<BankEntry> entries)
    : shape_(shape), entries_(std::move(entries)) {
  if (entries_.empty()) throw DataError("template bank must hold at least one entry");
  std::set<std::string> ids;
  for (const auto& e : entries_) {
    if (e.flat.size() != shape_.flat_size()) {
      throw ShapeError("template " + e.template_id + " does not match the bank shape");
    }
    if (!ids.insert(e.template_id).second) {
      throw DataError("duplicate template id " + e.template_id);
    }
  }
}

std::optional<std::size_t> TemplateBank::find(const std::string& template_id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].template_id == template_id) return i;
  }
  return std::nullopt;
}

FeatureMap TemplateBank::feature_map(std::size_t i) const {
  return FeatureMap(shape_.channels, shape_.height, shape_.width, entry(i).flat);
}

TemplateBank build_bank(std::span<const NamedFeatureMap> maps) {
  if (maps.empty()) throw DataError("cannot build a bank from zero templates");
  const FeatureMap& first = maps.front().map;
  const FeatureShape shape{first.channels(), first.height(), first.width()};
  std::vector<BankEntry> entries;
  entries.reserve(maps.size());
  for (const auto& m : maps) {
    if (!m.map.same_shape(first)) {
      throw ShapeError("template " + m.id + " has shape " + m.map.shape_string() +
                       ", expected " + first.shape_string());
    }
    entries.push_back(BankEntry{m.id, std::vector<float>(m.map.data().begin(), m.map.data().end())});
  }
  return TemplateBank(shape, std::move(entries));
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("distance between vectors of different length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

TemplateBank coreset_subsample(const TemplateBank& bank, std::size_t m, std::uint64_t seed) {
  const std::size_t z = bank.size();
  if (m < 1 || m > z) {
    throw ConfigError("coreset size " + std::to_string(m) + " outside [1, " + std::to_string(z) +
                      "]");
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> chosen(z, false);
  std::vector<double> min_dist(z, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng() % z);
  for (std::size_t round = 0; round < m; ++round) {
    chosen[pick] = true;
    const auto& centre = bank.entry(pick).flat;
    std::size_t next = z;
    double best = -1.0;
    for (std::size_t i = 0; i < z; ++i) {
      if (chosen[i]) continue;
      min_dist[i] = std::min(min_dist[i], euclidean_distance(bank.entry(i).flat, centre));
      if (min_dist[i] > best) {
        best = min_dist[i];
        next = i;
      }
    }
    if (next == z) break;
    pick = next;
  }
  std::vector<BankEntry> kept;
  kept.reserve(m);
  for (std::size_t i = 0; i < z; ++i) {
    if (chosen[i]) kept.push_back(bank.entry(i));
  }
  return TemplateBank(bank.shape(), std::move(kept));
}

double covering_radius(const TemplateBank& bank, std::span<const std::size_t> kept) {
  double radius = 0.0;
  for (const auto& e : bank.entries()) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k : kept) nearest = std::min(nearest, euclidean_distance(e.flat, bank.entry(k).flat));
    radius = std::max(radius, nearest);
  }
  return radius;
}

RetrievalResult image_nns(const TemplateBank& bank, const FeatureMap& query, std::size_t k) {
  const FeatureShape qs{query.channels(), query.height(), query.width()};
  if (!(qs == bank.shape())) {
    throw ShapeError("query shape " + query.shape_string() + " does not match the bank");
  }
  if (k < 1 || k > bank.size()) {
    throw ConfigError("requested " + std::to_string(k) + " neighbours from a bank of " +
                      std::to_string(bank.size()));
  }
  std::vector<Neighbor> all;
  all.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    all.push_back(Neighbor{bank.entry(i).template_id, i,
                           euclidean_distance(query.data(), bank.entry(i).flat), 0});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.template_id < b.template_id;
  });
  all.resize(k);
  for (std::size_t r = 0; r < k; ++r) all[r].rank = r;
  return RetrievalResult{std::move(all)};
}

void save_bank(const TemplateBank& bank, const fs::path& dir,
               const std::map<std::string, TemplateAssetData>& assets) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bank directory " + dir.string() + ": " + ec.message());
  json manifest;
  manifest["format"] = "lad-bank";
  manifest["version"] = 1;
  const auto& s = bank.shape();
  manifest["shape"] = {s.channels, s.height, s.width};
  json templates = json::array();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& id = bank.entry(i).template_id;
    json rec;
    rec["id"] = id;
    rec["features"] = id + ".sltf";
    write_tensor(to_tensor(bank.feature_map(i)), dir / (id + ".sltf"));
    if (auto it = assets.find(id); it != assets.end()) {
      auto store = [&](const std::optional<Tensor>& t, const std::string& name, const char* key) {
        if (!t) return;
        write_tensor(*t, dir / name);
        rec[key] = name;
      };
      store(it->second.image, id + ".image.sltf", "image");
      store(it->second.masks, id + ".masks.sltf", "masks");
    }
    templates.push_back(std::move(rec));
  }
  manifest["templates"] = std::move(templates);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write bank manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

LoadedBank load_bank(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("bank manifest missing in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed bank manifest: ") + e.what());
  }
  std::vector<NamedFeatureMap> maps;
  std::map<std::string, TemplateAssets> assets;
  try {
    for (const auto& rec : manifest.at("templates")) {
      const std::string id = rec.at("id").get<std::string>();
      maps.push_back(NamedFeatureMap{
          id, to_feature_map(read_tensor(dir / rec.at("features").get<std::string>()))});
      TemplateAssets a;
      if (rec.contains("image")) a.image = dir / rec["image"].get<std::string>();
      if (rec.contains("masks")) a.masks = dir / rec["masks"].get<std::string>();
      assets.emplace(id, std::move(a));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed bank manifest: ") + e.what());
  }
  auto bank = build_bank(maps);
  const auto shape = manifest.value("shape", std::vector<std::size_t>{});
  if (shape.size() == 3 && !(FeatureShape{shape[0], shape[1], shape[2]} == bank.shape())) {
    throw ShapeError("bank manifest shape disagrees with the stored templates");
  }
  return LoadedBank{std::move(bank), std::move(assets)};
}

}  // namespace lad
