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

#include "lad/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

#include "lad/tensor_store.hpp"

namespace lad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Infinity has no JSON literal, so "inf" or null disables the range term.
float read_sigma(const json& v) {
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf")) {
    return std::numeric_limits<float>::infinity();
  }
  return v.get<float>();
}

}  // namespace

void validate(const Profile& p) {
  if (p.k < 2) throw ConfigError("k must be at least 2");
  static constexpr int kFactors[] = {1, 2, 4, 8, 16, 32};
  if (std::find(std::begin(kFactors), std::end(kFactors), p.upsample.factor) == std::end(kFactors)) {
    throw ConfigError("upsample factor must be one of 1, 2, 4, 8, 16, 32");
  }
  if (!(p.upsample.sigma_spatial > 0.0f)) throw ConfigError("sigma_spatial must be positive");
  if (!(p.upsample.sigma_range > 0.0f)) throw ConfigError("sigma_range must be positive");
  const auto& mf = p.mask_filter;
  if (!(mf.min_area_frac >= 0.0 && mf.min_area_frac <= mf.max_area_frac && mf.max_area_frac <= 1.0)) {
    throw ConfigError("mask area fractions must satisfy 0 <= min <= max <= 1");
  }
  validate(p.dcga);
  if (p.match.iters < 1) throw ConfigError("match.iters must be positive");
  if (!(p.match.tol > 0.0)) throw ConfigError("match.tol must be positive");
  if (!(p.match.temperature > 0.0)) throw ConfigError("match.temperature must be positive");
  if (!std::isfinite(p.match.bin_score)) throw ConfigError("match.bin_score must be finite");
  if (!(p.match_threshold >= 0.0 && p.match_threshold <= 1.0)) {
    throw ConfigError("match.threshold must lie in [0, 1]");
  }
  if (p.amm.grid < 1) throw ConfigError("amm.grid must be positive");
  if (!(p.amm.epsilon > 0.0)) throw ConfigError("amm.epsilon must be positive");
  if (p.amm.reduction == ScoreReduction::kMeanTopQ && !(p.amm.top_q > 0.0 && p.amm.top_q <= 1.0)) {
    throw ConfigError("score.top_q must lie in (0, 1]");
  }
}

Profile profile_from_json(const json& j, const Profile& base) {
  Profile p = base;
  try {
    require_keys(j, "profile", {"mask_filter", "k", "upsample", "dcga", "match", "amm", "score"});
    if (j.contains("mask_filter")) {
      const auto& m = j["mask_filter"];
      require_keys(m, "mask_filter", {"min_area_frac", "max_area_frac"});
      read_if(m, "min_area_frac", p.mask_filter.min_area_frac);
      read_if(m, "max_area_frac", p.mask_filter.max_area_frac);
    }
    if (j.contains("k")) {
      const auto k = j["k"].get<long long>();
      if (k < 2) throw ConfigError("k must be at least 2");
      p.k = static_cast<std::size_t>(k);
    }
    if (j.contains("upsample")) {
      const auto& u = j["upsample"];
      require_keys(u, "upsample", {"factor", "sigma_spatial", "sigma_range"});
      read_if(u, "factor", p.upsample.factor);
      read_if(u, "sigma_spatial", p.upsample.sigma_spatial);
      if (u.contains("sigma_range")) p.upsample.sigma_range = read_sigma(u["sigma_range"]);
    }
    if (j.contains("dcga")) {
      const auto& d = j["dcga"];
      require_keys(d, "dcga", {"kernel", "pool_mode", "variant", "temperature"});
      read_if(d, "kernel", p.dcga.kernel);
      if (d.contains("pool_mode")) p.dcga.pool_mode = parse_pool_mode(d["pool_mode"].get<std::string>());
      if (d.contains("variant")) p.dcga.variant = parse_dcga_variant(d["variant"].get<std::string>());
      read_if(d, "temperature", p.dcga.temperature);
    }
    if (j.contains("match")) {
      const auto& m = j["match"];
      require_keys(m, "match", {"bin_score", "iters", "tol", "temperature", "threshold"});
      read_if(m, "bin_score", p.match.bin_score);
      read_if(m, "iters", p.match.iters);
      read_if(m, "tol", p.match.tol);
      read_if(m, "temperature", p.match.temperature);
      read_if(m, "threshold", p.match_threshold);
    }
    if (j.contains("amm")) {
      const auto& a = j["amm"];
      require_keys(a, "amm", {"R", "epsilon", "cov_mode", "channel_subsample"});
      read_if(a, "R", p.amm.grid);
      read_if(a, "epsilon", p.amm.epsilon);
      if (a.contains("cov_mode")) p.amm.cov_mode = parse_cov_mode(a["cov_mode"].get<std::string>());
      read_if(a, "channel_subsample", p.amm.channel_subsample);
    }
    if (j.contains("score")) {
      const auto& s = j["score"];
      require_keys(s, "score", {"reduction", "top_q"});
      if (s.contains("reduction")) p.amm.reduction = parse_reduction(s["reduction"].get<std::string>());
      read_if(s, "top_q", p.amm.top_q);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed profile: ") + e.what());
  }
  validate(p);
  return p;
}

json to_json(const Profile& p) {
  json j;
  j["mask_filter"] = {{"min_area_frac", p.mask_filter.min_area_frac},
                      {"max_area_frac", p.mask_filter.max_area_frac}};
  j["k"] = p.k;
  j["upsample"] = {{"factor", p.upsample.factor}, {"sigma_spatial", p.upsample.sigma_spatial}};
  if (std::isinf(p.upsample.sigma_range)) {
    j["upsample"]["sigma_range"] = "inf";
  } else {
    j["upsample"]["sigma_range"] = p.upsample.sigma_range;
  }
  j["dcga"] = {{"kernel", p.dcga.kernel},
               {"pool_mode", to_string(p.dcga.pool_mode)},
               {"variant", to_string(p.dcga.variant)},
               {"temperature", p.dcga.temperature}};
  j["match"] = {{"bin_score", p.match.bin_score}, {"iters", p.match.iters},
                {"tol", p.match.tol},             {"temperature", p.match.temperature},
                {"threshold", p.match_threshold}};
  j["amm"] = {{"R", p.amm.grid},
              {"epsilon", p.amm.epsilon},
              {"cov_mode", to_string(p.amm.cov_mode)},
              {"channel_subsample", p.amm.channel_subsample}};
  j["score"] = {{"reduction", to_string(p.amm.reduction)}, {"top_q", p.amm.top_q}};
  return j;
}

const Profile& PipelineConfig::profile(const std::string& category) const {
  auto it = categories.find(category);
  return it == categories.end() ? base : it->second;
}

std::vector<Profile*> PipelineConfig::all_profiles() {
  std::vector<Profile*> out{&base};
  for (auto& [name, p] : categories) out.push_back(&p);
  return out;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    require_keys(j, "config",
                 {"seed", "image_size", "toy_patch", "profile", "categories", "lightweight", "ablation"});
    read_if(j, "seed", c.seed);
    read_if(j, "image_size", c.image_size);
    read_if(j, "toy_patch", c.toy_patch);
    read_if(j, "lightweight", c.lightweight);
    if (c.image_size == 0 || c.toy_patch == 0 || c.image_size % c.toy_patch != 0) {
      throw ConfigError("image_size must be a positive multiple of toy_patch");
    }
    if (j.contains("profile")) c.base = profile_from_json(j["profile"], c.base);
    validate(c.base);
    if (j.contains("categories")) {
      if (!j["categories"].is_object()) throw ConfigError("categories must be an object");
      for (const auto& item : j["categories"].items()) {
        c.categories.emplace(item.key(), profile_from_json(item.value(), c.base));
      }
    }
    apply_seed(c, c.seed);
    if (j.contains("ablation")) apply_ablation(c, j["ablation"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j);
}

void apply_ablation(PipelineConfig& config, const std::string& id) {
  std::optional<PoolMode> pool;
  DcgaVariant variant = DcgaVariant::kLiteral;
  if (id == "none" || id == "dcga=dcga") {
    // Keep every profile's own DCGA settings.
    config.ablation = id;
    return;
  } else if (id == "dcga=gmp") {
    pool = PoolMode::kGmp;
    variant = DcgaVariant::kNone;
  } else if (id == "dcga=gap") {
    pool = PoolMode::kGap;
    variant = DcgaVariant::kNone;
  } else {
    throw ConfigError("unknown ablation '" + id + "' (expected dcga=dcga|gmp|gap)");
  }
  for (Profile* p : config.all_profiles()) {
    p->dcga.pool_mode = *pool;
    p->dcga.variant = variant;
  }
  config.ablation = id;
}

void apply_seed(PipelineConfig& config, std::uint64_t seed) {
  config.seed = seed;
  for (Profile* p : config.all_profiles()) p->amm.seed = seed;
}

namespace {

fs::path resolve(const fs::path& root, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : root / p;
}

std::string relative_to(const fs::path& p, const fs::path& root) {
  const auto rel = p.lexically_relative(root);
  return rel.empty() ? p.string() : rel.generic_string();
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  const json j = read_json(dir / "manifest.json");
  Dataset ds;
  ds.root = fs::absolute(dir).lexically_normal();
  std::set<std::string> seen;
  try {
    for (const auto& r : j.at("records")) {
      SceneRecord rec;
      rec.id = r.at("id").get<std::string>();
      if (rec.id.empty() || rec.id.find('/') != std::string::npos) {
        throw DataError("record ids must be non-empty and free of '/'");
      }
      if (!seen.insert(rec.id).second) throw DataError("duplicate record id '" + rec.id + "'");
      rec.image = resolve(ds.root, r.at("image").get<std::string>());
      if (r.contains("features") && !r["features"].is_null()) {
        rec.features = resolve(ds.root, r["features"].get<std::string>());
      }
      if (r.contains("masks") && !r["masks"].is_null()) {
        rec.masks = resolve(ds.root, r["masks"].get<std::string>());
      }
      rec.category = r.value("category", rec.category);
      rec.backbone = r.value("backbone", rec.backbone);
      rec.upsample_source = r.value("upsample_source", rec.upsample_source);
      if (rec.upsample_source != "core" && rec.upsample_source != "bridge") {
        throw DataError("record '" + rec.id + "': upsample_source must be core or bridge");
      }
      if (r.contains("label") && !r["label"].is_null()) rec.label = r["label"].get<int>();
      if (r.contains("gt") && !r["gt"].is_null()) rec.gt = resolve(ds.root, r["gt"].get<std::string>());
      rec.no_objects = r.value("no_objects", false);
      ds.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dataset manifest: ") + e.what());
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  json records = json::array();
  for (const auto& r : ds.records) {
    json j;
    j["id"] = r.id;
    j["category"] = r.category;
    j["image"] = relative_to(r.image, dir);
    if (r.features) j["features"] = relative_to(*r.features, dir);
    if (r.masks) j["masks"] = relative_to(*r.masks, dir);
    j["backbone"] = r.backbone;
    j["upsample_source"] = r.upsample_source;
    if (r.label) j["label"] = *r.label;
    if (r.gt) j["gt"] = relative_to(*r.gt, dir);
    if (r.no_objects) j["no_objects"] = true;
    records.push_back(std::move(j));
  }
  write_json(json{{"format", "lad-dataset"}, {"version", 1}, {"records", std::move(records)}},
             dir / "manifest.json");
}

GroundTruth load_ground_truth(const fs::path& gt_json) {
  const json j = read_json(gt_json);
  GroundTruth gt;
  try {
    gt.label = j.at("label").get<int>();
    gt.anomaly = j.value("anomaly", gt.anomaly);
    if (j.contains("mask_labels")) gt.mask_labels = j["mask_labels"].get<std::vector<std::string>>();
    const auto regions = j.value("regions", json::array());
    if (!regions.empty()) {
      const auto pages = mask_pages_from_tensor(
          read_tensor(gt_json.parent_path() / j.at("masks").get<std::string>()));
      for (const auto& r : regions) {
        const auto page = r.at("page").get<std::size_t>();
        if (page >= pages.size()) throw DataError("gt region refers to a missing mask page");
        gt.regions.push_back(make_region(pages[page].mask, r.at("saturation_area").get<std::size_t>()));
      }
    }
  } catch (const json::exception& e) {
    throw DataError("malformed ground truth " + gt_json.string() + ": " + e.what());
  }
  if ((gt.label == 1) != !gt.regions.empty()) {
    throw DataError("ground truth " + gt_json.string() + ": label and regions disagree");
  }
  return gt;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace lad
