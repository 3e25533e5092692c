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

#include "lad/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <random>
#include <set>
#include <thread>

#include "lad/dcga.hpp"
#include "lad/image_io.hpp"
#include "lad/matcher.hpp"
#include "lad/metrics.hpp"
#include "lad/synthlab.hpp"
#include "lad/tensor_store.hpp"
#include "lad/upsampler.hpp"

namespace lad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

// Accumulates named stage durations in insertion order.
class StageTimer {
 public:
  template <typename F>
  auto run(const std::string& name, F&& f) {
    const auto t = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      add(name, ms_since(t));
    } else {
      auto out = f();
      add(name, ms_since(t));
      return out;
    }
  }

  void add(const std::string& name, double ms) {
    for (auto& [n, v] : stages_) {
      if (n == name) {
        v += ms;
        return;
      }
    }
    stages_.emplace_back(name, ms);
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [n, v] : stages_) j[n] = v;
    return j;
  }

 private:
  std::vector<std::pair<std::string, double>> stages_;
};

MaskPage full_frame_page(std::size_t h, std::size_t w) {
  return make_mask_page(Grid<std::uint8_t>(h, w, 1));
}

json optional_index(const std::optional<std::size_t>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

FeatureMap load_image(const fs::path& path, std::size_t size) {
  FeatureMap img;
  if (path.extension() == ".png") {
    img = read_png(path);
  } else {
    img = to_feature_map(read_tensor(path));
  }
  if (img.channels() != 3) {
    throw ShapeError("image " + path.string() + " must have three channels, got " +
                     img.shape_string());
  }
  for (float v : img.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("image " + path.string() + " leaves [0, 1]");
  }
  if (img.height() != size || img.width() != size) img = resize_bilinear(img, size, size);
  return img;
}

SceneInputs load_scene(const SceneRecord& record, const PipelineConfig& config) {
  SceneInputs s;
  s.id = record.id;
  s.category = record.category;
  s.image = load_image(record.image, config.image_size);
  if (record.features) {
    s.features = to_feature_map(read_tensor(*record.features));
  } else {
    s.features = toy_extract(s.image, config.toy_patch);
  }
  s.features_upsampled = record.upsample_source == "bridge";
  if (s.features_upsampled &&
      (s.features.height() != config.image_size || s.features.width() != config.image_size)) {
    throw ShapeError("record '" + record.id + "': bridge-upsampled features must be " +
                     std::to_string(config.image_size) + " pixels square");
  }
  if (record.masks) s.masks = load_mask_set(*record.masks);
  return s;
}

FeatureMap upsample_scene(const SceneInputs& scene, const Profile& profile) {
  if (scene.features_upsampled) return scene.features;
  const auto f = static_cast<std::size_t>(profile.upsample.factor);
  const std::size_t gh = f * scene.features.height(), gw = f * scene.features.width();
  if (scene.image.height() == gh && scene.image.width() == gw) {
    return jbu_upsample(scene.features, scene.image, profile.upsample);
  }
  return jbu_upsample(scene.features, resize_bilinear(scene.image, gh, gw), profile.upsample);
}

SceneObjects analyze_objects(const SceneInputs& scene, const FeatureMap& up, const Profile& profile,
                             bool force_pseudo) {
  SceneObjects out;
  std::vector<MaskPage> kept;
  if (!force_pseudo && !scene.masks.empty()) {
    const auto& first = scene.masks.front().mask;
    const auto limits = area_thresholds(profile.mask_filter.min_area_frac,
                                        profile.mask_filter.max_area_frac, first.height(),
                                        first.width());
    for (std::size_t i = 0; i < scene.masks.size(); ++i) {
      if (!filter_masks(std::span(&scene.masks[i], 1), limits).empty()) {
        kept.push_back(scene.masks[i]);
        out.source_pages.emplace_back(i);
      }
    }
  }
  if (kept.empty()) {
    out.pseudo = true;
    kept.push_back(full_frame_page(scene.image.height(), scene.image.width()));
    out.source_pages.assign(1, std::nullopt);
  }
  out.records = object_feature_maps(kept, up);
  out.descriptors = dcga_descriptors(out.records, profile.dcga);
  return out;
}

Detector::Detector(PipelineConfig config, LoadedBank bank)
    : config_(std::move(config)), bank_(std::move(bank)) {
  for (Profile* p : config_.all_profiles()) validate(*p);
}

std::shared_ptr<const SceneObjects> Detector::reference(std::size_t bank_index,
                                                        const std::string& category,
                                                        bool pseudo) const {
  const auto& id = bank_.bank.entry(bank_index).template_id;
  const std::string key = category + "\n" + id + (pseudo ? "\np" : "");
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const auto assets = bank_.assets.find(id);
  if (assets == bank_.assets.end() || !assets->second.image) {
    throw DataError("template '" + id + "' has no stored image");
  }
  SceneInputs s;
  s.id = id;
  s.category = category;
  s.image = load_image(*assets->second.image, config_.image_size);
  s.features = bank_.bank.feature_map(bank_index);
  s.features_upsampled =
      s.features.height() == config_.image_size && s.features.width() == config_.image_size;
  if (assets->second.masks) s.masks = load_mask_set(*assets->second.masks);
  const Profile& profile = config_.profile(category);
  auto objects = std::make_shared<const SceneObjects>(
      analyze_objects(s, upsample_scene(s, profile), profile, pseudo));

  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(key, std::move(objects)).first->second;
}

Detection Detector::detect(const SceneRecord& query) const {
  const auto t = Clock::now();
  SceneInputs inputs = load_scene(query, config_);
  const double load_ms = ms_since(t);
  Detection d = detect(inputs);
  d.report["timing"]["stages_ms"]["load"] = load_ms;
  d.report["timing"]["wall_ms"] = ms_since(t);
  return d;
}

Detection Detector::detect(const SceneInputs& query) const {
  const auto start = Clock::now();
  StageTimer timer;
  const Profile& profile = config_.profile(query.category);
  const std::size_t size = config_.image_size;

  const auto nns = timer.run("retrieval", [&] { return image_nns(bank_.bank, query.features, profile.k); });
  const FeatureMap up = timer.run("upsample", [&] { return upsample_scene(query, profile); });
  const SceneObjects q = timer.run("objects", [&] { return analyze_objects(query, up, profile, false); });

  std::vector<std::shared_ptr<const SceneObjects>> refs;
  timer.run("references", [&] {
    for (const auto& n : nns.neighbors) refs.push_back(reference(n.index, query.category, q.pseudo));
  });

  Detection d;
  d.id = query.id;
  d.category = query.category;
  json sinkhorn = json::array();
  timer.run("matching", [&] {
    for (std::size_t r = 0; r < refs.size(); ++r) {
      const ScoreMatrix s = score_matrix(q.descriptors, refs[r]->descriptors);
      const TransportPlan plan = sinkhorn_assign(s, profile.match);
      d.assignments.push_back(extract_matches(plan, profile.match_threshold));
      sinkhorn.push_back({{"template", nns.neighbors[r].template_id},
                          {"iterations", plan.iterations},
                          {"converged", plan.converged},
                          {"max_violation", plan.max_violation}});
    }
  });

  const ScoreParts parts = timer.run("scoring", [&] {
    std::vector<std::vector<ObjectRecord>> ref_records;
    ref_records.reserve(refs.size());
    for (const auto& r : refs) ref_records.push_back(r->records);
    ScoreParts out = score_parts(d.assignments, q.records, ref_records, size, size, profile.amm);
    d.map = fuse(out, config_.lightweight, profile.amm);
    return out;
  });

  const auto report_start = Clock::now();
  d.image = query.image;
  d.query_pages = q.source_pages;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    d.references.push_back(nns.neighbors[r].template_id);
    d.reference_pages.push_back(refs[r]->source_pages);
  }

  json& rep = d.report;
  rep["query"] = query.id;
  rep["category"] = query.category;
  rep["image_score"] = d.map.image_score;
  rep["no_objects"] = q.pseudo;
  rep["lightweight"] = config_.lightweight;
  rep["ablation"] = config_.ablation;
  rep["seed"] = config_.seed;
  json neighbors = json::array();
  for (const auto& n : nns.neighbors) {
    neighbors.push_back({{"template", n.template_id}, {"distance", n.distance}, {"rank", n.rank}});
  }
  rep["neighbors"] = std::move(neighbors);
  {
    // Single-template pick among the retrieved set, for comparison runs.
    std::mt19937_64 rng(config_.seed);
    rep["random_pick"] = nns.neighbors[rng() % nns.neighbors.size()].template_id;
  }
  json objects = json::array();
  for (const auto& os : parts.objects) {
    json per_ref = json::array();
    for (std::size_t r = 0; r < d.assignments.size(); ++r) {
      const auto& a = d.assignments[r];
      json e{{"template", d.references[r]}};
      if (const Match* m = a.match_for(os.query_idx)) {
        e["matched"] = true;
        e["ref_object"] = m->ref_idx;
        e["confidence"] = m->confidence;
      } else if (const UnmatchedQuery* u = a.unmatched_for(os.query_idx)) {
        e["matched"] = false;
        e["ref_object"] = optional_index(u->nearest_ref_idx);
        e["confidence"] = u->confidence;
      }
      per_ref.push_back(std::move(e));
    }
    objects.push_back({{"object", os.query_idx},
                       {"mask_page", optional_index(q.source_pages[os.query_idx])},
                       {"status", os.matched ? "matched" : "unmatched"},
                       {"fallback", os.fallback},
                       {"peak", os.peak},
                       {"per_reference", std::move(per_ref)}});
  }
  rep["objects"] = std::move(objects);
  json unmatched_ref = json::array();
  json assignments = json::array();
  for (std::size_t r = 0; r < d.assignments.size(); ++r) {
    for (std::size_t j : d.assignments[r].unmatched_ref) {
      unmatched_ref.push_back({{"template", d.references[r]}, {"ref_object", j}});
    }
    json a = to_json(d.assignments[r]);
    a["template"] = d.references[r];
    assignments.push_back(std::move(a));
  }
  rep["unmatched_ref"] = std::move(unmatched_ref);
  rep["assignments"] = std::move(assignments);
  rep["sinkhorn"] = std::move(sinkhorn);
  json warnings = json::array();
  if (q.pseudo) warnings.push_back("no key objects after filtering; scored the whole frame");
  bool unconverged = false;
  for (const auto& s : rep["sinkhorn"]) unconverged = unconverged || !s["converged"].get<bool>();
  if (unconverged) warnings.push_back("sinkhorn stopped at the iteration cap");
  for (const auto& w : parts.warnings) warnings.push_back(w);
  rep["warnings"] = std::move(warnings);
  timer.add("report", ms_since(report_start));
  rep["timing"] = {{"stages_ms", timer.to_json()}, {"wall_ms", ms_since(start)}};
  return d;
}

void write_detection(const Detection& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_tensor(to_tensor(d.map.scores), dir / "anomaly.sltf");
  const auto& v = d.map.scores.data();
  const float peak = v.empty() ? 0.0f : *std::max_element(v.begin(), v.end());
  write_png(heat_overlay(d.image, d.map.scores, peak), dir / "overlay.png");
  write_json(d.report, dir / "report.json");
}

json strip_timing(json report) {
  report.erase("timing");
  return report;
}

namespace {

json optional_metric(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> safe_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const bool pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool neg = std::count(labels.begin(), labels.end(), 0) > 0;
  if (!pos || !neg) return std::nullopt;
  return auroc(scores, labels);
}

std::optional<double> safe_spro(const std::vector<Grid<float>>& maps,
                                const std::vector<std::vector<GtRegion>>& regions) {
  bool any = false;
  for (const auto& r : regions) any = any || !r.empty();
  if (!any) return std::nullopt;
  return spro(maps, regions, kDefaultFprCap);
}

// Map at the ground-truth resolution when the two differ.
Grid<float> map_for_truth(const Grid<float>& map, const GroundTruth& gt) {
  if (gt.regions.empty()) return map;
  const auto& m = gt.regions.front().mask;
  if (m.height() == map.height() && m.width() == map.width()) return map;
  return resize_bilinear(map, m.height(), m.width());
}

}  // namespace

EvalResult evaluate(const Detector& detector, const Dataset& dataset, const EvalOptions& options) {
  const auto start = Clock::now();
  const std::size_t n = dataset.records.size();
  if (n == 0) throw DataError("dataset has no records");
  EvalResult result;
  result.truths.resize(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = dataset.records[i];
    if (rec.gt) {
      result.truths[i] = load_ground_truth(*rec.gt);
      if (rec.label && *rec.label != result.truths[i].label) {
        throw DataError("record '" + rec.id + "': manifest label disagrees with ground truth");
      }
    } else if (rec.label) {
      result.truths[i].label = *rec.label;
    } else {
      throw DataError("record '" + rec.id + "' has no label");
    }
    labels[i] = result.truths[i].label;
    if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
  }
  if (std::count(labels.begin(), labels.end(), 1) == 0 ||
      std::count(labels.begin(), labels.end(), 0) == 0) {
    throw DataError("dataset holds a single class; image AUROC is undefined");
  }

  std::vector<std::optional<Detection>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = detector.detect(dataset.records[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, n);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> scores(n);
  std::vector<Grid<float>> maps(n);
  std::vector<std::vector<GtRegion>> regions(n);
  double detect_ms = 0.0;
  json images = json::array();
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < n; ++i) {
    result.detections.push_back(std::move(*slots[i]));
    const Detection& d = result.detections.back();
    scores[i] = d.map.image_score;
    maps[i] = map_for_truth(d.map.scores, result.truths[i]);
    regions[i] = result.truths[i].regions;
    detect_ms += d.report["timing"]["wall_ms"].get<double>();
    by_category[d.category].push_back(i);
    images.push_back({{"id", d.id},
                      {"category", d.category},
                      {"label", labels[i]},
                      {"image_score", d.map.image_score},
                      {"no_objects", d.report["no_objects"]}});
  }

  json per_category = json::object();
  for (const auto& [cat, idx] : by_category) {
    std::vector<double> s;
    std::vector<int> l;
    std::vector<Grid<float>> m;
    std::vector<std::vector<GtRegion>> r;
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      l.push_back(labels[i]);
      m.push_back(maps[i]);
      r.push_back(regions[i]);
    }
    per_category[cat] = {{"image_auroc", optional_metric(safe_auroc(s, l))},
                         {"pixel_spro", optional_metric(safe_spro(m, r))},
                         {"num_images", idx.size()}};
  }

  json& mj = result.metrics;
  mj["image_auroc"] = auroc(scores, labels);
  mj["pixel_spro"] = optional_metric(safe_spro(maps, regions));
  mj["fpr_cap"] = kDefaultFprCap;
  mj["num_images"] = n;
  mj["num_anomalous"] = std::count(labels.begin(), labels.end(), 1);
  mj["ablation"] = detector.config().ablation;
  mj["lightweight"] = detector.config().lightweight;
  mj["seed"] = detector.config().seed;
  mj["per_category"] = std::move(per_category);
  mj["images"] = std::move(images);

  if (options.out_dir) {
    for (const auto& d : result.detections) write_detection(d, *options.out_dir / d.id);
  }
  mj["timing"] = {{"wall_ms", ms_since(start)}, {"detect_ms_total", detect_ms},
                  {"workers", workers}};
  if (options.out_dir) write_json(mj, *options.out_dir / "metrics.json");
  return result;
}

LoadedBank build_bank_from_dataset(const PipelineConfig& config, const Dataset& templates,
                                   const fs::path& out, std::optional<std::size_t> coreset) {
  if (templates.records.empty()) throw DataError("no template records");
  std::vector<NamedFeatureMap> maps;
  std::map<std::string, TemplateAssetData> assets;
  for (const auto& rec : templates.records) {
    const SceneInputs s = load_scene(rec, config);
    maps.push_back(NamedFeatureMap{rec.id, s.features});
    TemplateAssetData a;
    a.image = to_tensor(s.image);
    if (!s.masks.empty()) a.masks = mask_set_to_tensor(s.masks);
    assets.emplace(rec.id, std::move(a));
  }
  TemplateBank bank = build_bank(maps);
  if (coreset) bank = coreset_subsample(bank, *coreset, config.seed);
  save_bank(bank, out, assets);
  return load_bank(out);
}

double MatchQuality::precision() const {
  return predicted == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(predicted);
}

double MatchQuality::recall() const {
  return expected == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(expected);
}

MatchQuality& MatchQuality::operator+=(const MatchQuality& o) {
  correct += o.correct;
  predicted += o.predicted;
  expected += o.expected;
  return *this;
}

MatchQuality match_quality(const Assignment& a, const std::vector<std::string>& query_labels,
                           const std::vector<std::string>& reference_labels) {
  if (query_labels.size() != a.query_count || reference_labels.size() != a.ref_count) {
    throw DataError("label lists do not match the assignment size");
  }
  MatchQuality q;
  for (const auto& m : a.matched) {
    ++q.predicted;
    const auto& l = query_labels[m.query_idx];
    if (!l.empty() && l == reference_labels[m.ref_idx]) ++q.correct;
  }
  const std::multiset<std::string> refs(reference_labels.begin(), reference_labels.end());
  std::multiset<std::string> used;
  for (const auto& l : query_labels) {
    if (l.empty()) continue;
    if (used.count(l) < refs.count(l)) {
      used.insert(l);
      ++q.expected;
    }
  }
  return q;
}

std::vector<std::string> object_labels(const std::vector<std::optional<std::size_t>>& pages,
                                       const std::vector<std::string>& page_labels) {
  std::vector<std::string> out;
  out.reserve(pages.size());
  for (const auto& p : pages) {
    if (p && *p < page_labels.size()) {
      out.push_back(page_labels[*p]);
    } else {
      out.emplace_back();
    }
  }
  return out;
}

}  // namespace lad
