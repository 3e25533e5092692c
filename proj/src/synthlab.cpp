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

#include "lad/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lad {
namespace {

constexpr int kSupersample = 4;
constexpr std::array<float, 3> kBackground{0.12f, 0.12f, 0.14f};
constexpr std::array<float, 3> kTray{0.78f, 0.74f, 0.66f};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

bool inside(ShapeKind shape, double u, double v) {
  const double au = std::abs(u), av = std::abs(v);
  switch (shape) {
    case ShapeKind::kCircle: return u * u + v * v <= 1.0;
    case ShapeKind::kSquare: return std::max(au, av) <= 0.85;
    case ShapeKind::kTriangle: return v <= 0.8 && v >= -0.95 && au <= 0.95 * (v + 0.95) / 1.75;
    case ShapeKind::kDiamond: return au + av <= 1.0;
    case ShapeKind::kRing: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.25;
    }
    case ShapeKind::kCross: return (au <= 0.3 && av <= 0.95) || (av <= 0.3 && au <= 0.95);
  }
  return false;
}

struct Layout {
  std::size_t margin;
  double cell_h;
  double cell_w;
  double half;  // object half-size in pixels
};

Layout make_layout(const SceneSpec& spec) {
  const std::size_t n = spec.image_size;
  const auto margin = static_cast<std::size_t>(std::lround(0.06 * static_cast<double>(n)));
  const double inner = static_cast<double>(n - 2 * margin);
  const double ch = inner / static_cast<double>(spec.rows);
  const double cw = inner / static_cast<double>(spec.cols);
  return Layout{margin, ch, cw, 0.32 * std::min(ch, cw)};
}

// Sub-pixel coverage in [0, 1] of one shape centred in `cell`.
Grid<float> object_coverage(const SceneSpec& spec, const Layout& layout, ShapeKind shape,
                            std::size_t cell) {
  const std::size_t n = spec.image_size;
  const double cy = static_cast<double>(layout.margin) +
                    (static_cast<double>(cell / spec.cols) + 0.5) * layout.cell_h;
  const double cx = static_cast<double>(layout.margin) +
                    (static_cast<double>(cell % spec.cols) + 0.5) * layout.cell_w;
  Grid<float> cov(n, n, 0.0f);
  const auto y0 = static_cast<std::size_t>(std::max(0.0, std::floor(cy - layout.half - 1)));
  const auto x0 = static_cast<std::size_t>(std::max(0.0, std::floor(cx - layout.half - 1)));
  const auto y1 = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(cy + layout.half + 1)));
  const auto x1 = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(cx + layout.half + 1)));
  for (std::size_t y = y0; y < y1; ++y) {
    for (std::size_t x = x0; x < x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        const double py = static_cast<double>(y) + (sy + 0.5) / kSupersample;
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = static_cast<double>(x) + (sx + 0.5) / kSupersample;
          hits += inside(shape, (px - cx) / layout.half, (py - cy) / layout.half) ? 1 : 0;
        }
      }
      cov.at(y, x) = static_cast<float>(hits) / (kSupersample * kSupersample);
    }
  }
  return cov;
}

Grid<std::uint8_t> binarize(const Grid<float>& cov) {
  Grid<std::uint8_t> out(cov.height(), cov.width(), 0);
  for (std::size_t i = 0; i < cov.size(); ++i) out.data()[i] = cov.data()[i] >= 0.5f ? 1 : 0;
  return out;
}

std::array<float, 3> jitter(const std::array<float, 3>& c, Rng& rng, double amount) {
  std::array<float, 3> out{};
  for (int i = 0; i < 3; ++i) {
    out[i] = static_cast<float>(std::clamp(c[i] + rng.uniform(-amount, amount), 0.0, 1.0));
  }
  return out;
}

double colour_distance(const std::array<float, 3>& a, const std::array<float, 3>& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

}  // namespace

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kNone: return "none";
    case AnomalyKind::kMissing: return "missing";
    case AnomalyKind::kExtra: return "extra";
    case AnomalyKind::kSwapped: return "swapped";
    case AnomalyKind::kMoved: return "moved";
    case AnomalyKind::kWrongCombo: return "wrong_combo";
  }
  return "?";
}

AnomalyKind parse_anomaly(const std::string& s) {
  for (auto k : {AnomalyKind::kNone, AnomalyKind::kMissing, AnomalyKind::kExtra,
                 AnomalyKind::kSwapped, AnomalyKind::kMoved, AnomalyKind::kWrongCombo}) {
    if (to_string(k) == s) return k;
  }
  throw SceneSpecError("unknown anomaly kind '" + s + "'");
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kDiamond: return "diamond";
    case ShapeKind::kRing: return "ring";
    case ShapeKind::kCross: return "cross";
  }
  return "?";
}

ShapeKind parse_shape(const std::string& s) {
  for (auto k : {ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kTriangle, ShapeKind::kDiamond,
                 ShapeKind::kRing, ShapeKind::kCross}) {
    if (to_string(k) == s) return k;
  }
  throw SceneSpecError("unknown shape '" + s + "'");
}

std::vector<ObjectClass> breakfast_palette() {
  return {
      {"tangerine", ShapeKind::kCircle, {0.95f, 0.55f, 0.10f}},
      {"tangerine", ShapeKind::kCircle, {0.95f, 0.55f, 0.10f}},
      {"peach", ShapeKind::kDiamond, {0.95f, 0.70f, 0.60f}},
      {"cereal", ShapeKind::kSquare, {0.60f, 0.40f, 0.20f}},
      {"chips", ShapeKind::kRing, {0.95f, 0.90f, 0.45f}},
      {"almond", ShapeKind::kTriangle, {0.45f, 0.25f, 0.15f}},
  };
}

SceneBundle generate_scene(const SceneSpec& spec) {
  const std::size_t cells = spec.rows * spec.cols;
  if (spec.rows == 0 || spec.cols == 0) throw SceneSpecError("scene grid must be non-empty");
  if (spec.palette.empty()) throw SceneSpecError("scene palette is empty");
  if (spec.palette.size() > cells) throw SceneSpecError("palette has more objects than grid cells");
  if (spec.patch == 0 || spec.image_size % spec.patch != 0) {
    throw SceneSpecError("image size must be divisible by the patch size");
  }
  if (spec.image_size < 8 * std::max(spec.rows, spec.cols)) {
    throw SceneSpecError("image too small for the grid");
  }
  const bool free = spec.layout == LayoutRule::kFreePlacement;
  if (free && (spec.anomaly == AnomalyKind::kSwapped || spec.anomaly == AnomalyKind::kMoved)) {
    throw SceneSpecError(to_string(spec.anomaly) + " is not an anomaly under free placement");
  }

  Rng rng(spec.seed);
  std::vector<std::size_t> cell_order(cells);
  for (std::size_t i = 0; i < cells; ++i) cell_order[i] = i;
  if (free) {
    for (std::size_t i = cells - 1; i > 0; --i) std::swap(cell_order[i], cell_order[rng.index(i + 1)]);
  }
  std::vector<PlacedObject> objects;
  for (std::size_t i = 0; i < spec.palette.size(); ++i) {
    objects.push_back(PlacedObject{"obj" + std::to_string(i), i, cell_order[i],
                                   jitter(spec.palette[i].color, rng, spec.color_jitter)});
  }
  auto empty_cells = [&] {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < cells; ++c) {
      if (std::none_of(objects.begin(), objects.end(), [&](const auto& o) { return o.cell == c; })) {
        out.push_back(c);
      }
    }
    return out;
  };

  const Layout layout = make_layout(spec);
  auto footprint = [&](const PlacedObject& o) {
    return binarize(object_coverage(spec, layout, spec.palette[o.palette_index].shape, o.cell));
  };
  std::vector<Grid<std::uint8_t>> regions;

  switch (spec.anomaly) {
    case AnomalyKind::kNone: break;
    case AnomalyKind::kMissing: {
      if (objects.size() < 2) throw SceneSpecError("missing needs at least two objects");
      const std::size_t victim = rng.index(objects.size());
      regions.push_back(footprint(objects[victim]));
      objects.erase(objects.begin() + static_cast<std::ptrdiff_t>(victim));
      break;
    }
    case AnomalyKind::kExtra: {
      const auto free_cells = empty_cells();
      if (free_cells.empty()) throw SceneSpecError("grid too small for an extra object");
      const std::size_t source = rng.index(objects.size());
      PlacedObject dup = objects[source];
      dup.label = "extra";
      dup.cell = free_cells[rng.index(free_cells.size())];
      dup.color = jitter(spec.palette[dup.palette_index].color, rng, spec.color_jitter);
      regions.push_back(footprint(dup));
      objects.push_back(dup);
      break;
    }
    case AnomalyKind::kSwapped: {
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t a = 0; a < objects.size(); ++a) {
        for (std::size_t b = a + 1; b < objects.size(); ++b) {
          if (spec.palette[objects[a].palette_index].name != spec.palette[objects[b].palette_index].name) {
            pairs.emplace_back(a, b);
          }
        }
      }
      if (pairs.empty()) throw SceneSpecError("swapped needs two objects of different classes");
      const auto [a, b] = pairs[rng.index(pairs.size())];
      std::swap(objects[a].cell, objects[b].cell);
      regions.push_back(footprint(objects[a]));
      regions.push_back(footprint(objects[b]));
      break;
    }
    case AnomalyKind::kMoved: {
      const auto free_cells = empty_cells();
      if (free_cells.empty()) throw SceneSpecError("grid too small to move an object");
      const std::size_t victim = rng.index(objects.size());
      regions.push_back(footprint(objects[victim]));
      objects[victim].cell = free_cells[rng.index(free_cells.size())];
      regions.push_back(footprint(objects[victim]));
      break;
    }
    case AnomalyKind::kWrongCombo: {
      const std::size_t victim = rng.index(objects.size());
      const auto& own = spec.palette[objects[victim].palette_index];
      std::vector<std::array<float, 3>> options;
      for (const auto& c : spec.palette) {
        if (c.name != own.name && colour_distance(c.color, own.color) > 0.3) options.push_back(c.color);
      }
      std::array<float, 3> target{1.0f - own.color[0], 1.0f - own.color[1], 1.0f - own.color[2]};
      if (!options.empty()) target = options[rng.index(options.size())];
      objects[victim].color = jitter(target, rng, spec.color_jitter);
      regions.push_back(footprint(objects[victim]));
      break;
    }
  }

  // Render: background, tray, then objects, box-filtered at 4x4 samples.
  const std::size_t n = spec.image_size;
  SceneBundle bundle;
  bundle.image = FeatureMap(3, n, n);
  Grid<float> tray_cov(n, n, 0.0f);
  if (spec.container) {
    const double lo = static_cast<double>(layout.margin) * 0.5;
    const double hi = static_cast<double>(n) - lo;
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        auto span_cov = [&](double p) { return std::clamp(std::min(p + 1.0 - lo, hi - p), 0.0, 1.0); };
        tray_cov.at(y, x) = static_cast<float>(span_cov(static_cast<double>(y)) *
                                               span_cov(static_cast<double>(x)));
      }
    }
  }
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float t = tray_cov.at(y, x);
        bundle.image.at(static_cast<std::size_t>(c), y, x) = kBackground[c] + t * (kTray[c] - kBackground[c]);
      }
    }
  }
  Grid<std::uint8_t> occupied(n, n, 0);
  for (const auto& o : objects) {
    const auto cov = object_coverage(spec, layout, spec.palette[o.palette_index].shape, o.cell);
    for (std::size_t p = 0; p < cov.size(); ++p) {
      const float a = cov.data()[p];
      if (a <= 0.0f) continue;
      for (std::size_t c = 0; c < 3; ++c) {
        float& px = bundle.image.channel(c)[p];
        px += a * (o.color[c] - px);
      }
    }
    auto mask = binarize(cov);
    for (std::size_t p = 0; p < mask.size(); ++p) occupied.data()[p] |= mask.data()[p];
    bundle.masks.push_back(make_mask_page(std::move(mask)));
    bundle.mask_labels.push_back(o.label);
  }
  if (spec.container) {
    auto tray = binarize(tray_cov);
    for (std::size_t p = 0; p < tray.size(); ++p) tray.data()[p] &= static_cast<std::uint8_t>(1 - occupied.data()[p]);
    bundle.masks.push_back(make_mask_page(std::move(tray)));
    bundle.mask_labels.push_back("container");
  }
  if (spec.pixel_noise > 0.0) {
    for (float& v : bundle.image.data()) {
      v = static_cast<float>(std::clamp(v + rng.uniform(-spec.pixel_noise, spec.pixel_noise), 0.0, 1.0));
    }
  }

  for (auto& r : regions) bundle.gt_regions.push_back(make_region(std::move(r)));
  bundle.label = bundle.gt_regions.empty() ? 0 : 1;
  bundle.anomaly = spec.anomaly;
  bundle.objects = std::move(objects);
  bundle.features = toy_extract(bundle.image, spec.patch);
  return bundle;
}

FeatureMap toy_extract(const FeatureMap& image, std::size_t patch) {
  if (image.channels() != 3) throw ShapeError("toy extractor expects an RGB image");
  if (patch == 0 || image.height() % patch != 0 || image.width() % patch != 0) {
    throw ShapeError("image " + image.shape_string() + " is not divisible into " +
                     std::to_string(patch) + "-pixel patches");
  }
  const std::size_t gh = image.height() / patch, gw = image.width() / patch;
  FeatureMap out(kToyChannels, gh, gw);
  std::vector<double> intensity(patch * patch);
  const double n = static_cast<double>(patch * patch);
  for (std::size_t py = 0; py < gh; ++py) {
    for (std::size_t px = 0; px < gw; ++px) {
      double rgb[3] = {0.0, 0.0, 0.0};
      for (std::size_t y = 0; y < patch; ++y) {
        for (std::size_t x = 0; x < patch; ++x) {
          double sum = 0.0;
          for (std::size_t c = 0; c < 3; ++c) {
            const double v = image.at(c, py * patch + y, px * patch + x);
            rgb[c] += v;
            sum += v;
          }
          intensity[y * patch + x] = sum / 3.0;
        }
      }
      double mean_i = 0.0;
      for (double v : intensity) mean_i += v;
      mean_i /= n;
      double var = 0.0;
      for (double v : intensity) var += (v - mean_i) * (v - mean_i);
      var /= n;
      double edge = 0.0;
      if (patch > 1) {
        double horiz = 0.0, vert = 0.0;
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t x = 0; x + 1 < patch; ++x) {
            horiz += std::abs(intensity[y * patch + x + 1] - intensity[y * patch + x]);
            vert += std::abs(intensity[(x + 1) * patch + y] - intensity[x * patch + y]);
          }
        }
        const double pairs = static_cast<double>(patch * (patch - 1));
        edge = horiz / pairs + vert / pairs;
      }
      const float values[kToyChannels] = {
          static_cast<float>(rgb[0] / n),
          static_cast<float>(rgb[1] / n),
          static_cast<float>(rgb[2] / n),
          static_cast<float>(edge),
          static_cast<float>((static_cast<double>(px) + 0.5) / static_cast<double>(gw)),
          static_cast<float>((static_cast<double>(py) + 0.5) / static_cast<double>(gh)),
          static_cast<float>(mean_i),
          static_cast<float>(var),
      };
      for (std::size_t c = 0; c < kToyChannels; ++c) out.at(c, py, px) = values[c];
    }
  }
  return out;
}

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec spec;
  try {
    if (j.contains("grid")) {
      spec.rows = j["grid"].at(0).get<std::size_t>();
      spec.cols = j["grid"].at(1).get<std::size_t>();
    }
    if (j.contains("palette")) {
      spec.palette.clear();
      for (const auto& p : j["palette"]) {
        ObjectClass c;
        c.name = p.at("name").get<std::string>();
        c.shape = parse_shape(p.at("shape").get<std::string>());
        const auto rgb = p.at("color").get<std::vector<float>>();
        if (rgb.size() != 3) throw SceneSpecError("palette colours need three components");
        c.color = {rgb[0], rgb[1], rgb[2]};
        spec.palette.push_back(std::move(c));
      }
    } else {
      spec.palette = breakfast_palette();
    }
    const std::string layout = j.value("layout_rule", std::string("fixed_order"));
    if (layout == "fixed_order") {
      spec.layout = LayoutRule::kFixedOrder;
    } else if (layout == "free_placement") {
      spec.layout = LayoutRule::kFreePlacement;
    } else {
      throw SceneSpecError("unknown layout rule '" + layout + "'");
    }
    spec.anomaly = parse_anomaly(j.value("anomaly", std::string("none")));
    spec.seed = j.value("seed", spec.seed);
    spec.image_size = j.value("image_size", spec.image_size);
    spec.patch = j.value("patch", spec.patch);
    spec.container = j.value("container", spec.container);
    spec.color_jitter = j.value("color_jitter", spec.color_jitter);
    spec.pixel_noise = j.value("pixel_noise", spec.pixel_noise);
  } catch (const nlohmann::json::exception& e) {
    throw SceneSpecError(std::string("malformed scene spec: ") + e.what());
  }
  return spec;
}

}  // namespace lad
