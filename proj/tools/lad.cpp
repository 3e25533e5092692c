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

// Command line front end: bank-build, detect, eval and synth.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lad/config.hpp"
#include "lad/pipeline.hpp"
#include "lad/synth_io.hpp"
#include "lad/synthlab.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool lightweight = false;
  std::string ablate;
  std::size_t workers = 1;
  std::optional<int> factor;
  std::optional<float> sigma_spatial;
  std::optional<std::string> sigma_range;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "pipeline config JSON");
  app->add_option("--seed", o.seed, "override the config seed");
  app->add_flag("--lightweight", o.lightweight, "score unmatched objects only");
  app->add_option("--ablate", o.ablate, "descriptor ablation: dcga=dcga|gmp|gap");
  app->add_option("--workers", o.workers, "parallel detection workers")->check(CLI::PositiveNumber);
  app->add_option("--upsample-factor", o.factor, "JBU factor (1, 2, 4, 8, 16, 32)");
  app->add_option("--sigma-spatial", o.sigma_spatial, "JBU spatial sigma in low-res cells");
  app->add_option("--sigma-range", o.sigma_range, "JBU guide range sigma, or inf");
}

lad::PipelineConfig make_config(const CommonOptions& o) {
  lad::PipelineConfig c = o.config.empty() ? lad::PipelineConfig{} : lad::load_config(o.config);
  if (o.seed) lad::apply_seed(c, *o.seed);
  if (o.lightweight) c.lightweight = true;
  if (!o.ablate.empty()) lad::apply_ablation(c, o.ablate);
  for (lad::Profile* p : c.all_profiles()) {
    if (o.factor) p->upsample.factor = *o.factor;
    if (o.sigma_spatial) p->upsample.sigma_spatial = *o.sigma_spatial;
    if (o.sigma_range) {
      try {
        p->upsample.sigma_range = *o.sigma_range == "inf" ? std::numeric_limits<float>::infinity()
                                                          : std::stof(*o.sigma_range);
      } catch (const std::exception&) {
        throw lad::ConfigError("--sigma-range expects a number or inf");
      }
    }
    lad::validate(*p);
  }
  return c;
}

// A query is either a scene directory with conventional file names or a
// dataset directory plus a record id.
lad::SceneRecord resolve_query(const fs::path& path, const std::string& id,
                               const std::string& category) {
  if (fs::exists(path / "manifest.json")) {
    const lad::Dataset ds = lad::load_dataset(path);
    if (id.empty() && ds.records.size() == 1) return ds.records.front();
    for (const auto& r : ds.records) {
      if (r.id == id) return r;
    }
    throw lad::DataError(id.empty() ? "dataset holds several records; pass --id"
                                    : "no record '" + id + "' in " + path.string());
  }
  lad::SceneRecord r;
  r.id = id.empty() ? path.filename().string() : id;
  r.category = category;
  if (fs::exists(path / "image.sltf")) {
    r.image = path / "image.sltf";
  } else if (fs::exists(path / "image.png")) {
    r.image = path / "image.png";
  } else {
    throw lad::DataError("no image.sltf or image.png in " + path.string());
  }
  if (fs::exists(path / "features.sltf")) r.features = path / "features.sltf";
  if (fs::exists(path / "masks.sltf")) r.masks = path / "masks.sltf";
  if (fs::exists(path / "gt.json")) r.gt = path / "gt.json";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot logical anomaly detection"};
  app.require_subcommand(1);

  CommonOptions common;
  auto* bank_cmd = app.add_subcommand("bank-build", "build a template bank");
  std::string templates_dir, bank_out;
  std::optional<std::size_t> coreset;
  bank_cmd->add_option("--templates", templates_dir, "dataset dir of normal templates")->required();
  bank_cmd->add_option("--out", bank_out, "bank output dir")->required();
  bank_cmd->add_option("--coreset", coreset, "keep this many templates (greedy k-center)");
  add_common(bank_cmd, common);

  auto* detect_cmd = app.add_subcommand("detect", "score one query scene");
  std::string bank_dir, query_path, query_id, category = "default", out_dir;
  detect_cmd->add_option("--bank", bank_dir, "bank dir")->required();
  detect_cmd->add_option("--query", query_path, "scene dir or dataset dir")->required();
  detect_cmd->add_option("--id", query_id, "record id inside a dataset dir");
  detect_cmd->add_option("--category", category, "profile for a bare scene dir");
  detect_cmd->add_option("--out", out_dir, "output dir")->required();
  add_common(detect_cmd, common);

  auto* eval_cmd = app.add_subcommand("eval", "detect a labelled dataset and report metrics");
  std::string dataset_dir;
  eval_cmd->add_option("--bank", bank_dir, "bank dir")->required();
  eval_cmd->add_option("--dataset", dataset_dir, "labelled dataset dir")->required();
  eval_cmd->add_option("--out", out_dir, "output dir")->required();
  add_common(eval_cmd, common);

  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic scenes");
  std::string spec_path;
  bool suite = false;
  synth_cmd->add_option("--spec", spec_path, "scene or suite spec JSON");
  synth_cmd->add_flag("--suite", suite, "write the default 60-scene suite");
  synth_cmd->add_option("--out", out_dir, "output dir")->required();
  add_common(synth_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const lad::PipelineConfig config = make_config(common);
    if (*bank_cmd) {
      const auto loaded = lad::build_bank_from_dataset(config, lad::load_dataset(templates_dir),
                                                       bank_out, coreset);
      std::cout << "bank with " << loaded.bank.size() << " templates written to " << bank_out << '\n';
    } else if (*detect_cmd) {
      const lad::Detector detector(config, lad::load_bank(bank_dir));
      const lad::Detection d = detector.detect(resolve_query(query_path, query_id, category));
      const auto t = std::chrono::steady_clock::now();
      lad::write_detection(d, out_dir);
      auto report = d.report;
      report["timing"]["write_ms"] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
      lad::write_json(report, fs::path(out_dir) / "report.json");
      std::cout << d.id << " image_score " << d.map.image_score << '\n';
    } else if (*eval_cmd) {
      const lad::Detector detector(config, lad::load_bank(bank_dir));
      lad::EvalOptions opts;
      opts.workers = common.workers;
      opts.out_dir = out_dir;
      const auto result = lad::evaluate(detector, lad::load_dataset(dataset_dir), opts);
      std::cout << "image_auroc " << result.metrics["image_auroc"] << " pixel_spro "
                << result.metrics["pixel_spro"] << '\n';
    } else if (*synth_cmd) {
      if (suite == !spec_path.empty()) throw lad::ConfigError("pass exactly one of --spec or --suite");
      nlohmann::json spec = suite ? nlohmann::json::object() : lad::read_json(spec_path);
      if (suite || spec.contains("scene")) {
        lad::SuiteSpec s = lad::suite_spec_from_json(spec);
        if (common.seed) s.seed = *common.seed;
        const auto layout = lad::write_suite(s, out_dir);
        std::cout << "templates in " << layout.templates.string() << ", tests in "
                  << layout.test.string() << '\n';
      } else {
        lad::SceneSpec s = lad::scene_spec_from_json(spec);
        if (common.seed) s.seed = *common.seed;
        lad::Dataset ds{out_dir, {}};
        ds.records.push_back(lad::write_scene(lad::generate_scene(s), "scene",
                                              spec.value("category", std::string("default")),
                                              fs::path(out_dir) / "scene"));
        lad::save_dataset(ds, out_dir);
        std::cout << "scene written to " << out_dir << '\n';
      }
    }
  } catch (const lad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lad::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
