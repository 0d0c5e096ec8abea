// Copyright 2026 The HistoForge Authors. All Rights Reserved.
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

// histoforge: command-line front end for the tissue synthesis toolkit.

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "histoforge/clustering.hpp"
#include "histoforge/conditioning.hpp"
#include "histoforge/diffusion.hpp"
#include "histoforge/error.hpp"
#include "histoforge/eval/http_server.hpp"
#include "histoforge/eval/service.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/grid.hpp"
#include "histoforge/image.hpp"
#include "histoforge/manifest.hpp"
#include "histoforge/metrics.hpp"
#include "histoforge/sampling.hpp"

namespace hf = histoforge;
using nlohmann::json;

namespace {

bool g_json = false;

void emit(const json& out) {
  if (g_json) {
    std::cout << out.dump() << '\n';
    return;
  }
  for (const auto& [key, value] : out.items()) {
    std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
              << '\n';
  }
}

hf::FeatureMatrix load_features(const std::string& path,
                                const std::optional<std::string>& positions = std::nullopt) {
  auto t = hf::read_ftensor_as<float>(path);
  hf::require(t.ndim() == 2, hf::Errc::dimension_mismatch, "features must be [n, d]: " + path);
  hf::FeatureMatrix f(t.dim(0), t.dim(1), std::move(t.data));
  if (positions) {
    auto p = hf::read_ftensor_as<std::int32_t>(*positions);
    hf::require(p.ndim() == 2 && p.dim(0) == f.n && p.dim(1) == 2, hf::Errc::dimension_mismatch,
                "positions must be [n, 2] matching the features");
    f.positions = std::move(p.data);
  }
  f.validate();
  return f;
}

std::vector<float> load_centroids(const std::string& path, std::size_t d, int& k) {
  auto t = hf::read_ftensor_as<float>(path);
  hf::require(t.ndim() == 2 && t.dim(1) == d, hf::Errc::dimension_mismatch,
              "centroids must be [k, " + std::to_string(d) + "]");
  k = static_cast<int>(t.dim(0));
  return std::move(t.data);
}

std::vector<std::int32_t> load_labels(const std::string& path, std::size_t n) {
  auto t = hf::read_ftensor_as<std::int32_t>(path);
  hf::require(t.ndim() == 1 && t.dim(0) == n, hf::Errc::dimension_mismatch,
              "labels must be [n] with n = " + std::to_string(n));
  return std::move(t.data);
}

void write_labels(const std::string& path, const std::vector<std::int32_t>& labels) {
  hf::write_ftensor(path, hf::Tensor<std::int32_t>({labels.size()}, labels));
}

void write_centroids(const std::string& path, const hf::ClusterModel& m) {
  hf::write_ftensor(path, hf::Tensor<float>({static_cast<std::uint64_t>(m.k), m.d}, m.centroids));
}

json model_json(const hf::ClusterModel& m) {
  return {{"k", m.k},
          {"d", m.d},
          {"inertia", m.inertia},
          {"per_cluster_count", m.per_cluster_count},
          {"per_cluster_variance", m.per_cluster_variance}};
}

void write_text(const std::string& path, const std::string& text) {
  hf::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::string> read_lines(const std::string& path) {
  const auto bytes = hf::read_file_bytes(path);
  std::vector<std::string> lines;
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

hf::EmbeddingSet load_embeddings(const std::string& path, const std::string& tag) {
  auto t = hf::read_ftensor_as<float>(path);
  hf::require(t.ndim() == 2, hf::Errc::dimension_mismatch, "embeddings must be [n, d]: " + path);
  return hf::EmbeddingSet(t.dim(0), t.dim(1), std::move(t.data), tag);
}

hf::EquivalenceGroups parse_groups(const std::string& spec) {
  hf::EquivalenceGroups groups;
  std::istringstream outer(spec);
  for (std::string group; std::getline(outer, group, ';');) {
    std::vector<std::int32_t> ids;
    std::istringstream inner(group);
    for (std::string id; std::getline(inner, id, ',');) {
      if (id.empty()) continue;
      try {
        ids.push_back(static_cast<std::int32_t>(std::stol(id)));
      } catch (const std::exception&) {
        hf::fail(hf::Errc::invalid_argument, "bad class id in --groups: " + id);
      }
    }
    if (!ids.empty()) groups.push_back(std::move(ids));
  }
  return groups;
}

std::string moments_check(double mu, double var, const std::vector<float>& x, bool& pass) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (float v : x) ss += (v - mean) * (v - mean);
  const double sample_var = ss / (n - 1.0);
  const double mean_tol = std::max(0.02, 4.0 * std::sqrt(var / n));
  pass = std::abs(mean - mu) <= mean_tol && std::abs(sample_var - var) <= 0.1 * var;
  json out = {{"mean", mean},           {"variance", sample_var}, {"target_mean", mu},
              {"target_variance", var}, {"mean_tolerance", mean_tol},
              {"variance_tolerance", 0.1 * var}, {"pass", pass}};
  return out.dump();
}

hf::eval::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"histoforge: heterogeneous tissue synthesis toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.add_flag("--json", g_json, "Machine-readable JSON output");
  std::function<void()> run;

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Tissue clustering over patch embeddings");
  cluster->require_subcommand(1);

  struct {
    std::string features, out, labels_out, stats_out;
    int k = 100, iters = 100, check_every = 10;
    std::size_t batch = 1024;
    std::uint64_t seed = 0;
  } fit;
  auto* fit_cmd = cluster->add_subcommand("fit", "Mini-batch k-means with k-means++ init");
  fit_cmd->add_option("--features", fit.features, "FTensor f32 [n, d]")->required();
  fit_cmd->add_option("--k", fit.k, "Cluster count")->capture_default_str();
  fit_cmd->add_option("--iters", fit.iters, "Iterations")->capture_default_str();
  fit_cmd->add_option("--batch-size", fit.batch, "Rows per mini-batch, 0 for full batch")
      ->capture_default_str();
  fit_cmd->add_option("--check-every", fit.check_every)->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "Centroids FTensor f32 [k, d]")->required();
  fit_cmd->add_option("--labels-out", fit.labels_out, "Assignments FTensor i32 [n]");
  fit_cmd->add_option("--stats-out", fit.stats_out, "Per-cluster statistics JSON");
  fit_cmd->callback([&] {
    run = [&] {
      const auto f = load_features(fit.features);
      hf::KMeansOptions opt;
      opt.k = fit.k;
      opt.iters = fit.iters;
      opt.batch_size = fit.batch;
      opt.seed = fit.seed;
      opt.check_every = fit.check_every;
      const auto model = hf::fit_kmeans(f, opt);
      write_centroids(fit.out, model);
      if (!fit.labels_out.empty()) write_labels(fit.labels_out, hf::assign_nearest(f, model));
      if (!fit.stats_out.empty()) {
        const auto text = model_json(model).dump(2);
        write_text(fit.stats_out, text);
      }
      emit({{"command", "cluster fit"}, {"n", f.n}, {"d", f.d}, {"k", model.k},
            {"inertia", model.inertia}, {"out", fit.out}});
    };
  });

  struct {
    std::string features, centroids, out;
    std::size_t chunk = 1000;
  } assign;
  auto* assign_cmd = cluster->add_subcommand("assign", "Nearest-centroid assignment");
  assign_cmd->add_option("--features", assign.features)->required();
  assign_cmd->add_option("--centroids", assign.centroids)->required();
  assign_cmd->add_option("--chunk", assign.chunk)->capture_default_str();
  assign_cmd->add_option("--out", assign.out, "Labels FTensor i32 [n]")->required();
  assign_cmd->callback([&] {
    run = [&] {
      hf::require(assign.chunk > 0, hf::Errc::invalid_argument, "--chunk must be positive");
      const auto f = load_features(assign.features);
      int k = 0;
      auto centroids = load_centroids(assign.centroids, f.d, k);
      const auto model = hf::model_from_centroids(f, std::move(centroids), k);
      write_labels(assign.out, hf::assign_nearest(f, model, assign.chunk));
      emit({{"command", "cluster assign"}, {"n", f.n}, {"k", k}, {"inertia", model.inertia},
            {"out", assign.out}});
    };
  });

  struct {
    std::string features, centroids, labels, out, labels_out;
    double z = 1.0;
    std::uint64_t seed = 0;
  } sub;
  auto* sub_cmd = cluster->add_subcommand("subsplit", "Split high-variance clusters in two");
  sub_cmd->add_option("--features", sub.features)->required();
  sub_cmd->add_option("--centroids", sub.centroids)->required();
  sub_cmd->add_option("--labels", sub.labels, "Existing assignments; recomputed when omitted");
  sub_cmd->add_option("--z", sub.z, "Split clusters above mean + z * std")->capture_default_str();
  sub_cmd->add_option("--seed", sub.seed)->capture_default_str();
  sub_cmd->add_option("--out", sub.out, "Refined centroids")->required();
  sub_cmd->add_option("--labels-out", sub.labels_out);
  sub_cmd->callback([&] {
    run = [&] {
      const auto f = load_features(sub.features);
      int k = 0;
      auto centroids = load_centroids(sub.centroids, f.d, k);
      std::vector<std::int32_t> labels;
      hf::ClusterModel model;
      if (sub.labels.empty()) {
        model = hf::model_from_centroids(f, std::move(centroids), k, sub.seed);
        labels = hf::assign_nearest(f, model);
      } else {
        labels = load_labels(sub.labels, f.n);
        model = hf::model_from_labels(f, std::move(centroids), k, labels, sub.seed);
      }
      const auto result = hf::subcluster_high_variance(f, labels, model, sub.z, sub.seed);
      write_centroids(sub.out, result.model);
      if (!sub.labels_out.empty()) write_labels(sub.labels_out, result.labels);
      emit({{"command", "cluster subsplit"}, {"k_before", k}, {"k_after", result.model.k},
            {"split", result.split}, {"skipped", result.skipped}, {"parent_of", result.parent_of}});
    };
  });

  struct {
    std::string features, centroids, labels, out;
    std::vector<int> scales = hf::kDefaultScales;
  } scales;
  auto* scales_cmd = cluster->add_subcommand("scales", "Merge base clusters into coarser scales");
  scales_cmd->add_option("--features", scales.features)->required();
  scales_cmd->add_option("--centroids", scales.centroids)->required();
  scales_cmd->add_option("--labels", scales.labels);
  scales_cmd->add_option("--scales", scales.scales, "Target cluster counts")
      ->delimiter(',')
      ->capture_default_str();
  scales_cmd->add_option("--out", scales.out, "ScaleHierarchy JSON")->required();
  scales_cmd->callback([&] {
    run = [&] {
      const auto f = load_features(scales.features);
      int k = 0;
      auto centroids = load_centroids(scales.centroids, f.d, k);
      const auto model =
          scales.labels.empty()
              ? hf::model_from_centroids(f, std::move(centroids), k)
              : hf::model_from_labels(f, std::move(centroids), k, load_labels(scales.labels, f.n));
      const auto h = hf::merge_to_scales(model, scales.scales);
      json levels = json::object();
      for (const auto& [s, ids] : h.levels) levels[std::to_string(s)] = ids;
      const auto text = json{{"base_K", h.base_k}, {"levels", levels}}.dump(2);
      write_text(scales.out, text);
      emit({{"command", "cluster scales"}, {"base_K", h.base_k}, {"scales", scales.scales},
            {"out", scales.out}});
    };
  });

  struct {
    std::string features, positions, wsi_ids, out, method = "diversity";
    std::size_t per_wsi = 1000;
    double w_spatial = 0.3, w_feature = 0.7;
    std::uint64_t seed = 0;
  } div;
  auto* div_cmd = cluster->add_subcommand("diversity", "Per-slide patch subsampling");
  div_cmd->add_option("--features", div.features)->required();
  div_cmd->add_option("--positions", div.positions, "FTensor i32 [n, 2] grid coordinates");
  div_cmd->add_option("--wsi-ids", div.wsi_ids, "Text file, one slide id per row");
  div_cmd->add_option("--n", div.per_wsi, "Patches kept per slide")->capture_default_str();
  div_cmd->add_option("--method", div.method)
      ->check(CLI::IsMember({"diversity", "random"}))
      ->capture_default_str();
  div_cmd->add_option("--w-spatial", div.w_spatial)->capture_default_str();
  div_cmd->add_option("--w-feature", div.w_feature)->capture_default_str();
  div_cmd->add_option("--seed", div.seed)->capture_default_str();
  div_cmd->add_option("--out", div.out, "Selected row indices FTensor i32 [m]")->required();
  div_cmd->callback([&] {
    run = [&] {
      const auto f = load_features(div.features, div.positions.empty()
                                                     ? std::nullopt
                                                     : std::optional<std::string>(div.positions));
      std::map<std::string, std::vector<std::size_t>> groups;
      if (div.wsi_ids.empty()) {
        auto& all = groups[""];
        all.resize(f.n);
        std::iota(all.begin(), all.end(), 0);
      } else {
        const auto ids = read_lines(div.wsi_ids);
        hf::require(ids.size() == f.n, hf::Errc::dimension_mismatch,
                    "--wsi-ids must list one id per feature row");
        for (std::size_t i = 0; i < f.n; ++i) groups[ids[i]].push_back(i);
      }
      std::vector<std::int32_t> selected;
      std::uint64_t g = 0;
      for (const auto& [wsi, rows] : groups) {
        const auto count = std::min(div.per_wsi, rows.size());
        const auto seed = hf::mix_seed(div.seed, g++);
        std::vector<std::size_t> picked;
        if (div.method == "random") {
          picked = hf::random_sample(rows.size(), count, seed);
        } else {
          picked = hf::diversity_sample(f.subset(rows), count, div.w_spatial, div.w_feature, seed);
        }
        for (auto p : picked) selected.push_back(static_cast<std::int32_t>(rows[p]));
      }
      write_labels(div.out, selected);
      emit({{"command", "cluster diversity"}, {"method", div.method}, {"slides", groups.size()},
            {"selected", selected.size()}, {"out", div.out}});
    };
  });

  // map
  auto* map_cmd = app.add_subcommand("map", "Semantic map utilities");
  map_cmd->require_subcommand(1);
  struct {
    std::string map, out;
    std::optional<int> classes;
    int region = hf::kDefaultRegionSize, stride = hf::kDefaultRegionStride;
  } ent;
  auto* ent_cmd = map_cmd->add_subcommand("entropy", "Sliding-window label entropy");
  ent_cmd->add_option("--map", ent.map, "Label map: FTensor i32 [H, W] or indexed PNG")->required();
  ent_cmd->add_option("--num-classes", ent.classes);
  ent_cmd->add_option("--region-size", ent.region)->capture_default_str();
  ent_cmd->add_option("--stride", ent.stride)->capture_default_str();
  ent_cmd->add_option("--out", ent.out, "EntropyMap FTensor f32 [rows, cols]");
  ent_cmd->callback([&] {
    run = [&] {
      const auto m = hf::load_semantic_map(ent.map, ent.classes);
      const auto e = hf::entropy_map(m, ent.region, ent.stride);
      if (!ent.out.empty()) hf::write_ftensor(ent.out, e.to_tensor());
      const auto max = e.values.empty() ? 0.0 : *std::max_element(e.values.begin(), e.values.end());
      emit({{"command", "map entropy"}, {"rows", e.rows}, {"cols", e.cols}, {"mean", e.mean()},
            {"max", max}});
    };
  });

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Patch sampling");
  sample_cmd->require_subcommand(1);
  struct {
    std::string manifest;
    std::optional<int> classes;
    int background = 0;
    int count = 1;
    hf::SamplerConfig cfg;
  } het;
  auto* het_cmd = sample_cmd->add_subcommand("hetero", "Entropy-driven heterogeneous sampling");
  het_cmd->add_option("--manifest", het.manifest)->required();
  het_cmd->add_option("--num-classes", het.classes);
  het_cmd->add_option("--background", het.background, "Background label")->capture_default_str();
  het_cmd->add_option("--tau-entropy", het.cfg.tau_entropy)->capture_default_str();
  het_cmd->add_option("--tau-coverage", het.cfg.tau_coverage)->capture_default_str();
  het_cmd->add_option("--r-min", het.cfg.r_min)->capture_default_str();
  het_cmd->add_option("--r-max", het.cfg.r_max)->capture_default_str();
  het_cmd->add_option("--min-classes", het.cfg.min_classes)->capture_default_str();
  het_cmd->add_option("--max-tries", het.cfg.max_tries)->capture_default_str();
  het_cmd->add_option("--relax-factor", het.cfg.relax_factor)->capture_default_str();
  het_cmd->add_option("--relax-rounds", het.cfg.relax_rounds)->capture_default_str();
  het_cmd->add_option("--region-size", het.cfg.region_size)->capture_default_str();
  het_cmd->add_option("--stride", het.cfg.stride)->capture_default_str();
  het_cmd->add_option("--count", het.count, "Independent draws")->capture_default_str();
  het_cmd->add_option("--seed", het.cfg.seed)->capture_default_str();
  het_cmd->callback([&] {
    run = [&] {
      hf::require(het.count >= 1, hf::Errc::invalid_argument, "--count must be positive");
      const auto data = hf::load_patch_dataset(het.manifest, het.classes, het.background);
      json picks = json::array();
      for (int i = 0; i < het.count; ++i) {
        auto cfg = het.cfg;
        cfg.seed = het.count == 1 ? het.cfg.seed : hf::mix_seed(het.cfg.seed, i);
        const auto c = hf::sample_heterogeneous(data, cfg);
        picks.push_back({{"patch_id", c.patch_id},
                         {"mean_entropy", c.mean_entropy},
                         {"tissue_ratio", c.tissue_ratio},
                         {"classes", c.present_classes},
                         {"relaxation_round", c.relaxation_round},
                         {"exhaustive_scan", c.from_exhaustive_scan}});
      }
      if (het.count == 1) {
        auto out = picks[0];
        out["command"] = "sample hetero";
        emit(out);
      } else {
        emit({{"command", "sample hetero"}, {"candidates", picks}});
      }
    };
  });

  // cond
  auto* cond_cmd = app.add_subcommand("cond", "Conditioning tensors");
  cond_cmd->require_subcommand(1);
  struct {
    std::string patch, map, out, records, patch_id;
    std::optional<int> classes;
    std::optional<int> background;
    hf::SamplerConfig cfg;
  } build;
  auto* build_cmd = cond_cmd->add_subcommand("build", "Semantic planes plus per-class RGB crops");
  build_cmd->add_option("--patch", build.patch, "RGB PNG")->required();
  build_cmd->add_option("--map", build.map, "Label map matching the patch")->required();
  build_cmd->add_option("--num-classes", build.classes);
  build_cmd->add_option("--background", build.background);
  build_cmd->add_option("--d-min", build.cfg.d_min)->capture_default_str();
  build_cmd->add_option("--d-max", build.cfg.d_max)->capture_default_str();
  build_cmd->add_option("--brightness-jitter", build.cfg.brightness_jitter)->capture_default_str();
  build_cmd->add_option("--patch-id", build.patch_id);
  build_cmd->add_option("--seed", build.cfg.seed)->capture_default_str();
  build_cmd->add_option("--out", build.out, "FTensor f32 [4K, H, W]")->required();
  build_cmd->add_option("--records", build.records, "Crop record sidecar (default: <out>.json)");
  build_cmd->callback([&] {
    run = [&] {
      const auto patch = hf::read_png_rgb(build.patch);
      const auto map = hf::load_semantic_map(build.map, build.classes, build.background);
      const auto cond = hf::build_condition(patch, map, build.cfg, build.cfg.seed, build.patch_id);
      hf::write_ftensor(build.out, cond.planes);
      auto records = build.records;
      if (records.empty()) records = std::filesystem::path(build.out).replace_extension(".json").string();
      const auto text = hf::crop_records_json(cond);
      write_text(records, text);
      int crops = 0;
      for (const auto& r : cond.crop_records) crops += r.has_value();
      emit({{"command", "cond build"}, {"channels", cond.channels()}, {"height", cond.height},
            {"width", cond.width}, {"crops", crops}, {"out", build.out}, {"records", records}});
    };
  });

  struct {
    std::string cond, out;
    int factor = 4;
  } down;
  auto* down_cmd = cond_cmd->add_subcommand("downsample", "Mean-pool to latent resolution");
  down_cmd->add_option("--cond", down.cond, "FTensor f32 [4K, H, W]")->required();
  down_cmd->add_option("--factor", down.factor)->capture_default_str();
  down_cmd->add_option("--out", down.out)->required();
  down_cmd->callback([&] {
    run = [&] {
      const auto cond = hf::condition_from_tensor(hf::read_ftensor_as<float>(down.cond));
      const auto latent = hf::downsample_condition(cond, down.factor);
      hf::write_ftensor(down.out, latent.data);
      emit({{"command", "cond downsample"}, {"channels", latent.channels},
            {"height", latent.height}, {"width", latent.width}, {"out", down.out}});
    };
  });

  // diffuse
  auto* diffuse_cmd = app.add_subcommand("diffuse", "Diffusion process numerics");
  diffuse_cmd->require_subcommand(1);
  struct {
    double beta_start = hf::kDefaultBetaStart, beta_end = hf::kDefaultBetaEnd;
    int steps = hf::kDefaultSteps;
    std::string out;
  } sched;
  auto* sched_cmd = diffuse_cmd->add_subcommand("schedule", "Export the linear noise schedule");
  sched_cmd->add_option("--beta-start", sched.beta_start)->capture_default_str();
  sched_cmd->add_option("--beta-end", sched.beta_end)->capture_default_str();
  sched_cmd->add_option("--steps", sched.steps)->capture_default_str();
  sched_cmd->add_option("--out", sched.out, "FTensor f32 [3, T]: beta, alpha, alpha_bar")->required();
  sched_cmd->callback([&] {
    run = [&] {
      const auto s = hf::linear_schedule(sched.beta_start, sched.beta_end, sched.steps);
      hf::write_ftensor(sched.out, s.to_tensor());
      emit({{"command", "diffuse schedule"}, {"steps", s.steps()},
            {"alpha_bar_T", s.alpha_bar(s.steps())}, {"out", sched.out}});
    };
  });

  struct {
    double mu = 0.0, var = 1.0;
    double beta_start = hf::kDefaultBetaStart, beta_end = hf::kDefaultBetaEnd;
    int steps = hf::kDefaultSteps;
    std::size_t n = 10000;
    std::uint64_t seed = 0;
  } check;
  bool check_pass = true;
  auto* check_cmd =
      diffuse_cmd->add_subcommand("check", "Sample a Gaussian target through the exact denoiser");
  check_cmd->add_option("--mu", check.mu)->capture_default_str();
  check_cmd->add_option("--var", check.var)->check(CLI::PositiveNumber)->capture_default_str();
  check_cmd->add_option("--t", check.steps, "Diffusion steps T")->capture_default_str();
  check_cmd->add_option("--n", check.n, "Samples")->check(CLI::Range(2ul, 100000000ul))->capture_default_str();
  check_cmd->add_option("--beta-start", check.beta_start)->capture_default_str();
  check_cmd->add_option("--beta-end", check.beta_end)->capture_default_str();
  check_cmd->add_option("--seed", check.seed)->capture_default_str();
  check_cmd->callback([&] {
    run = [&] {
      const auto s = hf::linear_schedule(check.beta_start, check.beta_end, check.steps);
      const auto denoiser = hf::analytic_gaussian_denoiser({check.mu}, {check.var}, s);
      hf::Rng rng(check.seed);
      const auto x = hf::sample(denoiser, s, check.n, nullptr, rng);
      auto out = json::parse(moments_check(check.mu, check.var, x, check_pass));
      out["command"] = "diffuse check";
      out["n"] = check.n;
      out["steps"] = check.steps;
      emit(out);
    };
  });

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Evaluation metrics");
  metrics_cmd->require_subcommand(1);
  struct {
    std::string real, gen, tag;
    int k = 3;
  } emb;
  auto* fd_cmd = metrics_cmd->add_subcommand("fd", "Frechet distance between embedding sets");
  auto* pr_cmd = metrics_cmd->add_subcommand("pr", "k-NN precision, recall and F1");
  for (auto* c : {fd_cmd, pr_cmd}) {
    c->add_option("--real", emb.real, "FTensor f32 [n, d]")->required();
    c->add_option("--gen", emb.gen, "FTensor f32 [m, d]")->required();
    c->add_option("--encoder-tag", emb.tag);
  }
  pr_cmd->add_option("--k", emb.k)->capture_default_str();
  fd_cmd->callback([&] {
    run = [&] {
      const auto a = load_embeddings(emb.real, emb.tag);
      const auto b = load_embeddings(emb.gen, emb.tag);
      emit({{"metric", "fd"}, {"value", hf::frechet_distance(a, b)}, {"n_real", a.n},
            {"n_gen", b.n}, {"encoder_tag", emb.tag}});
    };
  });
  pr_cmd->callback([&] {
    run = [&] {
      const auto a = load_embeddings(emb.real, emb.tag);
      const auto b = load_embeddings(emb.gen, emb.tag);
      const auto pr = hf::precision_recall_f1(a, b, emb.k);
      emit({{"metric", "precision_recall_f1"},
            {"value", {{"precision", pr.precision}, {"recall", pr.recall}, {"f1", pr.f1}}},
            {"k", emb.k}, {"n_real", a.n}, {"n_gen", b.n}, {"encoder_tag", emb.tag}});
    };
  });

  struct {
    std::string pred, gt;
    std::optional<int> classes;
    std::optional<int> class_id;
  } iou;
  auto* iou_cmd = metrics_cmd->add_subcommand("iou", "Per-class and mean IoU of two label maps");
  iou_cmd->add_option("--pred", iou.pred)->required();
  iou_cmd->add_option("--gt", iou.gt)->required();
  iou_cmd->add_option("--num-classes", iou.classes);
  iou_cmd->add_option("--class", iou.class_id, "Report a single class");
  iou_cmd->callback([&] {
    run = [&] {
      auto pred = hf::load_semantic_map(iou.pred, iou.classes);
      auto gt = hf::load_semantic_map(iou.gt, iou.classes);
      const int k = std::max(pred.num_classes(), gt.num_classes());
      pred = hf::load_semantic_map(iou.pred, k);
      gt = hf::load_semantic_map(iou.gt, k);
      if (iou.class_id) {
        const auto v = hf::iou(pred, gt, *iou.class_id);
        emit({{"metric", "iou"}, {"class", *iou.class_id},
              {"value", v ? json(*v) : json(nullptr)}});
        return;
      }
      const auto m = hf::mean_iou(pred, gt);
      json per = json::array();
      for (const auto& v : m.per_class) per.push_back(v ? json(*v) : json(nullptr));
      emit({{"metric", "mean_iou"}, {"value", m.mean}, {"per_class", per},
            {"classes_counted", m.classes_counted}});
    };
  });

  struct {
    std::string pred, truth, groups;
  } conf;
  auto* conf_cmd =
      metrics_cmd->add_subcommand("confusion", "Confusion matrix with equivalence groups");
  conf_cmd->add_option("--pred", conf.pred, "FTensor i32 [n]")->required();
  conf_cmd->add_option("--truth", conf.truth, "FTensor i32 [n]")->required();
  conf_cmd->add_option("--groups", conf.groups, "Equivalent ids, e.g. \"88,64,39,25;3,4\"");
  conf_cmd->callback([&] {
    run = [&] {
      const auto p = hf::read_ftensor_as<std::int32_t>(conf.pred);
      const auto t = hf::read_ftensor_as<std::int32_t>(conf.truth);
      const auto r = hf::confusion_with_equivalence(p.data, t.data, parse_groups(conf.groups));
      emit({{"metric", "confusion"}, {"value", r.accuracy}, {"correct", r.correct},
            {"total", r.total}, {"ids", r.ids}, {"matrix", r.matrix}});
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Blinded pathologist rating study");
  eval_cmd->require_subcommand(1);
  struct {
    std::string manifest, store, host = "127.0.0.1", static_dir;
    int port = 8080;
    bool balanced = false, show_dataset = false;
  } serve;
  auto* serve_cmd = eval_cmd->add_subcommand("serve", "Run the rating service");
  serve_cmd->add_option("--manifest", serve.manifest, "Study manifest JSON")->required();
  serve_cmd->add_option("--store", serve.store, "Session log directory")->required();
  serve_cmd->add_option("--port", serve.port)->capture_default_str();
  serve_cmd->add_option("--host", serve.host)->capture_default_str();
  serve_cmd->add_option("--static", serve.static_dir, "Directory served at /");
  serve_cmd->add_flag("--require-balanced", serve.balanced);
  serve_cmd->add_flag("--show-dataset", serve.show_dataset);
  serve_cmd->callback([&] {
    run = [&] {
      hf::eval::EvalService service(hf::eval::StudyManifest::load(serve.manifest, serve.balanced),
                                    serve.store, {serve.show_dataset, {}});
      hf::eval::ServerOptions opt;
      opt.host = serve.host;
      opt.port = serve.port;
      if (!serve.static_dir.empty()) opt.static_dir = serve.static_dir;
      hf::eval::HttpServer server(service, opt);
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      emit({{"command", "eval serve"}, {"host", serve.host}, {"port", port},
            {"items", service.manifest().size()}, {"sessions", service.session_ids().size()}});
      std::cout.flush();
      server.serve();
      g_server = nullptr;
    };
  });

  struct {
    std::string manifest, store, format = "json", out;
    std::optional<std::string> session, dataset, rater;
  } exp;
  auto* exp_cmd = eval_cmd->add_subcommand("export", "Export ratings with aggregates");
  exp_cmd->add_option("--manifest", exp.manifest)->required();
  exp_cmd->add_option("--store", exp.store)->required();
  exp_cmd->add_option("--format", exp.format)
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  exp_cmd->add_option("--session", exp.session);
  exp_cmd->add_option("--dataset", exp.dataset);
  exp_cmd->add_option("--rater", exp.rater);
  exp_cmd->add_option("--out", exp.out, "Output file (default stdout)");
  exp_cmd->callback([&] {
    run = [&] {
      hf::require(std::filesystem::is_directory(exp.store), hf::Errc::not_found,
                  "no session store at " + exp.store);
      const hf::eval::EvalService service(hf::eval::StudyManifest::load(exp.manifest), exp.store);
      const hf::eval::ExportFilter filter{exp.session, exp.dataset, exp.rater};
      const auto text = exp.format == "csv" ? service.export_csv(filter) : service.export_json(filter);
      if (exp.out.empty()) {
        std::cout << text;
        if (exp.format == "json") std::cout << '\n';
      } else {
        write_text(exp.out, text);
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run) run();
  } catch (const hf::Error& e) {
    std::cerr << json{{"error", hf::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return check_pass ? 0 : 1;
}
