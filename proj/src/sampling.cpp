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

#include "histoforge/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "histoforge/rng.hpp"

namespace histoforge {
namespace {

std::string describe(const SamplingThresholds& t) {
  std::ostringstream os;
  os << "no heterogeneous patch (final tau_entropy=" << t.tau_entropy << ", ratio bounds=["
     << t.r_min << ", " << t.r_max << "])";
  return os.str();
}

}  // namespace

void SamplerConfig::validate() const {
  require(0.0 <= r_min && r_min < r_max && r_max <= 1.0, Errc::invalid_argument,
          "need 0 <= r_min < r_max <= 1");
  require(0 < d_min && d_min <= d_max, Errc::invalid_argument, "need 0 < d_min <= d_max");
  require(max_tries >= 1, Errc::invalid_argument, "max_tries must be >= 1");
  require(0.0 < relax_factor && relax_factor < 1.0, Errc::invalid_argument,
          "relax_factor must lie in (0, 1)");
  require(relax_rounds >= 0, Errc::invalid_argument, "relax_rounds must be >= 0");
  require(tau_entropy >= 0.0, Errc::invalid_argument, "tau_entropy must be >= 0");
  require(tau_coverage >= 0.0 && tau_coverage <= 1.0, Errc::invalid_argument,
          "tau_coverage must lie in [0, 1]");
  require(region_size >= 1 && stride >= 1, Errc::invalid_argument,
          "region_size and stride must be >= 1");
  require(brightness_jitter >= 0.0 && brightness_jitter < 1.0, Errc::invalid_argument,
          "brightness_jitter must lie in [0, 1)");
}

NoHeterogeneousPatch::NoHeterogeneousPatch(const SamplingThresholds& final_thresholds)
    : Error(Errc::exhausted, describe(final_thresholds)), thresholds_(final_thresholds) {}

bool guarantee_min_classes(const SemanticMap& map, int min_classes) {
  auto present = map.present_classes();
  if (const auto bg = map.background_label())
    std::erase(present, *bg);
  return static_cast<int>(present.size()) >= min_classes;
}

bool meets_coverage(const SemanticMap& map, double tau_coverage) {
  const auto counts = map.histogram();
  const auto total = static_cast<double>(map.size());
  for (int k = 0; k < map.num_classes(); ++k) {
    if (counts[k] == 0 || map.background_label() == k) continue;
    if (static_cast<double>(counts[k]) / total < tau_coverage) return false;
  }
  return true;
}

PatchStats evaluate_patch(const SemanticMap& map, const SamplerConfig& cfg) {
  PatchStats s;
  const int region = std::min({cfg.region_size, map.height(), map.width()});
  s.mean_entropy = entropy_map(map, region, cfg.stride).mean();
  s.tissue_ratio = tissue_ratio(map);
  s.present_classes = map.present_classes();
  std::erase(s.present_classes, *map.background_label());
  s.coverage_ok = meets_coverage(map, cfg.tau_coverage);
  return s;
}

bool qualifies(const PatchStats& stats, const SamplingThresholds& t, const SamplerConfig& cfg) {
  return t.r_min <= stats.tissue_ratio && stats.tissue_ratio <= t.r_max &&
         stats.mean_entropy > t.tau_entropy &&
         static_cast<int>(stats.present_classes.size()) >= cfg.min_classes && stats.coverage_ok;
}

SamplingThresholds relaxed_thresholds(const SamplerConfig& cfg, int round) {
  SamplingThresholds t{cfg.tau_entropy, cfg.r_min, cfg.r_max};
  for (int i = 0; i < round; ++i) {
    t.tau_entropy *= cfg.relax_factor;
    t.r_min = std::max(0.0, t.r_min - cfg.ratio_widen);
    t.r_max = std::min(1.0, t.r_max + cfg.ratio_widen);
  }
  return t;
}

Candidate sample_heterogeneous(const PatchDataset& dataset, const SamplerConfig& cfg) {
  cfg.validate();
  require(!dataset.patches.empty(), Errc::invalid_argument, "dataset is empty");
  for (const auto& p : dataset.patches)
    require(p.map.background_label().has_value(), Errc::invalid_argument,
            "patch " + p.patch_id + " has no background label; tissue ratio is undefined");

  std::vector<std::optional<PatchStats>> cache(dataset.patches.size());
  auto stats_of = [&](std::size_t i) -> const PatchStats& {
    if (!cache[i]) cache[i] = evaluate_patch(dataset.patches[i].map, cfg);
    return *cache[i];
  };
  auto make_candidate = [&](std::size_t i, int round, bool exhaustive) {
    const auto& s = stats_of(i);
    return Candidate{dataset.patches[i].patch_id, i, s.mean_entropy, s.tissue_ratio,
                     s.present_classes, round, exhaustive};
  };

  Rng rng(cfg.seed);
  for (int round = 0; round <= cfg.relax_rounds; ++round) {
    const auto t = relaxed_thresholds(cfg, round);
    std::optional<std::size_t> best;
    for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
      const auto i = static_cast<std::size_t>(rng.uniform_index(dataset.patches.size()));
      const auto& s = stats_of(i);
      if (!qualifies(s, t, cfg)) continue;
      // Highest entropy wins; the earliest draw wins ties.
      if (!best || s.mean_entropy > stats_of(*best).mean_entropy) best = i;
    }
    if (best) return make_candidate(*best, round, false);
  }

  const auto final_t = relaxed_thresholds(cfg, cfg.relax_rounds);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < dataset.patches.size(); ++i) {
    const auto& s = stats_of(i);
    if (qualifies(s, final_t, cfg) && (!best || s.mean_entropy > stats_of(*best).mean_entropy))
      best = i;
  }
  if (best) return make_candidate(*best, cfg.relax_rounds, true);
  throw NoHeterogeneousPatch(final_t);
}

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

int adaptive_crop_size(double d_base, double alpha, double complexity, int d_min, int d_max) {
  require(d_base > 0.0, Errc::invalid_argument, "d_base must be positive");
  require(alpha >= 0.0, Errc::invalid_argument, "alpha must be non-negative");
  require(d_min <= d_max, Errc::invalid_argument, "d_min must not exceed d_max");
  const auto d = round_half_up(d_base * (1.0 + alpha * complexity));
  return static_cast<int>(std::clamp<std::int64_t>(d, d_min, d_max));
}

double complexity_score(const ClusterModel& model, int cluster_id) {
  require(cluster_id >= 0 && cluster_id < model.k &&
              static_cast<std::size_t>(cluster_id) < model.per_cluster_variance.size(),
          Errc::not_found, "unknown cluster id " + std::to_string(cluster_id));
  const double top =
      *std::max_element(model.per_cluster_variance.begin(), model.per_cluster_variance.end());
  if (top <= 0.0) return 0.0;
  return model.per_cluster_variance[cluster_id] / top;
}

int curriculum_k(std::uint64_t step, int k_min, int k_max, std::uint64_t warmup) {
  require(k_min <= k_max, Errc::invalid_argument, "k_min must not exceed k_max");
  require(warmup >= 1, Errc::invalid_argument, "warmup must be >= 1");
  const double progress =
      step >= warmup ? 1.0 : static_cast<double>(step) / static_cast<double>(warmup);
  return static_cast<int>(round_half_up(k_min + (k_max - k_min) * progress));
}

}  // namespace histoforge
