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

#ifndef HISTOFORGE_SAMPLING_HPP
#define HISTOFORGE_SAMPLING_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "histoforge/clustering.hpp"
#include "histoforge/error.hpp"
#include "histoforge/grid.hpp"

namespace histoforge {

struct SamplerConfig {
  double r_min = 0.2;
  double r_max = 0.8;
  int d_min = 50;
  int d_max = 200;
  double tau_entropy = 0.3;  // nats
  /// Minimum pixel fraction for every present non-background class.
  double tau_coverage = 0.05;
  int max_tries = 100;
  double relax_factor = 0.5;
  int relax_rounds = 5;
  double ratio_widen = 0.05;
  int region_size = kDefaultRegionSize;
  int stride = kDefaultRegionStride;
  int min_classes = 2;
  /// Channel-uniform brightness jitter amplitude for crops (0 disables).
  double brightness_jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PatchRecord {
  std::string patch_id;
  std::filesystem::path image_path;
  std::filesystem::path map_path;
  SemanticMap map;
  std::optional<std::string> wsi_id;
  std::optional<std::string> dataset;
};

struct PatchDataset {
  std::vector<PatchRecord> patches;
};

struct Candidate {
  std::string patch_id;
  std::size_t index = 0;
  double mean_entropy = 0.0;
  double tissue_ratio = 0.0;
  std::vector<std::int32_t> present_classes;  // non-background
  int relaxation_round = 0;                   // 0 = original thresholds
  bool from_exhaustive_scan = false;
};

struct SamplingThresholds {
  double tau_entropy = 0.0;
  double r_min = 0.0;
  double r_max = 1.0;
};

/// Thrown when neither the relaxation rounds nor the final exhaustive scan
/// found a qualifying patch.
class NoHeterogeneousPatch : public Error {
 public:
  explicit NoHeterogeneousPatch(const SamplingThresholds& final_thresholds);
  const SamplingThresholds& thresholds() const { return thresholds_; }

 private:
  SamplingThresholds thresholds_;
};

struct PatchStats {
  double mean_entropy = 0.0;
  double tissue_ratio = 0.0;
  std::vector<std::int32_t> present_classes;  // non-background
  bool coverage_ok = false;
};

PatchStats evaluate_patch(const SemanticMap& map, const SamplerConfig& cfg);

bool qualifies(const PatchStats& stats, const SamplingThresholds& thresholds,
               const SamplerConfig& cfg);

/// Thresholds after `round` relaxation steps.
SamplingThresholds relaxed_thresholds(const SamplerConfig& cfg, int round);

/// Entropy-driven heterogeneous patch selection with bounded relaxation and a
/// final exhaustive scan.
Candidate sample_heterogeneous(const PatchDataset& dataset, const SamplerConfig& cfg);

/// At least min_classes distinct non-background classes present.
bool guarantee_min_classes(const SemanticMap& map, int min_classes = 2);

/// Every present non-background class covers at least tau_coverage of the map.
bool meets_coverage(const SemanticMap& map, double tau_coverage);

/// round-half-up(d_base * (1 + alpha * complexity)) clamped to [d_min, d_max].
int adaptive_crop_size(double d_base, double alpha, double complexity, int d_min = 50,
                       int d_max = 200);

/// Variance of the cluster relative to the largest cluster variance.
double complexity_score(const ClusterModel& model, int cluster_id);

/// round-half-up(k_min + (k_max - k_min) * min(1, t / warmup)).
int curriculum_k(std::uint64_t step, int k_min, int k_max, std::uint64_t warmup);

/// Ties go up: floor(x + 0.5).
std::int64_t round_half_up(double x);

}  // namespace histoforge

#endif  // HISTOFORGE_SAMPLING_HPP
