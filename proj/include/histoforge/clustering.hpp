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

#ifndef HISTOFORGE_CLUSTERING_HPP
#define HISTOFORGE_CLUSTERING_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "histoforge/grid.hpp"

namespace histoforge {

/// n patch embeddings of dimension d, row-major, with optional patch-grid
/// coordinates (row, col) and slide ids per row.
struct FeatureMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;
  std::optional<std::vector<std::int32_t>> positions;  // n x 2
  std::optional<std::vector<std::string>> wsi_ids;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dims, std::vector<float> values);

  std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }

  /// Throws on empty shape, size mismatch, or non-finite entries.
  void validate() const;

  /// Copy of the selected rows (positions and ids follow).
  FeatureMatrix subset(std::span<const std::size_t> rows) const;
};

struct ClusterModel {
  int k = 0;
  std::size_t d = 0;
  std::vector<float> centroids;  // k x d
  std::vector<std::uint64_t> per_cluster_count;
  std::vector<double> per_cluster_variance;  // mean squared distance to centroid
  std::uint64_t seed = 0;
  double inertia = 0.0;

  std::span<const float> centroid(int c) const {
    return {centroids.data() + static_cast<std::size_t>(c) * d, d};
  }
};

struct KMeansOptions {
  int k = 100;
  int iters = 100;
  /// Rows per mini-batch; 0 or >= n runs full-batch (Lloyd) iterations.
  std::size_t batch_size = 1024;
  std::uint64_t seed = 0;
  /// Full-batch inertia is evaluated every `check_every` iterations; a block
  /// of mini-batch updates that raised it is rolled back.
  int check_every = 10;
  /// Called after each evaluation with (iteration, accepted centroids).
  std::function<void(int, std::span<const float>)> on_checkpoint;
};

double squared_l2(std::span<const float> a, std::span<const float> b);

ClusterModel fit_kmeans(const FeatureMatrix& features, const KMeansOptions& options);

/// Nearest centroid per row (squared L2, lowest id wins ties), processed in
/// chunks of `chunk` rows. Results do not depend on the chunk size.
std::vector<std::int32_t> assign_nearest(const FeatureMatrix& features, const ClusterModel& model,
                                         std::size_t chunk = 1000);

/// Sum over rows of the squared distance to the nearest centroid.
double full_inertia(const FeatureMatrix& features, std::span<const float> centroids, int k);

/// Rebuilds count/variance statistics for fixed centroids against `features`.
ClusterModel model_from_centroids(const FeatureMatrix& features, std::vector<float> centroids,
                                  int k, std::uint64_t seed = 0);

/// Model statistics for an explicit labelling (no reassignment).
ClusterModel model_from_labels(const FeatureMatrix& features, std::vector<float> centroids, int k,
                               std::span<const std::int32_t> labels, std::uint64_t seed = 0);

struct SubclusterResult {
  ClusterModel model;
  std::vector<std::int32_t> labels;
  /// parent_of[c] is the original cluster a (possibly new) id descends from.
  std::vector<std::int32_t> parent_of;
  std::vector<std::int32_t> split;
  /// Selected for splitting but left alone (fewer than two members, or the
  /// two-way split left a side empty).
  std::vector<std::int32_t> skipped;
};

/// Splits every cluster whose variance exceeds mean + z_threshold * std
/// (population std over clusters) into two with 2-means on its members. The
/// first half keeps the id; the second half gets the next free id.
SubclusterResult subcluster_high_variance(const FeatureMatrix& features,
                                          std::span<const std::int32_t> labels,
                                          const ClusterModel& model, double z_threshold = 1.0,
                                          std::uint64_t seed = 0);

/// Multi-granularity relabelings of the base clusters. levels[k][base_id] is
/// the merged id in [0, k).
struct ScaleHierarchy {
  int base_k = 0;
  std::map<int, std::vector<std::int32_t>> levels;
};

inline const std::vector<int> kDefaultScales = {5, 10, 20, 50, 100};

/// Count-weighted average-linkage agglomeration of the centroids (squared L2).
ScaleHierarchy merge_to_scales(const ClusterModel& model, std::span<const int> ks);

/// Greedy farthest-point selection under
///   D = w_spatial * ds / max(ds) + w_feature * df / max(df)
/// with squared L2 distances normalized by their maximum over all pairs. The
/// first pick is uniform from the seed.
std::vector<std::size_t> diversity_sample(const FeatureMatrix& features, std::size_t count,
                                          double w_spatial = 0.3, double w_feature = 0.7,
                                          std::uint64_t seed = 0);

/// Uniform sample without replacement, in draw order.
std::vector<std::size_t> random_sample(std::size_t n, std::size_t count, std::uint64_t seed);

/// Label map at patch-grid resolution (one label per grid position).
SemanticMap build_slide_map(int rows, int cols, std::span<const std::int32_t> labels,
                            std::optional<int> num_classes = std::nullopt,
                            std::optional<std::int32_t> background_label = std::nullopt);

}  // namespace histoforge

#endif  // HISTOFORGE_CLUSTERING_HPP
