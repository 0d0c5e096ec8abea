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

#ifndef HISTOFORGE_METRICS_HPP
#define HISTOFORGE_METRICS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "histoforge/grid.hpp"

namespace histoforge {

/// Embeddings produced by one encoder for one image population.
struct EmbeddingSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;  // n x d
  std::string encoder_tag;

  EmbeddingSet() = default;
  EmbeddingSet(std::size_t rows, std::size_t dims, std::vector<float> values, std::string tag = {});

  std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }
};

/// Frechet distance between Gaussians fitted to two sets (n - 1 covariance).
/// The matrix square root goes through the symmetric product
/// sqrt(Sigma_B) Sigma_A sqrt(Sigma_B); eigenvalues above -1e-6 * max are
/// clamped to zero, anything more negative is an error.
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// k-NN manifold precision/recall: a generated sample is "precise" when it
/// falls inside some real sample's k-th nearest-neighbour ball; recall swaps
/// the roles.
PrecisionRecall precision_recall_f1(const EmbeddingSet& real, const EmbeddingSet& gen, int k = 3);

/// Intersection over union for one class; nullopt when the class is absent
/// from both maps.
std::optional<double> iou(const SemanticMap& pred, const SemanticMap& gt, std::int32_t class_id);

struct MeanIou {
  double mean = 0.0;
  std::vector<std::optional<double>> per_class;
  int classes_counted = 0;
};

/// Mean over classes present in at least one of the maps.
MeanIou mean_iou(const SemanticMap& pred, const SemanticMap& gt);

/// Disjoint sets of class ids scored as interchangeable.
using EquivalenceGroups = std::vector<std::vector<std::int32_t>>;

struct ConfusionResult {
  std::vector<std::int32_t> ids;                   // collapsed ids, ascending
  std::vector<std::vector<std::uint64_t>> matrix;  // [truth][prediction]
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  double accuracy = 0.0;
};

/// Each group collapses to its smallest id before counting.
ConfusionResult confusion_with_equivalence(std::span<const std::int32_t> predictions,
                                           std::span<const std::int32_t> truth,
                                           const EquivalenceGroups& groups);

enum class Origin { real, synthetic };
std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view name);

/// One rater judgment, flattened with its (export-only) ground truth.
struct RatingRecord {
  std::string session_id;
  std::string item_id;
  std::string dataset;
  Origin origin = Origin::real;
  int quality = 0;
  int structure = 0;
  int nuclear = 0;
  std::optional<bool> hallucination;
  std::optional<bool> judged_real;
};

inline constexpr std::array<std::string_view, 3> kLikertCriteria = {"quality", "structure",
                                                                     "nuclear"};

struct LikertStat {
  std::string dataset;
  std::string criterion;
  Origin origin = Origin::real;
  double mean = 0.0;
  double sd = 0.0;  // sample SD; 0 when n < 2
  std::size_t n = 0;
  bool sd_defined = false;
};

/// Mean and sample SD per (dataset, criterion, origin); empty strata report n = 0.
std::vector<LikertStat> likert_aggregate(std::span<const RatingRecord> records);

struct DiscriminationResult {
  std::string dataset;
  /// [truth][judgment], index 0 = real, 1 = synthetic.
  std::array<std::array<std::uint64_t, 2>, 2> matrix{};
  std::uint64_t total = 0;
  std::uint64_t excluded = 0;  // records without a judgment
  double accuracy = 0.0;
};

std::vector<DiscriminationResult> discrimination_accuracy(std::span<const RatingRecord> records);

}  // namespace histoforge

#endif  // HISTOFORGE_METRICS_HPP
