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

#include "histoforge/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "histoforge/error.hpp"
#include "histoforge/parallel.hpp"
#include "histoforge/rng.hpp"

namespace histoforge {
namespace {

struct Assignment {
  std::vector<std::int32_t> labels;
  std::vector<double> distances;
};

std::int32_t nearest(std::span<const float> x, std::span<const float> centroids, int k,
                     double* best_out) {
  const std::size_t d = x.size();
  std::int32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double dist = squared_l2(x, centroids.subspan(static_cast<std::size_t>(c) * d, d));
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  if (best_out) *best_out = best_d;
  return best;
}

Assignment assign_all(const FeatureMatrix& f, std::span<const float> centroids, int k) {
  Assignment a;
  a.labels.resize(f.n);
  a.distances.resize(f.n);
  parallel_for(f.n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      a.labels[i] = nearest(f.row(i), centroids, k, &a.distances[i]);
  });
  return a;
}

std::vector<float> kmeans_plus_plus(const FeatureMatrix& f, int k, Rng& rng) {
  const std::size_t d = f.d;
  std::vector<float> centroids(static_cast<std::size_t>(k) * d);
  std::vector<bool> chosen(f.n, false);
  std::vector<double> min_dist(f.n, std::numeric_limits<double>::infinity());

  std::size_t pick = rng.uniform_index(f.n);
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      const double total = std::accumulate(min_dist.begin(), min_dist.end(), 0.0);
      if (total > 0.0) {
        const double target = rng.uniform01() * total;
        double acc = 0.0;
        pick = f.n;
        for (std::size_t i = 0; i < f.n; ++i) {
          acc += min_dist[i];
          if (acc > target && min_dist[i] > 0.0) {
            pick = i;
            break;
          }
        }
        if (pick == f.n) {
          // Rounding left the target past the last positive weight.
          for (std::size_t i = f.n; i-- > 0;)
            if (min_dist[i] > 0.0) {
              pick = i;
              break;
            }
        }
      } else {
        // Every point coincides with a chosen centroid.
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < f.n; ++i)
          if (!chosen[i]) free.push_back(i);
        pick = free[rng.uniform_index(free.size())];
      }
    }
    chosen[pick] = true;
    const auto row = f.row(pick);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * d));
    const std::span<const float> centroid(centroids.data() + c * d, d);
    parallel_for(f.n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        min_dist[i] = std::min(min_dist[i], squared_l2(f.row(i), centroid));
    });
  }
  return centroids;
}

// Moves every empty centroid onto the point farthest from its own centroid,
// taking that point from a cluster with at least two members.
void reseed_empty(const FeatureMatrix& f, std::vector<float>& centroids, int k, Assignment& a) {
  std::vector<std::uint64_t> counts(k, 0);
  for (auto l : a.labels) ++counts[l];
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t far = f.n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < f.n; ++i) {
      if (counts[a.labels[i]] >= 2 && a.distances[i] > far_d) {
        far_d = a.distances[i];
        far = i;
      }
    }
    if (far == f.n) continue;
    const auto row = f.row(far);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * f.d));
    --counts[a.labels[far]];
    ++counts[c];
    a.labels[far] = c;
    a.distances[far] = 0.0;
  }
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dims, std::vector<float> values)
    : n(rows), d(dims), data(std::move(values)) {
  require(data.size() == n * d, Errc::dimension_mismatch, "feature buffer does not match n x d");
}

void FeatureMatrix::validate() const {
  require(n >= 1 && d >= 1, Errc::invalid_argument, "feature matrix must be non-empty");
  require(data.size() == n * d, Errc::dimension_mismatch, "feature buffer does not match n x d");
  for (float v : data) require(std::isfinite(v), Errc::numerical, "non-finite feature value");
  if (positions)
    require(positions->size() == 2 * n, Errc::dimension_mismatch, "positions must be n x 2");
  if (wsi_ids) require(wsi_ids->size() == n, Errc::dimension_mismatch, "wsi_ids must have n rows");
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
  FeatureMatrix out;
  out.n = rows.size();
  out.d = d;
  out.data.reserve(out.n * d);
  for (auto i : rows) {
    require(i < n, Errc::out_of_range, "subset row out of range");
    const auto r = row(i);
    out.data.insert(out.data.end(), r.begin(), r.end());
  }
  if (positions) {
    out.positions.emplace();
    for (auto i : rows) {
      out.positions->push_back((*positions)[2 * i]);
      out.positions->push_back((*positions)[2 * i + 1]);
    }
  }
  if (wsi_ids) {
    out.wsi_ids.emplace();
    for (auto i : rows) out.wsi_ids->push_back((*wsi_ids)[i]);
  }
  return out;
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += diff * diff;
  }
  return acc;
}

ClusterModel fit_kmeans(const FeatureMatrix& features, const KMeansOptions& options) {
  features.validate();
  const int k = options.k;
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  require(options.iters >= 1, Errc::invalid_argument, "iters must be >= 1");
  require(features.n >= static_cast<std::size_t>(k), Errc::invalid_argument,
          "fewer rows than clusters (n < K)");
  const int check_every = std::max(1, options.check_every);
  const std::size_t d = features.d;
  const bool full_batch = options.batch_size == 0 || options.batch_size >= features.n;

  Rng rng(options.seed);
  std::vector<float> centroids = kmeans_plus_plus(features, k, rng);
  std::vector<double> rates(k, 0.0);  // per-centroid mini-batch counts

  std::vector<float> best = centroids;
  std::vector<double> best_rates = rates;
  double best_inertia = std::numeric_limits<double>::infinity();

  auto checkpoint = [&](int iteration) {
    Assignment a = assign_all(features, centroids, k);
    reseed_empty(features, centroids, k, a);
    const double inertia = full_inertia(features, centroids, k);
    if (inertia <= best_inertia) {
      best_inertia = inertia;
      best = centroids;
      best_rates = rates;
    } else {
      centroids = best;
      rates = best_rates;
    }
    if (options.on_checkpoint) options.on_checkpoint(iteration, best);
  };

  checkpoint(0);
  std::vector<std::size_t> batch;
  std::vector<std::int32_t> batch_labels;
  for (int it = 1; it <= options.iters; ++it) {
    if (full_batch) {
      const Assignment a = assign_all(features, centroids, k);
      std::vector<double> sums(static_cast<std::size_t>(k) * d, 0.0);
      std::vector<std::uint64_t> counts(k, 0);
      for (std::size_t i = 0; i < features.n; ++i) {
        const auto row = features.row(i);
        const auto c = static_cast<std::size_t>(a.labels[i]);
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += row[j];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j)
          centroids[c * d + j] = static_cast<float>(sums[c * d + j] / static_cast<double>(counts[c]));
      }
    } else {
      batch.resize(options.batch_size);
      for (auto& i : batch) i = rng.uniform_index(features.n);
      batch_labels.resize(batch.size());
      parallel_for(batch.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b)
          batch_labels[b] = nearest(features.row(batch[b]), centroids, k, nullptr);
      });
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto c = static_cast<std::size_t>(batch_labels[b]);
        rates[c] += 1.0;
        const double eta = 1.0 / rates[c];
        const auto row = features.row(batch[b]);
        for (std::size_t j = 0; j < d; ++j) {
          float& v = centroids[c * d + j];
          v = static_cast<float>((1.0 - eta) * v + eta * row[j]);
        }
      }
    }
    if (it % check_every == 0 || it == options.iters) checkpoint(it);
  }

  ClusterModel model = model_from_centroids(features, std::move(best), k, options.seed);
  return model;
}

std::vector<std::int32_t> assign_nearest(const FeatureMatrix& features, const ClusterModel& model,
                                         std::size_t chunk) {
  require(features.d == model.d, Errc::dimension_mismatch,
          "feature dim " + std::to_string(features.d) + " != model dim " + std::to_string(model.d));
  require(chunk >= 1, Errc::invalid_argument, "chunk must be >= 1");
  std::vector<std::int32_t> labels(features.n);
  for (std::size_t start = 0; start < features.n; start += chunk) {
    const std::size_t stop = std::min(features.n, start + chunk);
    parallel_for(stop - start, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = start + begin; i < start + end; ++i)
        labels[i] = nearest(features.row(i), model.centroids, model.k, nullptr);
    });
  }
  return labels;
}

double full_inertia(const FeatureMatrix& features, std::span<const float> centroids, int k) {
  return sum(assign_all(features, centroids, k).distances);
}

ClusterModel model_from_labels(const FeatureMatrix& features, std::vector<float> centroids, int k,
                               std::span<const std::int32_t> labels, std::uint64_t seed) {
  require(centroids.size() == static_cast<std::size_t>(k) * features.d, Errc::dimension_mismatch,
          "centroid buffer does not match k x d");
  require(labels.size() == features.n, Errc::dimension_mismatch, "labels must have n entries");
  ClusterModel m;
  m.k = k;
  m.d = features.d;
  m.centroids = std::move(centroids);
  m.seed = seed;
  m.per_cluster_count.assign(k, 0);
  m.per_cluster_variance.assign(k, 0.0);
  for (std::size_t i = 0; i < features.n; ++i) {
    const auto c = labels[i];
    require(c >= 0 && c < k, Errc::out_of_range, "label outside model range");
    const double dist = squared_l2(features.row(i), m.centroid(c));
    ++m.per_cluster_count[c];
    m.per_cluster_variance[c] += dist;
    m.inertia += dist;
  }
  for (int c = 0; c < k; ++c)
    if (m.per_cluster_count[c] > 0)
      m.per_cluster_variance[c] /= static_cast<double>(m.per_cluster_count[c]);
  return m;
}

ClusterModel model_from_centroids(const FeatureMatrix& features, std::vector<float> centroids,
                                  int k, std::uint64_t seed) {
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  require(centroids.size() == static_cast<std::size_t>(k) * features.d, Errc::dimension_mismatch,
          "centroid buffer does not match k x d");
  const Assignment a = assign_all(features, centroids, k);
  return model_from_labels(features, std::move(centroids), k, a.labels, seed);
}

SubclusterResult subcluster_high_variance(const FeatureMatrix& features,
                                          std::span<const std::int32_t> labels,
                                          const ClusterModel& model, double z_threshold,
                                          std::uint64_t seed) {
  require(labels.size() == features.n, Errc::dimension_mismatch, "labels must have n entries");
  require(features.d == model.d, Errc::dimension_mismatch, "feature dim does not match model");
  for (auto l : labels)
    require(l >= 0 && l < model.k, Errc::out_of_range, "label inconsistent with model");

  const auto& var = model.per_cluster_variance;
  const double mean = std::accumulate(var.begin(), var.end(), 0.0) / model.k;
  double sq = 0.0;
  for (double v : var) sq += (v - mean) * (v - mean);
  const double stddev = std::sqrt(sq / model.k);
  const double threshold = mean + z_threshold * stddev;

  SubclusterResult out;
  out.labels.assign(labels.begin(), labels.end());
  std::vector<float> centroids = model.centroids;
  out.parent_of.resize(model.k);
  std::iota(out.parent_of.begin(), out.parent_of.end(), 0);
  int next_id = model.k;

  for (int c = 0; c < model.k; ++c) {
    if (!(var[c] > threshold)) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < features.n; ++i)
      if (labels[i] == c) members.push_back(i);
    if (members.size() < 2) {
      out.skipped.push_back(c);
      continue;
    }
    const FeatureMatrix sub = features.subset(members);
    KMeansOptions opts;
    opts.k = 2;
    opts.iters = 50;
    opts.batch_size = 0;
    opts.seed = mix_seed(seed, static_cast<std::uint64_t>(c));
    const ClusterModel halves = fit_kmeans(sub, opts);
    if (halves.per_cluster_count[0] == 0 || halves.per_cluster_count[1] == 0) {
      out.skipped.push_back(c);
      continue;
    }
    const auto sub_labels = assign_nearest(sub, halves);
    const auto first = halves.centroid(0);
    const auto second = halves.centroid(1);
    std::copy(first.begin(), first.end(),
              centroids.begin() + static_cast<std::ptrdiff_t>(c * model.d));
    centroids.insert(centroids.end(), second.begin(), second.end());
    for (std::size_t m = 0; m < members.size(); ++m)
      if (sub_labels[m] == 1) out.labels[members[m]] = next_id;
    out.parent_of.push_back(c);
    out.split.push_back(c);
    ++next_id;
  }
  out.model = model_from_labels(features, std::move(centroids), next_id, out.labels, model.seed);
  return out;
}

ScaleHierarchy merge_to_scales(const ClusterModel& model, std::span<const int> ks) {
  require(!ks.empty(), Errc::invalid_argument, "merge_to_scales: empty scale list");
  require(std::is_sorted(ks.begin(), ks.end()), Errc::invalid_argument,
          "merge_to_scales: scales must be ascending");
  require(ks.front() >= 1, Errc::invalid_argument, "merge_to_scales: scales must be >= 1");
  require(ks.back() <= model.k, Errc::out_of_range, "merge_to_scales: scale exceeds base K");

  const int k = model.k;
  std::vector<double> weight(k);
  for (int c = 0; c < k; ++c)
    weight[c] = model.per_cluster_count.empty() || model.per_cluster_count[c] == 0
                    ? 1.0
                    : static_cast<double>(model.per_cluster_count[c]);
  std::vector<double> dist(static_cast<std::size_t>(k) * k, 0.0);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      dist[a * k + b] = dist[b * k + a] = squared_l2(model.centroid(a), model.centroid(b));

  // owner[base] is the representative (lowest base id) of its current group.
  std::vector<int> owner(k);
  std::iota(owner.begin(), owner.end(), 0);
  std::vector<bool> active(k, true);

  ScaleHierarchy out;
  out.base_k = k;
  auto record = [&](int level) {
    std::vector<int> reps;
    for (int c = 0; c < k; ++c)
      if (active[c]) reps.push_back(c);
    std::vector<std::int32_t> labels(k);
    for (int c = 0; c < k; ++c) {
      const auto it = std::lower_bound(reps.begin(), reps.end(), owner[c]);
      labels[c] = static_cast<std::int32_t>(it - reps.begin());
    }
    out.levels[level] = std::move(labels);
  };

  int groups = k;
  if (std::binary_search(ks.begin(), ks.end(), groups)) record(groups);
  while (groups > ks.front()) {
    int best_a = -1;
    int best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a) {
      if (!active[a]) continue;
      for (int b = a + 1; b < k; ++b) {
        if (!active[b]) continue;
        if (dist[a * k + b] < best_d) {
          best_d = dist[a * k + b];
          best_a = a;
          best_b = b;
        }
      }
    }
    const double wa = weight[best_a];
    const double wb = weight[best_b];
    for (int c = 0; c < k; ++c) {
      if (!active[c] || c == best_a || c == best_b) continue;
      const double merged = (wa * dist[best_a * k + c] + wb * dist[best_b * k + c]) / (wa + wb);
      dist[best_a * k + c] = dist[c * k + best_a] = merged;
    }
    weight[best_a] = wa + wb;
    active[best_b] = false;
    for (auto& o : owner)
      if (o == best_b) o = best_a;
    --groups;
    if (std::binary_search(ks.begin(), ks.end(), groups)) record(groups);
  }
  return out;
}

std::vector<std::size_t> diversity_sample(const FeatureMatrix& features, std::size_t count,
                                          double w_spatial, double w_feature, std::uint64_t seed) {
  features.validate();
  require(features.positions.has_value(), Errc::invalid_argument,
          "diversity_sample requires patch positions");
  require(count <= features.n, Errc::out_of_range, "requested more samples than rows");
  require(w_spatial >= 0.0 && w_feature >= 0.0 && std::abs(w_spatial + w_feature - 1.0) <= 1e-9,
          Errc::invalid_argument, "weights must be non-negative and sum to 1");
  if (count == 0) return {};

  const auto& pos = *features.positions;
  const std::size_t n = features.n;
  auto spatial = [&](std::size_t i, std::size_t j) {
    const double dr = pos[2 * i] - pos[2 * j];
    const double dc = pos[2 * i + 1] - pos[2 * j + 1];
    return dr * dr + dc * dc;
  };
  auto feature = [&](std::size_t i, std::size_t j) { return squared_l2(features.row(i), features.row(j)); };

  std::vector<double> row_max_s(n, 0.0);
  std::vector<double> row_max_f(n, 0.0);
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          for (std::size_t j = i + 1; j < n; ++j) {
            if (w_spatial > 0.0) row_max_s[i] = std::max(row_max_s[i], spatial(i, j));
            if (w_feature > 0.0) row_max_f[i] = std::max(row_max_f[i], feature(i, j));
          }
      },
      8);
  const double max_s = *std::max_element(row_max_s.begin(), row_max_s.end());
  const double max_f = *std::max_element(row_max_f.begin(), row_max_f.end());
  auto combined = [&](std::size_t i, std::size_t j) {
    double v = 0.0;
    if (w_spatial > 0.0 && max_s > 0.0) v += w_spatial * spatial(i, j) / max_s;
    if (w_feature > 0.0 && max_f > 0.0) v += w_feature * feature(i, j) / max_f;
    return v;
  };

  Rng rng(seed);
  std::vector<std::size_t> picked{static_cast<std::size_t>(rng.uniform_index(n))};
  std::vector<bool> selected(n, false);
  selected[picked[0]] = true;
  std::vector<double> min_d(n);
  auto relax = [&](std::size_t from) {
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        min_d[i] = picked.size() == 1 ? combined(from, i) : std::min(min_d[i], combined(from, i));
    });
  };
  relax(picked[0]);
  while (picked.size() < count) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!selected[i] && min_d[i] > best_d) {
        best_d = min_d[i];
        best = i;
      }
    selected[best] = true;
    picked.push_back(best);
    relax(best);
  }
  return picked;
}

std::vector<std::size_t> random_sample(std::size_t n, std::size_t count, std::uint64_t seed) {
  require(count <= n, Errc::out_of_range, "requested more samples than rows");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

SemanticMap build_slide_map(int rows, int cols, std::span<const std::int32_t> labels,
                            std::optional<int> num_classes,
                            std::optional<std::int32_t> background_label) {
  require(rows > 0 && cols > 0, Errc::invalid_argument, "grid dims must be positive");
  require(labels.size() == static_cast<std::size_t>(rows) * cols, Errc::dimension_mismatch,
          "label count does not match grid dims");
  int k = num_classes.value_or(0);
  if (!num_classes)
    for (auto v : labels) k = std::max(k, v + 1);
  return SemanticMap(rows, cols, std::max(k, 1), {labels.begin(), labels.end()}, background_label);
}

}  // namespace histoforge
