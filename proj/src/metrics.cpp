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

#include "histoforge/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "histoforge/clustering.hpp"
#include "histoforge/error.hpp"
#include "histoforge/parallel.hpp"

namespace histoforge {
namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const EmbeddingSet& s) {
  Eigen::MatrixXd x(s.n, s.d);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.d; ++j) x(i, j) = s.data[i * s.d + j];
  Moments m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(s.n - 1);
  return m;
}

// Eigenvalues of a symmetric matrix with small negative noise clamped to zero.
Eigen::VectorXd clamped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                                    const char* what) {
  require(es.info() == Eigen::Success, Errc::numerical,
          std::string("eigendecomposition failed for ") + what);
  Eigen::VectorXd values = es.eigenvalues();
  const double top = std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      require(values(i) > -1e-6 * top, Errc::numerical,
              std::string(what) + " is indefinite beyond tolerance");
      values(i) = 0.0;
    }
  }
  return values;
}

void validate_set(const EmbeddingSet& s, const char* which) {
  require(s.data.size() == s.n * s.d, Errc::dimension_mismatch,
          std::string(which) + ": buffer does not match n x d");
  for (float v : s.data)
    require(std::isfinite(v), Errc::numerical, std::string(which) + ": non-finite embedding");
}

// Squared distance to the k-th nearest other row of the same set.
std::vector<double> knn_radii(const EmbeddingSet& s, int k) {
  std::vector<double> radii(s.n);
  parallel_for(
      s.n,
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> dist(s.n - 1);
        for (std::size_t i = begin; i < end; ++i) {
          std::size_t m = 0;
          for (std::size_t j = 0; j < s.n; ++j)
            if (j != i) dist[m++] = squared_l2(s.row(i), s.row(j));
          std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
          radii[i] = dist[k - 1];
        }
      },
      16);
  return radii;
}

double coverage(const EmbeddingSet& manifold, const std::vector<double>& radii,
                const EmbeddingSet& probes) {
  std::vector<std::uint8_t> inside(probes.n, 0);
  parallel_for(
      probes.n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          for (std::size_t j = 0; j < manifold.n; ++j)
            if (squared_l2(probes.row(i), manifold.row(j)) <= radii[j]) {
              inside[i] = 1;
              break;
            }
      },
      16);
  std::size_t hits = 0;
  for (auto v : inside) hits += v;
  return static_cast<double>(hits) / static_cast<double>(probes.n);
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::size_t rows, std::size_t dims, std::vector<float> values,
                           std::string tag)
    : n(rows), d(dims), data(std::move(values)), encoder_tag(std::move(tag)) {
  require(data.size() == n * d, Errc::dimension_mismatch, "embedding buffer does not match n x d");
}

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
  validate_set(a, "A");
  validate_set(b, "B");
  require(a.d == b.d && a.d >= 1, Errc::dimension_mismatch, "embedding dims differ");
  require(a.n >= 2 && b.n >= 2, Errc::invalid_argument, "each set needs at least 2 rows");
  const Moments ma = moments(a);
  const Moments mb = moments(b);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(mb.cov);
  const Eigen::VectorXd lb = clamped_eigenvalues(eb, "covariance of B");
  const Eigen::MatrixXd root_b =
      eb.eigenvectors() * lb.cwiseSqrt().asDiagonal() * eb.eigenvectors().transpose();
  Eigen::MatrixXd product = root_b * ma.cov * root_b;
  product = 0.5 * (product + product.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(product, Eigen::EigenvaluesOnly);
  const double trace_root = clamped_eigenvalues(ep, "covariance product").cwiseSqrt().sum();

  const double fd = (ma.mean - mb.mean).squaredNorm() + ma.cov.trace() + mb.cov.trace() -
                    2.0 * trace_root;
  return std::max(0.0, fd);
}

PrecisionRecall precision_recall_f1(const EmbeddingSet& real, const EmbeddingSet& gen, int k) {
  validate_set(real, "real");
  validate_set(gen, "gen");
  require(real.d == gen.d, Errc::dimension_mismatch, "embedding dims differ");
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  require(real.n > static_cast<std::size_t>(k) && gen.n > static_cast<std::size_t>(k),
          Errc::invalid_argument, "each set needs more than k rows");
  PrecisionRecall pr;
  pr.precision = coverage(real, knn_radii(real, k), gen);
  pr.recall = coverage(gen, knn_radii(gen, k), real);
  const double denom = pr.precision + pr.recall;
  pr.f1 = denom > 0.0 ? 2.0 * pr.precision * pr.recall / denom : 0.0;
  return pr;
}

std::optional<double> iou(const SemanticMap& pred, const SemanticMap& gt, std::int32_t class_id) {
  require(pred.height() == gt.height() && pred.width() == gt.width(), Errc::dimension_mismatch,
          "prediction and ground truth dims differ");
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool in_p = p[i] == class_id;
    const bool in_g = g[i] == class_id;
    inter += in_p && in_g;
    uni += in_p || in_g;
  }
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MeanIou mean_iou(const SemanticMap& pred, const SemanticMap& gt) {
  MeanIou out;
  const int k = std::max(pred.num_classes(), gt.num_classes());
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    out.per_class.push_back(iou(pred, gt, c));
    if (out.per_class.back()) {
      sum += *out.per_class.back();
      ++out.classes_counted;
    }
  }
  out.mean = out.classes_counted ? sum / out.classes_counted : 0.0;
  return out;
}

ConfusionResult confusion_with_equivalence(std::span<const std::int32_t> predictions,
                                           std::span<const std::int32_t> truth,
                                           const EquivalenceGroups& groups) {
  require(predictions.size() == truth.size(), Errc::dimension_mismatch,
          "predictions and truth lengths differ");
  std::map<std::int32_t, std::int32_t> collapse;
  for (const auto& group : groups) {
    require(!group.empty(), Errc::invalid_argument, "equivalence group is empty");
    const auto rep = *std::min_element(group.begin(), group.end());
    for (auto id : group) {
      require(id >= 0, Errc::invalid_argument, "class ids must be non-negative");
      const auto [it, inserted] = collapse.emplace(id, rep);
      require(inserted || it->second == rep, Errc::invalid_argument,
              "equivalence groups overlap at id " + std::to_string(id));
    }
  }
  auto canon = [&](std::int32_t id) {
    const auto it = collapse.find(id);
    return it == collapse.end() ? id : it->second;
  };

  ConfusionResult out;
  std::set<std::int32_t> ids;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ids.insert(canon(truth[i]));
    ids.insert(canon(predictions[i]));
  }
  out.ids.assign(ids.begin(), ids.end());
  out.matrix.assign(out.ids.size(), std::vector<std::uint64_t>(out.ids.size(), 0));
  auto slot = [&](std::int32_t id) {
    return static_cast<std::size_t>(std::lower_bound(out.ids.begin(), out.ids.end(), id) -
                                    out.ids.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = canon(truth[i]);
    const auto p = canon(predictions[i]);
    ++out.matrix[slot(t)][slot(p)];
    out.correct += t == p;
  }
  out.total = truth.size();
  out.accuracy = out.total ? static_cast<double>(out.correct) / static_cast<double>(out.total) : 0.0;
  return out;
}

std::string_view to_string(Origin origin) {
  return origin == Origin::real ? "real" : "synthetic";
}

Origin origin_from_string(std::string_view name) {
  if (name == "real") return Origin::real;
  if (name == "synthetic") return Origin::synthetic;
  fail(Errc::invalid_argument, "origin must be real or synthetic");
}

std::vector<LikertStat> likert_aggregate(std::span<const RatingRecord> records) {
  std::set<std::string> datasets;
  for (const auto& r : records) datasets.insert(r.dataset);
  std::vector<LikertStat> out;
  for (const auto& dataset : datasets) {
    for (std::size_t c = 0; c < kLikertCriteria.size(); ++c) {
      for (Origin origin : {Origin::synthetic, Origin::real}) {
        std::vector<double> values;
        for (const auto& r : records) {
          if (r.dataset != dataset || r.origin != origin) continue;
          values.push_back(c == 0 ? r.quality : c == 1 ? r.structure : r.nuclear);
        }
        LikertStat s{dataset, std::string(kLikertCriteria[c]), origin, 0.0, 0.0, values.size(),
                     values.size() >= 2};
        if (!values.empty()) {
          double sum = 0.0;
          for (double v : values) sum += v;
          s.mean = sum / static_cast<double>(values.size());
        }
        if (s.sd_defined) {
          double sq = 0.0;
          for (double v : values) sq += (v - s.mean) * (v - s.mean);
          s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<DiscriminationResult> discrimination_accuracy(std::span<const RatingRecord> records) {
  std::map<std::string, DiscriminationResult> by_dataset;
  for (const auto& r : records) {
    auto& res = by_dataset[r.dataset];
    res.dataset = r.dataset;
    if (!r.judged_real) {
      ++res.excluded;
      continue;
    }
    const int truth = r.origin == Origin::real ? 0 : 1;
    const int judged = *r.judged_real ? 0 : 1;
    ++res.matrix[truth][judged];
    ++res.total;
  }
  std::vector<DiscriminationResult> out;
  for (auto& [name, res] : by_dataset) {
    const auto correct = res.matrix[0][0] + res.matrix[1][1];
    res.accuracy = res.total ? static_cast<double>(correct) / static_cast<double>(res.total) : 0.0;
    out.push_back(res);
  }
  return out;
}

}  // namespace histoforge
