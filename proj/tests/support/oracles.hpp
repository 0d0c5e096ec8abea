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

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library under test.

#ifndef HISTOFORGE_TESTS_ORACLES_HPP
#define HISTOFORGE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

/// Hubert-Arabie adjusted Rand index from the contingency table.
template <typename A, typename B>
double adjusted_rand_index(const std::vector<A>& a, const std::vector<B>& b) {
  std::map<std::pair<long, long>, double> table;
  std::map<long, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{static_cast<long>(a[i]), static_cast<long>(b[i])}] += 1;
    rows[static_cast<long>(a[i])] += 1;
    cols[static_cast<long>(b[i])] += 1;
  }
  double index = 0, sr = 0, sc = 0;
  for (const auto& [k, v] : table) index += choose2(v);
  for (const auto& [k, v] : rows) sr += choose2(v);
  for (const auto& [k, v] : cols) sc += choose2(v);
  const double expected = sr * sc / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sr + sc);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

/// -sum p ln p, skipping zeros.
inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile by bisection on the CDF.
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
};

template <typename T>
Moments moments(const std::vector<T>& x) {
  Moments m;
  for (auto v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (auto v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

inline double sq_dist(const float* a, const float* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += (double(a[j]) - b[j]) * (double(a[j]) - b[j]);
  return s;
}

/// Fraction of `query` rows inside some `ref` row's k-th-nearest-neighbour ball
/// (self excluded), everything by exhaustive search.
inline double knn_coverage(const std::vector<float>& ref, std::size_t n_ref,
                           const std::vector<float>& query, std::size_t n_query, std::size_t d,
                           int k) {
  std::vector<double> radius(n_ref);
  for (std::size_t i = 0; i < n_ref; ++i) {
    std::vector<double> dist;
    for (std::size_t j = 0; j < n_ref; ++j)
      if (j != i) dist.push_back(sq_dist(&ref[i * d], &ref[j * d], d));
    std::sort(dist.begin(), dist.end());
    radius[i] = dist[k - 1];
  }
  std::size_t inside = 0;
  for (std::size_t q = 0; q < n_query; ++q) {
    for (std::size_t i = 0; i < n_ref; ++i) {
      if (sq_dist(&query[q * d], &ref[i * d], d) <= radius[i]) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(n_query);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("histoforge-" + tag + "-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// True when a serialized payload exposes an origin key or origin value.
inline bool leaks_origin(const std::string& bytes) {
  for (const char* needle : {"origin", "\"real\"", "\"synthetic\"", "synthetic"})
    if (bytes.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace oracle

#endif  // HISTOFORGE_TESTS_ORACLES_HPP
