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

#include <doctest.h>

#include <cmath>
#include <random>

#include "histoforge/error.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/grid.hpp"
#include "histoforge/image.hpp"
#include "oracles.hpp"

using namespace histoforge;

namespace {

SemanticMap random_map(int h, int w, int k, std::mt19937_64& gen,
                       std::optional<std::int32_t> bg = std::nullopt) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(h) * w);
  for (auto& l : labels) l = d(gen);
  return SemanticMap(h, w, k, labels, bg);
}

}  // namespace

TEST_CASE("semantic map validation") {
  CHECK_THROWS_AS(SemanticMap(0, 2, 2, {}), Error);
  CHECK_THROWS_AS(SemanticMap(1, 2, 2, {0, 2}), Error);
  CHECK_THROWS_AS(SemanticMap(1, 2, 2, {0, -1}), Error);
  CHECK_THROWS_AS(SemanticMap(1, 2, 2, {0, 1, 1}), Error);
  CHECK_THROWS_AS(SemanticMap(1, 2, 2, {0, 1}, 2), Error);
  CHECK_NOTHROW(SemanticMap(1, 2, 2, {0, 1}, 1));
}

TEST_CASE("one_hot small cases") {
  const SemanticMap m(2, 2, 2, {0, 1, 1, 0});
  const auto planes = one_hot(m);
  REQUIRE(planes.shape == std::vector<std::uint64_t>{2, 2, 2});
  CHECK(std::vector<std::uint8_t>(planes.data.begin(), planes.data.begin() + 4) ==
        std::vector<std::uint8_t>{1, 0, 0, 1});
  CHECK(std::vector<std::uint8_t>(planes.data.begin() + 4, planes.data.end()) ==
        std::vector<std::uint8_t>{0, 1, 1, 0});

  const SemanticMap u(3, 3, 3, std::vector<std::int32_t>(9, 0));
  const auto p = one_hot(u);
  for (int i = 0; i < 9; ++i) {
    CHECK(p.data[i] == 1);
    CHECK(p.data[9 + i] == 0);
    CHECK(p.data[18 + i] == 0);
  }
}

TEST_CASE("one_hot planes sum to one on a random 256x256 map") {
  std::mt19937_64 gen(3);
  const auto m = random_map(256, 256, 5, gen);
  const auto p = one_hot(m);
  const std::size_t hw = 256 * 256;
  bool ok = true;
  for (std::size_t i = 0; i < hw; ++i) {
    int sum = 0;
    for (int k = 0; k < 5; ++k) {
      sum += p.data[k * hw + i];
      if (p.data[k * hw + i] != (m.labels()[i] == k)) ok = false;
    }
    if (sum != 1) ok = false;
  }
  CHECK(ok);
}

TEST_CASE("tissue ratio") {
  CHECK(tissue_ratio(SemanticMap(2, 2, 2, {0, 0, 0, 0}, 0)) == 0.0);
  CHECK(tissue_ratio(SemanticMap(2, 2, 3, {1, 2, 1, 2}, 0)) == 1.0);
  std::vector<std::int32_t> labels(100, 0);
  for (int i = 0; i < 37; ++i) labels[i * 2] = 1 + i % 2;
  const SemanticMap m(10, 10, 3, labels, 0);
  CHECK(tissue_ratio(m) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(background_ratio(m) == doctest::Approx(0.63).epsilon(1e-15));
  CHECK_THROWS_AS(tissue_ratio(SemanticMap(1, 1, 1, {0})), Error);
}

TEST_CASE("region entropy examples") {
  const SemanticMap single(4, 4, 3, std::vector<std::int32_t>(16, 2));
  CHECK(region_entropy(single, {0, 0, 4}) == 0.0);

  const SemanticMap halves(2, 2, 2, {0, 1, 0, 1});
  CHECK(region_entropy(halves, {0, 0, 2}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // 10x10 region with 20 / 30 / 50 pixels of classes 0 / 1 / 2.
  std::vector<std::int32_t> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = i < 20 ? 0 : i < 50 ? 1 : 2;
  const SemanticMap mixed(10, 10, 3, labels);
  const double expected = oracle::entropy({0.2, 0.3, 0.5});
  CHECK(expected == doctest::Approx(1.029653).epsilon(1e-6));
  CHECK(region_entropy(mixed, {0, 0, 10}) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(region_entropy(mixed, {0, 0, 0}), Error);
  CHECK_THROWS_AS(region_entropy(mixed, {5, 5, 6}), Error);
  CHECK_THROWS_AS(region_entropy(mixed, {-1, 0, 2}), Error);
}

TEST_CASE("histogram entropy treats empty bins as zero") {
  const std::vector<std::uint64_t> counts = {0, 5, 0, 5};
  CHECK(histogram_entropy(counts) == doctest::Approx(std::log(2.0)));
  const std::vector<std::uint64_t> none = {0, 0};
  CHECK(histogram_entropy(none) == 0.0);
}

TEST_CASE("entropy map shape and values") {
  std::vector<std::int32_t> checker(64);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) checker[r * 8 + c] = (r + c) % 2;
  const SemanticMap m(8, 8, 2, checker);
  const auto e = entropy_map(m, 2, 2);
  CHECK(e.rows == 4);
  CHECK(e.cols == 4);
  for (double v : e.values) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto e2 = entropy_map(m, 3, 2);
  CHECK(e2.rows == (8 - 3) / 2 + 1);
  CHECK(e2.values.size() == static_cast<std::size_t>(e2.rows * e2.cols));

  const SemanticMap flat(16, 16, 4, std::vector<std::int32_t>(256, 1));
  for (double v : entropy_map(flat, 4, 3).values) CHECK(v == 0.0);

  CHECK_THROWS_AS(entropy_map(m, 9, 1), Error);
  CHECK_THROWS_AS(entropy_map(m, 2, 0), Error);

  const auto t = e2.to_tensor();
  CHECK(t.shape == std::vector<std::uint64_t>{static_cast<std::uint64_t>(e2.rows),
                                              static_cast<std::uint64_t>(e2.cols)});
}

TEST_CASE("entropy map agrees with a per-window histogram scan") {
  std::mt19937_64 gen(5);
  const auto m = random_map(37, 29, 4, gen);
  const auto e = entropy_map(m, 7, 3);
  for (int gr = 0; gr < e.rows; ++gr)
    for (int gc = 0; gc < e.cols; ++gc) {
      std::vector<double> p(4, 0.0);
      for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) p[m.at(gr * 3 + r, gc * 3 + c)] += 1.0 / 49.0;
      CHECK(e.values[gr * e.cols + gc] == doctest::Approx(oracle::entropy(p)).epsilon(1e-12));
      CHECK(e.values[gr * e.cols + gc] <= std::log(4.0) + 1e-12);
    }
}

TEST_CASE("is_tissue luminance rule") {
  RgbImage white(10, 10, std::vector<std::uint8_t>(300, 255));
  CHECK_FALSE(is_tissue(white));
  RgbImage some = white;
  for (int i = 0; i < 11; ++i)
    for (int ch = 0; ch < 3; ++ch) some.at(i / 10, i % 10, ch) = 120;
  CHECK(is_tissue(some));
  RgbImage exact = white;
  for (int i = 0; i < 10; ++i)
    for (int ch = 0; ch < 3; ++ch) exact.at(0, i, ch) = 120;
  CHECK_FALSE(is_tissue(exact));  // 10% is not more than 10%
}

TEST_CASE("semantic map file round trips") {
  oracle::TempDir dir("grid");
  std::mt19937_64 gen(9);
  const auto m = random_map(6, 9, 5, gen);
  save_semantic_map(dir / "m.ft", m);
  CHECK(load_semantic_map(dir / "m.ft", 5) == m);
  save_semantic_map(dir / "m.png", m);
  CHECK(load_semantic_map(dir / "m.png", 5) == m);
  const auto inferred = load_semantic_map(dir / "m.ft");
  CHECK(inferred.num_classes() == *std::max_element(m.labels().begin(), m.labels().end()) + 1);
  CHECK_THROWS_AS(load_semantic_map(dir / "m.ft", 2), Error);
  write_ftensor(dir / "bad.ft", Tensor<float>({2, 2}, {0, 1, 0, 1}));
  CHECK_THROWS_AS(load_semantic_map(dir / "bad.ft"), Error);
}
