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


// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Expected values come from the oracles in tests/support.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "histoforge/clustering.hpp"
#include "histoforge/conditioning.hpp"
#include "histoforge/diffusion.hpp"
#include "histoforge/eval/http_server.hpp"
#include "histoforge/eval/service.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/grid.hpp"
#include "histoforge/metrics.hpp"
#include "histoforge/sampling.hpp"
#include "oracles.hpp"

using namespace histoforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << "first failure: " << what << "; ";
    ok = ok && cond;
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// 1. Gaussian recovery through the exact denoiser.
void gaussian_recovery(Outcome& o) {
  const auto schedule = linear_schedule(0.0015, 0.0205, 1000);
  const auto denoiser = analytic_gaussian_denoiser({3.0}, {0.25}, schedule);
  Rng rng(20250314);
  const auto start = std::chrono::steady_clock::now();
  const auto z = sample(denoiser, schedule, 10000, nullptr, rng);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto m = oracle::moments(z);
  o.expect(std::abs(m.mean - 3.0) <= 0.02, "mean " + fmt(m.mean));
  o.expect(std::abs(m.var - 0.25) <= 0.025, "variance " + fmt(m.var));
  o.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.detail << "mean=" << fmt(m.mean) << " var=" << fmt(m.var) << " time=" << fmt(secs) << "s";
}

// 2. Iterated single steps against the closed-form marginal.
void forward_consistency(Outcome& o) {
  const auto schedule = linear_schedule();
  const std::size_t n = 10000;
  const double z0 = 1.5;
  std::vector<float> z(n, static_cast<float>(z0));
  Rng rng(99);
  for (int t = 1; t <= 1000; ++t) {
    z = forward_step(z, t, schedule, rng);
    if (t != 1 && t != 100 && t != 500 && t != 1000) continue;
    const auto m = oracle::moments(z);
    double abar = 1.0;
    for (int s = 1; s <= t; ++s) abar *= 1.0 - (0.0015 + (0.0205 - 0.0015) * (s - 1) / 999.0);
    const double mean = std::sqrt(abar) * z0;
    const double var = 1.0 - abar;
    const double se_mean = std::sqrt(var / n);
    const double se_var = var * std::sqrt(2.0 / (n - 1));
    o.expect(std::abs(m.mean - mean) <= 3 * se_mean, "mean at t=" + std::to_string(t));
    o.expect(std::abs(m.var - var) <= 3 * se_var, "variance at t=" + std::to_string(t));
    o.detail << "t=" << t << " dmean/se=" << fmt(std::abs(m.mean - mean) / se_mean)
             << " dvar/se=" << fmt(std::abs(m.var - var) / se_var) << " ";
  }
}

EmbeddingSet corners(double cx, double cy, double s) {
  std::vector<float> v;
  for (int i : {-1, 1})
    for (int j : {-1, 1}) {
      v.push_back(static_cast<float>(cx + i * s));
      v.push_back(static_cast<float>(cy + j * s));
    }
  return EmbeddingSet(4, 2, v);
}

// 3. Frechet distance identities.
void fd_suite(Outcome& o) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<float> a(500 * 8), b(400 * 8);
  for (auto& v : a) v = static_cast<float>(nd(gen));
  for (auto& v : b) v = static_cast<float>(0.7 * nd(gen) + 0.3);
  const EmbeddingSet sa(500, 8, a), sb(400, 8, b);
  const double self = frechet_distance(sa, sa);
  o.expect(self <= 1e-6, "FD(A,A)=" + fmt(self));
  // Four corners at +-sqrt(3)/2 have unit sample variance per axis and no covariance.
  const double s = std::sqrt(3.0) / 2.0;
  const double diag = frechet_distance(corners(0, 0, s), corners(3, 4, s));
  o.expect(std::abs(diag - 25.0) <= 1e-4, "diagonal case " + fmt(diag));
  const double ab = frechet_distance(sa, sb);
  const double ba = frechet_distance(sb, sa);
  const double rel = std::abs(ab - ba) / std::max(ab, ba);
  o.expect(rel <= 1e-6, "asymmetry " + fmt(rel));
  o.detail << "self=" << fmt(self) << " diagonal=" << fmt(diag) << " asym=" << fmt(rel);
}

// 4. Clustering on three separated blobs.
void clustering(Outcome& o) {
  std::mt19937_64 gen(11);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  const std::size_t n = 3000, d = 16;
  std::vector<float> x(n * d);
  std::vector<int> truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int>(i % 3);
    for (std::size_t j = 0; j < d; ++j)
      x[i * d + j] = noise(gen) + (j % 3 == static_cast<std::size_t>(truth[i]) ? 6.0f : 0.0f);
  }
  const FeatureMatrix f(n, d, x);
  std::vector<double> inertia;
  KMeansOptions opt;
  opt.k = 3;
  opt.iters = 100;
  opt.batch_size = 256;
  opt.seed = 5;
  opt.check_every = 5;
  opt.on_checkpoint = [&](int, std::span<const float> c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = INFINITY;
      for (int k = 0; k < 3; ++k)
        best = std::min(best, oracle::sq_dist(&x[i * d], c.data() + k * d, d));
      sum += best;
    }
    inertia.push_back(sum);
  };
  const auto model = fit_kmeans(f, opt);
  const auto whole = assign_nearest(f, model, n);
  const double ari = oracle::adjusted_rand_index(truth, whole);
  o.expect(ari >= 0.99, "ARI " + fmt(ari));
  for (std::size_t chunk : {1u, 7u, 1000u})
    o.expect(assign_nearest(f, model, chunk) == whole, "chunk " + std::to_string(chunk));
  bool monotone = !inertia.empty();
  for (std::size_t i = 1; i < inertia.size(); ++i) monotone &= inertia[i] <= inertia[i - 1];
  o.expect(monotone, "inertia increased");
  o.detail << "ARI=" << fmt(ari) << " checkpoints=" << inertia.size()
           << " final_inertia=" << fmt(inertia.empty() ? 0.0 : inertia.back());
}

// Random label map: background 0 plus up to three tissue classes laid out in
// rectangles of random size, so heterogeneity varies from patch to patch.
SemanticMap random_patch(std::mt19937_64& gen) {
  const int n = 64;
  std::uniform_int_distribution<int> cls(0, 3), pos(0, n - 1), len(8, 40);
  std::vector<std::int32_t> l(n * n, cls(gen));
  for (int b = 0, blocks = std::uniform_int_distribution<int>(0, 6)(gen); b < blocks; ++b) {
    const int r0 = pos(gen), c0 = pos(gen), h = len(gen), w = len(gen), v = cls(gen);
    for (int r = r0; r < std::min(n, r0 + h); ++r)
      for (int c = c0; c < std::min(n, c0 + w); ++c) l[r * n + c] = v;
  }
  return SemanticMap(n, n, 4, l, 0);
}

// Background plus two tissue classes in diagonal bands of random width.
SemanticMap banded_patch(std::mt19937_64& gen) {
  const int n = 64;
  const int width = std::uniform_int_distribution<int>(4, 16)(gen);
  const int a = std::uniform_int_distribution<int>(1, 3)(gen);
  const int b = a % 3 + 1;
  const std::int32_t cycle[3] = {0, a, b};
  std::vector<std::int32_t> l(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) l[r * n + c] = cycle[(r / width + c / width) % 3];
  return SemanticMap(n, n, 4, l, 0);
}

struct Stats {
  double ratio = 0.0;
  double entropy = 0.0;
  int classes = 0;
};

Stats recompute(const SemanticMap& m, int region, int stride) {
  Stats s;
  std::set<int> present;
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (m.at(r, c) != 0) {
        s.ratio += 1.0 / static_cast<double>(m.size());
        present.insert(m.at(r, c));
      }
  s.classes = static_cast<int>(present.size());
  region = std::min({region, m.height(), m.width()});
  int windows = 0;
  for (int r = 0; r + region <= m.height(); r += stride)
    for (int c = 0; c + region <= m.width(); c += stride) {
      std::vector<double> p(m.num_classes(), 0.0);
      for (int i = 0; i < region; ++i)
        for (int j = 0; j < region; ++j) p[m.at(r + i, c + j)] += 1.0 / (region * region);
      s.entropy += oracle::entropy(p);
      ++windows;
    }
  s.entropy /= windows;
  return s;
}

// 5. Sampling contract and the homogeneous failure path.
void sampling_contract(Outcome& o) {
  std::mt19937_64 gen(2024);
  PatchDataset data;
  for (int i = 0; i < 200; ++i)
    data.patches.push_back(
        {"p" + std::to_string(i), {}, {}, i % 2 ? banded_patch(gen) : random_patch(gen), {}, {}});
  SamplerConfig cfg;
  cfg.tau_entropy = 0.3;
  cfg.region_size = 32;
  cfg.stride = 16;
  std::size_t qualifying = 0;
  for (const auto& p : data.patches) {
    const auto s = recompute(p.map, cfg.region_size, cfg.stride);
    qualifying += s.ratio >= 0.2 && s.ratio <= 0.8 && s.entropy > 0.3 && s.classes >= 2;
  }
  int relaxed = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    cfg.seed = seed;
    const auto c = sample_heterogeneous(data, cfg);
    const auto s = recompute(data.patches[c.index].map, cfg.region_size, cfg.stride);
    relaxed += c.relaxation_round > 0;
    o.expect(s.ratio >= 0.2 && s.ratio <= 0.8, "ratio " + fmt(s.ratio) + " seed " + std::to_string(seed));
    o.expect(s.entropy > cfg.tau_entropy, "entropy " + fmt(s.entropy));
    o.expect(s.classes >= 2, "classes " + std::to_string(s.classes));
  }
  PatchDataset flat;
  for (int v = 0; v < 4; ++v)
    flat.patches.push_back({"h" + std::to_string(v), {}, {},
                            SemanticMap(64, 64, 4, std::vector<std::int32_t>(64 * 64, v), 0), {}, {}});
  bool raised = false;
  try {
    sample_heterogeneous(flat, cfg);
  } catch (const NoHeterogeneousPatch& e) {
    raised = e.code() == Errc::exhausted &&
             std::abs(e.thresholds().tau_entropy -
                      cfg.tau_entropy * std::pow(cfg.relax_factor, cfg.relax_rounds)) < 1e-12;
  }
  o.expect(raised, "homogeneous dataset did not raise the exhaustion error");
  o.detail << "draws=1000 qualifying_patches=" << qualifying << "/200 relaxed=" << relaxed
           << " homogeneous_error=" << (raised ? "yes" : "no");
}

// 6. Conditioning tensor layout.
void conditioning_layout(Outcome& o) {
  const int n = 256;
  std::vector<std::int32_t> labels(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) labels[r * n + c] = (c < 100 || r > 200) ? 1 : 0;
  const SemanticMap map(n, n, 2, labels);
  RgbImage patch(n, n);
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> px(1, 255);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int ch = 0; ch < 3; ++ch) patch.at(r, c, ch) = static_cast<std::uint8_t>(px(gen));
  SamplerConfig cfg;
  const auto cond = build_condition(patch, map, cfg, 77, "patch-a");
  o.expect(cond.channels() == 8 && cond.planes.shape == std::vector<std::uint64_t>{8, 256, 256},
           "channel count");
  for (int k = 0; k < 2; ++k) {
    const auto& rec = cond.crop_records[k];
    o.expect(rec.has_value(), "missing crop record");
    if (!rec) continue;
    bool support_ok = true;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        bool any = false;
        for (int ch = 0; ch < 3; ++ch) any |= cond.channel(cond.crop_channel(k) + ch)[r * n + c] != 0.0f;
        const bool inside = r >= rec->row && r < rec->row + rec->size && c >= rec->col &&
                            c < rec->col + rec->size;
        support_ok &= any == inside;
      }
    o.expect(support_ok, "crop support for class " + std::to_string(k));
    o.detail << "class" << k << "_crop=" << rec->size << "@(" << rec->row << "," << rec->col << ") ";
  }
  const auto again = build_condition(patch, map, cfg, 77, "patch-a");
  o.expect(encode_ftensor(cond.planes) == encode_ftensor(again.planes), "bytes differ for one seed");
  const auto latent = downsample_condition(cond, 4);
  o.expect(latent.height == 64 && latent.width == 64 && latent.channels == 8 &&
               latent.data.shape == std::vector<std::uint64_t>{8, 64, 64},
           "latent shape");
  o.detail << "latent=" << latent.channels << "x" << latent.height << "x" << latent.width;
}

// 7. Curriculum and crop-size schedules.
void schedules(Outcome& o) {
  const int k_min = 5, k_max = 100;
  const std::uint64_t warmup = 60000;
  o.expect(curriculum_k(0, k_min, k_max, warmup) == k_min, "k at t=0");
  int prev = k_min;
  bool monotone = true, endpoints = true;
  for (std::uint64_t t = 0; t < 100000; ++t) {
    const int k = curriculum_k(t, k_min, k_max, warmup);
    monotone &= k >= prev && k >= k_min && k <= k_max;
    if (t >= warmup) endpoints &= k == k_max;
    prev = k;
  }
  o.expect(monotone, "curriculum not monotone");
  o.expect(endpoints, "curriculum below k_max after warmup");
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> base(0.0, 400.0), alpha(0.0, 3.0), cx(0.0, 1.0);
  bool clamped = true;
  int low = 0, high = 0;
  for (int i = 0; i < 100000; ++i) {
    const double b = base(gen), a = alpha(gen), c = cx(gen);
    const int s = adaptive_crop_size(b, a, c);
    const double raw = std::floor(b * (1.0 + a * c) + 0.5);
    const int expected = static_cast<int>(std::clamp(raw, 50.0, 200.0));
    clamped &= s == expected && s >= 50 && s <= 200;
    low += s == 50;
    high += s == 200;
  }
  o.expect(clamped, "crop size outside [50, 200] or off the rounding rule");
  o.detail << "curriculum sweep=1e5 crop draws=1e5 at_min=" << low << " at_max=" << high;
}

// 8. Entropy identities.
void entropy_identities(Outcome& o) {
  std::vector<std::int32_t> half(64 * 64);
  for (int i = 0; i < 64 * 64; ++i) half[i] = (i % 64) < 32 ? 0 : 1;
  const SemanticMap two(64, 64, 2, half);
  const double h2 = region_entropy(two, {0, 0, 64});
  o.expect(std::abs(h2 - std::log(2.0)) <= 1e-9, "two-class entropy " + fmt(h2));
  const SemanticMap homo(64, 64, 3, std::vector<std::int32_t>(64 * 64, 2));
  const double h0 = region_entropy(homo, {0, 0, 64});
  o.expect(h0 == 0.0, "homogeneous entropy " + fmt(h0));
  std::mt19937_64 gen(12);
  double worst = -INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const int k = std::uniform_int_distribution<int>(1, 8)(gen);
    const int size = std::uniform_int_distribution<int>(1, 24)(gen);
    std::uniform_int_distribution<int> lab(0, k - 1);
    std::vector<std::int32_t> l(static_cast<std::size_t>(size) * size);
    for (auto& v : l) v = lab(gen);
    const SemanticMap m(size, size, k, l);
    const double h = region_entropy(m, {0, 0, size});
    worst = std::max(worst, h - std::log(static_cast<double>(k)));
    const auto em = entropy_map(m, std::max(1, size / 2), std::max(1, size / 4));
    for (double v : em.values) worst = std::max(worst, v - std::log(static_cast<double>(k)));
  }
  o.expect(worst <= 1e-12, "bound exceeded by " + fmt(worst));
  o.detail << "ln2_err=" << fmt(std::abs(h2 - std::log(2.0))) << " homogeneous=" << fmt(h0)
           << " max(H-lnK)=" << fmt(worst);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Bundled pathologist fixture, parsed directly and through the service.
void pathologist_fixture(Outcome& o) {
  const fs::path root = fs::path(HISTOFORGE_SOURCE_DIR) / "fixtures" / "pathologist";
  const auto manifest = json::parse(slurp(root / "manifest.json"));
  std::map<std::string, std::pair<std::string, std::string>> items;  // id -> dataset, origin
  for (const auto& it : manifest.at("items"))
    items[it.at("item_id")] = {it.at("dataset"), it.at("origin")};

  std::map<std::string, int> correct, total;
  std::map<std::pair<std::string, std::string>, int> quality_sum, quality_n;
  std::istringstream log(slurp(root / "sessions" / "s000001.jsonl"));
  std::string line;
  while (std::getline(log, line)) {
    const auto rec = json::parse(line);
    if (rec.at("type") != "rating") continue;
    const auto& [dataset, origin] = items.at(rec.at("item_id"));
    const bool judged_real = rec.at("judged_real");
    correct[dataset] += judged_real == (origin == "real");
    ++total[dataset];
    quality_sum[{dataset, origin}] += rec.at("quality").get<int>();
    ++quality_n[{dataset, origin}];
  }
  // Exact rational comparisons: 18/40, 21/40, 18/40; 88/20 and 80/20.
  o.expect(correct["camelyon16"] * 40 == 18 * total["camelyon16"] && total["camelyon16"] == 40,
           "camelyon16 accuracy");
  o.expect(correct["panda"] * 40 == 21 * total["panda"] && total["panda"] == 40, "panda accuracy");
  o.expect(correct["tcga"] * 40 == 18 * total["tcga"] && total["tcga"] == 40, "tcga accuracy");
  o.expect(quality_sum[{"camelyon16", "synthetic"}] * 100 == 440 * quality_n[{"camelyon16", "synthetic"}],
           "camelyon16 synthetic quality");
  o.expect(quality_sum[{"camelyon16", "real"}] * 100 == 400 * quality_n[{"camelyon16", "real"}],
           "camelyon16 real quality");

  oracle::TempDir dir("acceptance-fixture");
  fs::copy(root / "sessions", dir / "sessions");
  eval::EvalService service(eval::StudyManifest::load(root / "manifest.json", true), dir / "sessions");
  const auto agg = json::parse(service.aggregate_json(std::nullopt));
  std::map<std::string, double> acc;
  for (const auto& d : agg.at("discrimination")) acc[d.at("dataset")] = d.at("accuracy");
  o.expect(acc["camelyon16"] == 18.0 / 40 && acc["panda"] == 21.0 / 40 && acc["tcga"] == 18.0 / 40,
           "service accuracies");
  for (const auto& l : agg.at("likert"))
    if (l.at("dataset") == "camelyon16" && l.at("criterion") == "quality")
      o.expect(l.at("mean").get<double>() == (l.at("origin") == "real" ? 80.0 : 88.0) / 20.0,
               "service likert mean");
  o.detail << "accuracy camelyon16=" << fmt(acc["camelyon16"]) << " panda=" << fmt(acc["panda"])
           << " tcga=" << fmt(acc["tcga"]) << " camelyon16 quality synthetic="
           << fmt(quality_sum[{"camelyon16", "synthetic"}] / 20.0)
           << " real=" << fmt(quality_sum[{"camelyon16", "real"}] / 20.0);
}

// 10. Fuzzed rater-facing traffic never reveals ground truth.
void blinding(Outcome& o) {
  const fs::path root = fs::path(HISTOFORGE_SOURCE_DIR) / "fixtures" / "pathologist";
  oracle::TempDir dir("acceptance-blind");
  eval::EvalService service(eval::StudyManifest::load(root / "manifest.json"), dir / "store");
  const auto& catalog = service.manifest().items();
  std::mt19937_64 gen(31337);
  std::vector<std::string> sessions = {"s000000", "bogus"};
  std::map<int, int> statuses;
  int requests = 0;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen); };
  while (requests < 10000) {
    eval::ApiResponse res;
    const auto kind = pick(10);
    const auto& sid = sessions[pick(sessions.size())];
    if (kind == 0) {
      const json body = {{"rater_id", "r" + std::to_string(pick(5))}, {"seed", pick(1000)}};
      res = eval::handle_request(service, "POST", "/sessions", {}, body.dump());
      if (res.status == 201) sessions.push_back(json::parse(res.body).at("session_id"));
    } else if (kind < 4) {
      res = eval::handle_request(service, "GET", "/sessions/" + sid + "/next", {}, "");
    } else {
      // Mostly the item the server is waiting for, sometimes a stale, foreign or broken one.
      std::string item = catalog[pick(catalog.size())].item_id;
      const auto next = eval::handle_request(service, "GET", "/sessions/" + sid + "/next", {}, "");
      ++requests;
      o.expect(!oracle::leaks_origin(next.body), "leak in " + next.body);
      if (next.status == 200 && pick(4) != 0) {
        const auto doc = json::parse(next.body);
        if (doc.contains("item_id")) item = doc.at("item_id");
      }
      json body = {{"item_id", pick(20) == 0 ? "no-such-item" : item},
                   {"quality", static_cast<int>(pick(7))},
                   {"structure", 1 + static_cast<int>(pick(5))},
                   {"nuclear", 1 + static_cast<int>(pick(5))},
                   {"hallucination", pick(2) == 0},
                   {"judged_real", pick(2) == 0}};
      if (pick(30) == 0) body.erase("judged_real");
      const std::string text = pick(50) == 0 ? "{broken" : body.dump();
      res = eval::handle_request(service, "POST", "/sessions/" + sid + "/ratings", {}, text);
    }
    ++requests;
    ++statuses[res.status];
    o.expect(!oracle::leaks_origin(res.body), "leak in " + res.body);
  }
  o.detail << "requests=" << requests << " sessions=" << sessions.size() - 2 << " statuses=";
  for (const auto& [code, count] : statuses) o.detail << code << ":" << count << " ";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"gaussian_recovery", gaussian_recovery},
      {"forward_consistency", forward_consistency},
      {"frechet_distance_oracles", fd_suite},
      {"clustering_oracle", clustering},
      {"sampling_contract", sampling_contract},
      {"conditioning_layout", conditioning_layout},
      {"schedules", schedules},
      {"entropy_identities", entropy_identities},
      {"pathologist_fixture", pathologist_fixture},
      {"blinding", blinding},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.ok;
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
