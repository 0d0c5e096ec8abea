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

// Regenerates fixtures/pathologist: a 120-item blinded study and one rater
// session whose per-dataset aggregates match the reference reader-study figures.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>

#include "histoforge/error.hpp"
#include "histoforge/eval/service.hpp"
#include "histoforge/ftensor.hpp"
#include "histoforge/image.hpp"
#include "histoforge/rng.hpp"

namespace fs = std::filesystem;
namespace hf = histoforge;
using hf::Origin;

namespace {

// Per origin: score sums over 20 items, correct judgments, hallucination flags.
struct Arm {
  int quality = 0;
  int structure = 0;
  int nuclear = 0;
  int correct = 0;
  int flagged = 0;
};

struct Target {
  std::string dataset;
  Arm real;
  Arm synthetic;
};

constexpr int kPerArm = 20;

const std::vector<Target> kTargets = {
    {"camelyon16", {80, 81, 83, 6, 11}, {88, 92, 92, 12, 12}},
    {"panda", {79, 84, 78, 11, 9}, {85, 80, 77, 10, 10}},
    {"tcga", {73, 65, 56, 9, 11}, {83, 81, 86, 9, 11}},
};

// kPerArm integer scores in [1, 5] with the given sum, spread over two
// adjacent values and permuted so neighbouring items differ.
std::vector<int> scores_with_sum(int sum, hf::Rng& rng) {
  hf::require(sum >= kPerArm && sum <= 5 * kPerArm, hf::Errc::invalid_argument, "score sum out of range");
  const int base = sum / kPerArm;
  const int extra = sum % kPerArm;
  std::vector<int> out(kPerArm, base);
  for (int i = 0; i < extra; ++i) ++out[i];
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.uniform_index(i)]);
  return out;
}

std::vector<bool> flags(int count, hf::Rng& rng) {
  std::vector<bool> out(kPerArm, false);
  for (int i = 0; i < count; ++i) out[i] = true;
  for (std::size_t i = out.size(); i > 1; --i) {
    const auto j = rng.uniform_index(i);
    const bool tmp = out[i - 1];
    out[i - 1] = out[j];
    out[j] = tmp;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the bundled pathologist study fixture"};
  std::string out_dir = "fixtures/pathologist";
  std::uint64_t seed = 2025;
  app.add_option("--out", out_dir)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path root(out_dir);
    fs::create_directories(root);
    fs::remove_all(root / "sessions");

    hf::RgbImage placeholder(64, 64);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        placeholder.at(r, c, 0) = static_cast<std::uint8_t>(200 + (r * c) % 40);
        placeholder.at(r, c, 1) = static_cast<std::uint8_t>(150 + (r + c) % 60);
        placeholder.at(r, c, 2) = static_cast<std::uint8_t>(190 + (r ^ c) % 50);
      }
    hf::write_png_rgb(root / "placeholder.png", placeholder);

    // Opaque ids: item numbers are handed out in shuffled order.
    const std::size_t n = kTargets.size() * 2 * kPerArm;
    const auto numbering = hf::eval::presentation_order(n, hf::mix_seed(seed, 1));
    std::vector<hf::eval::StudyItem> items;
    std::map<std::string, hf::eval::RatingInput> planned;
    hf::Rng rng(hf::mix_seed(seed, 2));
    for (const auto& t : kTargets) {
      for (const Origin origin : {Origin::real, Origin::synthetic}) {
        const Arm& arm = origin == Origin::real ? t.real : t.synthetic;
        const auto q = scores_with_sum(arm.quality, rng);
        const auto s = scores_with_sum(arm.structure, rng);
        const auto nu = scores_with_sum(arm.nuclear, rng);
        const auto correct = flags(arm.correct, rng);
        const auto halluc = flags(arm.flagged, rng);
        for (int i = 0; i < kPerArm; ++i) {
          char id[16];
          std::snprintf(id, sizeof id, "img%03zu", numbering[items.size()] + 1);
          items.push_back({id, t.dataset, "placeholder.png", origin});
          const bool judged_real = origin == Origin::real ? correct[i] : !correct[i];
          planned[id] = {id, q[i], s[i], nu[i], static_cast<bool>(halluc[i]), judged_real};
        }
      }
    }
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.item_id < b.item_id; });

    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& it : items)
      manifest.push_back({{"item_id", it.item_id},
                          {"dataset", it.dataset},
                          {"image_path", it.image_path.string()},
                          {"origin", hf::to_string(it.origin)}});
    const auto text = nlohmann::json{{"items", manifest}}.dump(2) + "\n";
    hf::write_file_bytes(root / "manifest.json",
                         std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));

    int minute = 0;
    hf::eval::ServiceOptions options;
    options.clock = [&minute] {
      char buf[32];
      std::snprintf(buf, sizeof buf, "2025-03-14T%02d:%02d:00Z", 9 + minute / 60, minute % 60);
      ++minute;
      return std::string(buf);
    };
    hf::eval::EvalService service(hf::eval::StudyManifest::load(root / "manifest.json", true),
                                  root / "sessions", options);
    const auto session =
        nlohmann::json::parse(service.create_session("pathologist-1", seed)).at("session_id");
    for (;;) {
      const auto next = nlohmann::json::parse(service.next_item(session));
      if (next.at("done").get<bool>()) break;
      service.post_rating(session, planned.at(next.at("item_id").get<std::string>()));
    }
    std::cout << service.aggregate_json(std::nullopt) << '\n';
  } catch (const hf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
