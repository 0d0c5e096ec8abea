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

#ifndef HISTOFORGE_EVAL_SERVICE_HPP
#define HISTOFORGE_EVAL_SERVICE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "histoforge/error.hpp"
#include "histoforge/eval/session_store.hpp"
#include "histoforge/eval/study.hpp"
#include "histoforge/metrics.hpp"

namespace histoforge::eval {

enum class Reason { duplicate, out_of_order, invalid_rating, unknown_session, unknown_item };

std::string_view to_string(Reason reason);

/// Protocol violations. The HTTP layer maps them to 409 / 400 / 404.
class ServiceError : public Error {
 public:
  ServiceError(Reason reason, const std::string& message);
  Reason reason() const noexcept { return reason_; }
  int http_status() const noexcept;

 private:
  Reason reason_;
};

struct RatingInput {
  std::string item_id;
  int quality = 0;
  int structure = 0;
  int nuclear = 0;
  bool hallucination = false;
  bool judged_real = false;
};

/// Parses a rating body; every field is mandatory and scores must be integers in [1, 5].
RatingInput parse_rating(const std::string& json_body);

struct StoredRating {
  RatingInput input;
  std::size_t position = 0;
  std::string timestamp;
};

struct SessionSnapshot {
  std::string session_id;
  std::string rater_id;
  std::uint64_t seed = 0;
  std::string created;
  std::vector<std::size_t> order;  // indices into the manifest
  std::vector<StoredRating> ratings;

  std::size_t cursor() const { return ratings.size(); }
  bool complete() const { return ratings.size() == order.size(); }
};

struct ServiceOptions {
  bool show_dataset = false;
  /// Timestamp source; defaults to the UTC wall clock in ISO 8601.
  std::function<std::string()> clock;
};

struct ExportFilter {
  std::optional<std::string> session_id;
  std::optional<std::string> dataset;
  std::optional<std::string> rater_id;
};

struct ExportRow {
  std::string session_id;
  std::string rater_id;
  std::size_t position = 0;
  std::string item_id;
  std::string dataset;
  Origin origin = Origin::real;
  int quality = 0;
  int structure = 0;
  int nuclear = 0;
  bool hallucination = false;
  bool judged_real = false;
  std::string timestamp;
};

/// Blinded rating sessions over one study manifest, persisted to a SessionStore.
/// Existing logs are replayed on construction.
class EvalService {
 public:
  EvalService(StudyManifest manifest, const std::filesystem::path& store_dir,
              ServiceOptions options = {});

  const StudyManifest& manifest() const { return manifest_; }

  /// Rater-facing. Returns {"session_id", "n_items"}.
  std::string create_session(const std::string& rater_id, std::uint64_t seed);
  /// Rater-facing. Current item or {"session_id", "done": true, ...}.
  std::string next_item(const std::string& session_id) const;
  /// Rater-facing. Returns {"status": "ok", "progress": {...}}.
  std::string post_rating(const std::string& session_id, const RatingInput& rating);

  std::vector<ExportRow> rows(const ExportFilter& filter) const;
  std::string export_json(const ExportFilter& filter) const;
  std::string export_csv(const ExportFilter& filter) const;
  /// Likert and discrimination aggregates over all sessions.
  std::string aggregate_json(const std::optional<std::string>& dataset) const;

  std::filesystem::path image_path(const std::string& item_id) const;
  std::shared_ptr<const SessionSnapshot> snapshot(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

 private:
  struct Slot {
    std::mutex write;
    std::shared_ptr<const SessionSnapshot> current;
  };

  std::shared_ptr<Slot> slot(const std::string& session_id) const;
  void replay();
  std::string now() const;

  StudyManifest manifest_;
  SessionStore store_;
  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_id_ = 1;
};

std::vector<RatingRecord> to_records(const std::vector<ExportRow>& rows);

}  // namespace histoforge::eval

#endif  // HISTOFORGE_EVAL_SERVICE_HPP
