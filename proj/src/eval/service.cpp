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

#include "histoforge/eval/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <json.hpp>
#include <sstream>

namespace histoforge::eval {
namespace {

using nlohmann::json;

Errc errc_for(Reason reason) {
  switch (reason) {
    case Reason::duplicate:
    case Reason::out_of_order:
      return Errc::conflict;
    case Reason::invalid_rating:
      return Errc::invalid_argument;
    case Reason::unknown_session:
    case Reason::unknown_item:
      return Errc::not_found;
  }
  return Errc::invalid_argument;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

json progress(const SessionSnapshot& s) {
  return {{"completed", s.cursor()}, {"total", s.order.size()}};
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int score_field(const json& body, const char* key) {
  if (!body.contains(key)) throw ServiceError(Reason::invalid_rating, std::string("missing ") + key);
  const auto& v = body.at(key);
  if (!v.is_number_integer())
    throw ServiceError(Reason::invalid_rating, std::string(key) + " must be an integer");
  const auto score = v.get<std::int64_t>();
  if (score < 1 || score > 5)
    throw ServiceError(Reason::invalid_rating, std::string(key) + " must be in 1..5");
  return static_cast<int>(score);
}

bool bool_field(const json& body, const char* key) {
  if (!body.contains(key)) throw ServiceError(Reason::invalid_rating, std::string("missing ") + key);
  const auto& v = body.at(key);
  if (!v.is_boolean()) throw ServiceError(Reason::invalid_rating, std::string(key) + " must be a boolean");
  return v.get<bool>();
}

RatingInput rating_from_json(const json& body) {
  if (!body.is_object()) throw ServiceError(Reason::invalid_rating, "rating must be a JSON object");
  if (!body.contains("item_id") || !body.at("item_id").is_string())
    throw ServiceError(Reason::invalid_rating, "missing item_id");
  RatingInput r;
  r.item_id = body.at("item_id").get<std::string>();
  r.quality = score_field(body, "quality");
  r.structure = score_field(body, "structure");
  r.nuclear = score_field(body, "nuclear");
  r.hallucination = bool_field(body, "hallucination");
  r.judged_real = bool_field(body, "judged_real");
  return r;
}

}  // namespace

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::duplicate: return "duplicate";
    case Reason::out_of_order: return "out_of_order";
    case Reason::invalid_rating: return "invalid_rating";
    case Reason::unknown_session: return "unknown_session";
    case Reason::unknown_item: return "unknown_item";
  }
  return "unknown";
}

ServiceError::ServiceError(Reason reason, const std::string& message)
    : Error(errc_for(reason), message), reason_(reason) {}

int ServiceError::http_status() const noexcept {
  switch (reason_) {
    case Reason::duplicate:
    case Reason::out_of_order:
      return 409;
    case Reason::invalid_rating:
      return 400;
    case Reason::unknown_session:
    case Reason::unknown_item:
      return 404;
  }
  return 400;
}

RatingInput parse_rating(const std::string& json_body) {
  json body;
  try {
    body = json::parse(json_body);
  } catch (const json::exception&) {
    throw ServiceError(Reason::invalid_rating, "rating body is not valid JSON");
  }
  return rating_from_json(body);
}

EvalService::EvalService(StudyManifest manifest, const std::filesystem::path& store_dir,
                         ServiceOptions options)
    : manifest_(std::move(manifest)), store_(store_dir), options_(std::move(options)) {
  require(manifest_.size() > 0, Errc::invalid_argument, "no study manifest loaded");
  replay();
}

std::string EvalService::now() const { return options_.clock ? options_.clock() : utc_now(); }

void EvalService::replay() {
  for (auto& [id, lines] : store_.recover()) {
    if (lines.empty()) continue;
    auto snap = std::make_shared<SessionSnapshot>();
    try {
      const auto head = json::parse(lines.front());
      require(head.at("type") == "session", Errc::io, "log " + id + " lacks a session header");
      snap->session_id = head.at("session_id").get<std::string>();
      snap->rater_id = head.at("rater_id").get<std::string>();
      snap->seed = head.at("seed").get<std::uint64_t>();
      snap->created = head.at("created").get<std::string>();
      require(snap->session_id == id, Errc::io, "log " + id + " names another session");
      require(head.at("n_items").get<std::size_t>() == manifest_.size(), Errc::conflict,
              "session " + id + " was created for a different manifest");
      snap->order = presentation_order(manifest_.size(), snap->seed);
      for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto row = json::parse(lines[i]);
        require(row.at("type") == "rating", Errc::io, "unexpected record in log " + id);
        StoredRating stored{rating_from_json(row), row.at("position").get<std::size_t>(),
                            row.at("timestamp").get<std::string>()};
        const auto cursor = snap->ratings.size();
        require(cursor < snap->order.size() && stored.position == cursor &&
                    manifest_.items()[snap->order[cursor]].item_id == stored.input.item_id,
                Errc::io, "log " + id + " is out of order at line " + std::to_string(i + 1));
        snap->ratings.push_back(std::move(stored));
      }
    } catch (const json::exception& e) {
      fail(Errc::io, "corrupt session log " + id + ": " + e.what());
    } catch (const ServiceError& e) {
      fail(Errc::io, "corrupt session log " + id + ": " + e.what());
    }
    auto s = std::make_shared<Slot>();
    s->current = std::move(snap);
    sessions_.emplace(id, std::move(s));
    unsigned long long numeric = 0;
    if (std::sscanf(id.c_str(), "s%llu", &numeric) == 1) next_id_ = std::max<std::uint64_t>(next_id_, numeric + 1);
  }
}

std::shared_ptr<EvalService::Slot> EvalService::slot(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(Reason::unknown_session, "unknown session " + session_id);
  return it->second;
}

std::shared_ptr<const SessionSnapshot> EvalService::snapshot(const std::string& session_id) const {
  return std::atomic_load(&slot(session_id)->current);
}

std::vector<std::string> EvalService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

std::string EvalService::create_session(const std::string& rater_id, std::uint64_t seed) {
  auto snap = std::make_shared<SessionSnapshot>();
  snap->rater_id = rater_id;
  snap->seed = seed;
  snap->created = now();
  snap->order = presentation_order(manifest_.size(), seed);
  std::unique_lock lock(sessions_mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(next_id_));
  snap->session_id = buf;
  const json head = {{"type", "session"},      {"session_id", snap->session_id},
                     {"rater_id", rater_id},   {"seed", seed},
                     {"created", snap->created}, {"n_items", manifest_.size()}};
  store_.append(snap->session_id, head.dump());
  ++next_id_;
  auto s = std::make_shared<Slot>();
  s->current = snap;
  sessions_.emplace(snap->session_id, std::move(s));
  return json{{"session_id", snap->session_id}, {"n_items", manifest_.size()}}.dump();
}

std::string EvalService::next_item(const std::string& session_id) const {
  const auto snap = snapshot(session_id);
  json out = {{"session_id", snap->session_id}, {"progress", progress(*snap)}};
  if (snap->complete()) {
    out["done"] = true;
    return out.dump();
  }
  const auto& item = manifest_.items()[snap->order[snap->cursor()]];
  out["done"] = false;
  out["item_id"] = item.item_id;
  out["image_url"] = "/images/" + item.item_id;
  if (options_.show_dataset) out["dataset"] = item.dataset;
  return out.dump();
}

std::string EvalService::post_rating(const std::string& session_id, const RatingInput& rating) {
  for (int v : {rating.quality, rating.structure, rating.nuclear})
    if (v < 1 || v > 5) throw ServiceError(Reason::invalid_rating, "scores must be in 1..5");
  const auto s = slot(session_id);
  std::lock_guard write(s->write);
  const auto snap = std::atomic_load(&s->current);
  if (!manifest_.find(rating.item_id))
    throw ServiceError(Reason::unknown_item, "unknown item " + rating.item_id);
  for (const auto& r : snap->ratings)
    if (r.input.item_id == rating.item_id)
      throw ServiceError(Reason::duplicate, "item " + rating.item_id + " already rated");
  if (snap->complete()) throw ServiceError(Reason::out_of_order, "session is complete");
  const auto& expected = manifest_.items()[snap->order[snap->cursor()]].item_id;
  if (expected != rating.item_id)
    throw ServiceError(Reason::out_of_order, "expected item " + expected + ", got " + rating.item_id);

  StoredRating stored{rating, snap->cursor(), now()};
  const json line = {{"type", "rating"},
                     {"item_id", rating.item_id},
                     {"position", stored.position},
                     {"quality", rating.quality},
                     {"structure", rating.structure},
                     {"nuclear", rating.nuclear},
                     {"hallucination", rating.hallucination},
                     {"judged_real", rating.judged_real},
                     {"timestamp", stored.timestamp}};
  store_.append(session_id, line.dump());
  auto next = std::make_shared<SessionSnapshot>(*snap);
  next->ratings.push_back(std::move(stored));
  std::atomic_store(&s->current, std::shared_ptr<const SessionSnapshot>(next));
  return json{{"status", "ok"}, {"progress", progress(*next)}, {"done", next->complete()}}.dump();
}

std::vector<ExportRow> EvalService::rows(const ExportFilter& filter) const {
  std::vector<ExportRow> out;
  for (const auto& id : session_ids()) {
    if (filter.session_id && *filter.session_id != id) continue;
    const auto snap = snapshot(id);
    if (filter.rater_id && *filter.rater_id != snap->rater_id) continue;
    for (const auto& r : snap->ratings) {
      const auto& item = manifest_.items()[*manifest_.find(r.input.item_id)];
      if (filter.dataset && *filter.dataset != item.dataset) continue;
      out.push_back(ExportRow{snap->session_id, snap->rater_id, r.position, item.item_id,
                              item.dataset, item.origin, r.input.quality, r.input.structure,
                              r.input.nuclear, r.input.hallucination, r.input.judged_real,
                              r.timestamp});
    }
  }
  return out;
}

std::vector<RatingRecord> to_records(const std::vector<ExportRow>& rows) {
  std::vector<RatingRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back(RatingRecord{r.session_id, r.item_id, r.dataset, r.origin, r.quality,
                               r.structure, r.nuclear, r.hallucination, r.judged_real});
  return out;
}

namespace {

json aggregates(const std::vector<ExportRow>& rows) {
  const auto records = to_records(rows);
  json likert = json::array();
  for (const auto& s : likert_aggregate(records))
    likert.push_back({{"dataset", s.dataset},
                      {"criterion", s.criterion},
                      {"origin", to_string(s.origin)},
                      {"mean", s.mean},
                      {"sd", s.sd},
                      {"n", s.n},
                      {"sd_defined", s.sd_defined}});
  std::map<std::string, std::size_t> flagged;
  for (const auto& r : rows)
    if (r.hallucination) ++flagged[r.dataset];
  json disc = json::array();
  for (const auto& d : discrimination_accuracy(records))
    disc.push_back({{"dataset", d.dataset},
                    {"matrix", d.matrix},
                    {"total", d.total},
                    {"excluded", d.excluded},
                    {"accuracy", d.accuracy},
                    {"correct_real", d.matrix[0][0]},
                    {"correct_synthetic", d.matrix[1][1]},
                    {"hallucination_flagged", flagged[d.dataset]}});
  return {{"likert", likert}, {"discrimination", disc}};
}

}  // namespace

std::string EvalService::export_json(const ExportFilter& filter) const {
  const auto table = rows(filter);
  json ratings = json::array();
  for (const auto& r : table)
    ratings.push_back({{"session_id", r.session_id},
                       {"rater_id", r.rater_id},
                       {"position", r.position},
                       {"item_id", r.item_id},
                       {"dataset", r.dataset},
                       {"origin", to_string(r.origin)},
                       {"quality", r.quality},
                       {"structure", r.structure},
                       {"nuclear", r.nuclear},
                       {"hallucination", r.hallucination},
                       {"judged_real", r.judged_real},
                       {"timestamp", r.timestamp}});
  auto out = aggregates(table);
  out["ratings"] = std::move(ratings);
  return out.dump(2);
}

std::string EvalService::export_csv(const ExportFilter& filter) const {
  std::ostringstream out;
  out << "session_id,rater_id,position,item_id,dataset,origin,quality,structure,nuclear,"
         "hallucination,judged_real,timestamp\n";
  for (const auto& r : rows(filter)) {
    out << csv_field(r.session_id) << ',' << csv_field(r.rater_id) << ',' << r.position << ','
        << csv_field(r.item_id) << ',' << r.dataset << ',' << to_string(r.origin) << ','
        << r.quality << ',' << r.structure << ',' << r.nuclear << ','
        << (r.hallucination ? "true" : "false") << ',' << (r.judged_real ? "true" : "false")
        << ',' << csv_field(r.timestamp) << '\n';
  }
  return out.str();
}

std::string EvalService::aggregate_json(const std::optional<std::string>& dataset) const {
  ExportFilter filter;
  filter.dataset = dataset;
  const auto table = rows(filter);
  auto out = aggregates(table);
  out["n_ratings"] = table.size();
  return out.dump(2);
}

std::filesystem::path EvalService::image_path(const std::string& item_id) const {
  const auto idx = manifest_.find(item_id);
  if (!idx) throw ServiceError(Reason::unknown_item, "unknown item " + item_id);
  return manifest_.items()[*idx].image_path;
}

}  // namespace histoforge::eval
