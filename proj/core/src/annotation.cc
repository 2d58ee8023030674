// Copyright 2026 The RADE Toolkit Authors.
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

#include "rade/annotation.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "rade/file_util.h"
#include "rade/random.h"

namespace rade::annotation {
namespace {

using nlohmann::json;

constexpr double kOrderingTolerance = 1e-9;

json UtterancesToJson(const std::vector<Utterance>& context) {
  json out = json::array();
  for (const auto& u : context) {
    out.push_back({{"speaker", ToString(u.speaker)}, {"text", u.text}});
  }
  return out;
}

json SubScoresToJson(const SubScores& scores) {
  json out = json::object();
  for (const auto& [metric, value] : scores) {
    out[std::string(ToString(metric))] = value;
  }
  return out;
}

SubScores SubScoresFromJson(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, "sub_scores must be an object");
  }
  SubScores scores;
  for (const auto& [key, value] : j.items()) {
    auto metric = ParseSubMetric(key);
    if (!metric) {
      throw Error(ErrorCode::kMalformedRecord, "unknown sub-metric '" + key + "'");
    }
    if (!value.is_number_integer()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "sub-score '" + key + "' must be an integer");
    }
    scores[*metric] = value.get<int>();
  }
  return scores;
}

std::string FormatScore(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

std::string_view ToString(SessionStatus status) {
  switch (status) {
    case SessionStatus::kActive: return "active";
    case SessionStatus::kComplete: return "complete";
    case SessionStatus::kAbandoned: return "abandoned";
  }
  return "unknown";
}

json AnnotationItem::ToJson() const {
  json metrics = json::array();
  for (SubMetric m : required_sub_metrics) metrics.push_back(ToString(m));
  return {{"example_id", example_id},
          {"context", UtterancesToJson(context)},
          {"reference", reference},
          {"reference_score", reference_score},
          {"candidate", candidate},
          {"required_sub_metrics", metrics},
          {"position", position},
          {"total", total}};
}

json AnnotationSession::ToJson() const {
  return {{"session_id", id},
          {"annotator_id", annotator_id},
          {"dataset_id", dataset_id},
          {"queue", queue},
          {"cursor", cursor},
          {"status", ToString(status)}};
}

RatingSubmission RatingSubmission::FromJson(const std::string& session_id,
                                            const json& body) {
  if (!body.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, "rating body must be an object");
  }
  RatingSubmission s;
  s.session_id = session_id;
  try {
    s.item_id = body.at("item_id").get<std::string>();
    s.sub_scores = SubScoresFromJson(body.at("sub_scores"));
    const std::string comparative = body.at("comparative").get<std::string>();
    auto parsed = ParseComparative(comparative);
    if (!parsed) {
      throw Error(ErrorCode::kMalformedRecord,
                  "unknown comparative '" + comparative + "'");
    }
    s.comparative = *parsed;
    if (body.contains("revised_reference_score") &&
        !body["revised_reference_score"].is_null()) {
      s.revised_reference_score = body["revised_reference_score"].get<double>();
    }
    if (body.contains("note") && !body["note"].is_null()) {
      s.note = body["note"].get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord,
                std::string("bad rating body: ") + e.what());
  }
  return s;
}

json SubmissionResult::ToJson() const {
  json v = json::array();
  for (const auto& violation : violations) {
    v.push_back({{"field", violation.field}, {"rule", violation.rule}});
  }
  json j = {{"accepted", accepted},
            {"derived_overall",
             derived_overall ? json(*derived_overall) : json(nullptr)},
            {"violations", v}};
  if (code) j["code"] = std::string(ErrorCodeName(*code));
  return j;
}

SubmissionResult CheckSubmission(const AnnotatedExample& example,
                                 const RatingSubmission& submission) {
  SubmissionResult result;
  const std::vector<SubMetric> required = RequiredSubMetrics(example.domain);
  for (SubMetric m : required) {
    if (!submission.sub_scores.contains(m)) {
      result.violations.push_back({"sub_scores." + std::string(ToString(m)),
                                   "required sub-metric is missing"});
    }
  }
  for (const auto& [metric, value] : submission.sub_scores) {
    const std::string field = "sub_scores." + std::string(ToString(metric));
    if (std::find(required.begin(), required.end(), metric) == required.end()) {
      result.violations.push_back({field, "sub-metric is not rated in the " +
                                              std::string(ToString(example.domain)) +
                                              " domain"});
    } else if (value < 1 || value > 5) {
      result.violations.push_back({field, "sub-score must be an integer in 1..5"});
    }
  }
  if (submission.revised_reference_score) {
    const double r = *submission.revised_reference_score;
    if (!std::isfinite(r) || r < kMinScore || r > kMaxScore) {
      result.violations.push_back(
          {"revised_reference_score", "revised score must be in [1, 5]"});
    }
  }
  if (!result.violations.empty()) {
    result.code = ErrorCode::kMalformedRecord;
    return result;
  }

  const double overall =
      AggregateOverall(submission.sub_scores, MetricWeights::Uniform());
  result.derived_overall = overall;
  const double benchmark = submission.revised_reference_score
                               ? *submission.revised_reference_score
                               : example.reference_score.value_or(0.0);
  std::string rule;
  switch (submission.comparative) {
    case Comparative::kBetter:
      if (!(overall > benchmark + kOrderingTolerance)) {
        rule = "better requires an overall score above the benchmark";
      }
      break;
    case Comparative::kWorse:
      if (!(overall < benchmark - kOrderingTolerance)) {
        rule = "worse requires an overall score below the benchmark";
      }
      break;
    case Comparative::kTie:
      if (std::abs(overall - benchmark) > kOrderingTolerance) {
        rule = "tie requires an overall score equal to the benchmark";
      }
      break;
  }
  if (!rule.empty()) {
    result.violations.push_back(
        {"comparative", rule + " (overall " + FormatScore(overall) +
                            ", benchmark " + FormatScore(benchmark) + ")"});
    result.code = ErrorCode::kOrderingViolation;
    return result;
  }
  result.accepted = true;
  return result;
}

// ---- AnnotationService ----

AnnotationService::AnnotationService(std::vector<Dataset> datasets,
                                     std::filesystem::path log_path)
    : log_path_(std::move(log_path)) {
  for (Dataset& d : datasets) {
    DatasetEntry entry;
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
      const auto& ex = d.examples[i];
      if (!ex.reference_score) {
        throw Error(ErrorCode::kMissingScore,
                    "example '" + ex.id + "' in dataset '" + d.name +
                        "' has no reference score to annotate against");
      }
      if (!entry.index.emplace(ex.id, i).second) {
        throw Error(ErrorCode::kDuplicateId, "duplicate example id '" + ex.id +
                                                 "' in dataset '" + d.name + "'");
      }
    }
    const std::string name = d.name;
    entry.dataset = std::move(d);
    if (!datasets_.emplace(name, std::move(entry)).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate dataset '" + name + "'");
    }
  }
  Replay();
  log_.open(log_path_, std::ios::app | std::ios::binary);
  if (!log_) {
    throw Error(ErrorCode::kIo, "cannot open event log " + log_path_.string());
  }
}

void AnnotationService::Replay() {
  if (!std::filesystem::exists(log_path_)) return;
  std::istringstream in(ReadFile(log_path_));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Apply(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  log_path_.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
}

void AnnotationService::Append(const json& event) {
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) {
    throw Error(ErrorCode::kIo, "cannot append to " + log_path_.string());
  }
}

void AnnotationService::Apply(const json& event) {
  const std::string type = event.at("type").get<std::string>();
  if (type == "session_created") {
    AnnotationSession s;
    s.id = event.at("session_id").get<std::string>();
    s.annotator_id = event.at("annotator_id").get<std::string>();
    s.dataset_id = event.at("dataset_id").get<std::string>();
    s.queue = event.at("queue").get<std::vector<std::string>>();
    FindDataset(s.dataset_id);
    session_index_[s.id] = sessions_.size();
    sessions_.push_back(std::move(s));
  } else if (type == "rating") {
    AnnotationSession& session = FindSession(event.at("session_id").get<std::string>());
    StoredRating r;
    r.session_id = session.id;
    r.dataset_id = session.dataset_id;
    r.item_id = event.at("item_id").get<std::string>();
    r.rating.annotator_id = session.annotator_id;
    r.rating.sub_scores = SubScoresFromJson(event.at("sub_scores"));
    r.rating.comparative =
        ParseComparative(event.at("comparative").get<std::string>()).value();
    if (event.contains("revised_reference_score")) {
      r.rating.revised_reference_score =
          event["revised_reference_score"].get<double>();
    }
    if (event.contains("note")) r.note = event["note"].get<std::string>();
    r.overall = event.at("overall").get<double>();
    ratings_.push_back(std::move(r));
    ++session.cursor;
    if (session.cursor == session.queue.size()) {
      session.status = SessionStatus::kComplete;
    }
  } else if (type == "session_abandoned") {
    FindSession(event.at("session_id").get<std::string>()).status =
        SessionStatus::kAbandoned;
  } else {
    throw Error(ErrorCode::kMalformedRecord, "unknown event type '" + type + "'");
  }
}

const AnnotationService::DatasetEntry& AnnotationService::FindDataset(
    const std::string& dataset_id) const {
  auto it = datasets_.find(dataset_id);
  if (it == datasets_.end()) {
    throw Error(ErrorCode::kUnknownDataset, "unknown dataset '" + dataset_id + "'");
  }
  return it->second;
}

AnnotationSession& AnnotationService::FindSession(const std::string& session_id) {
  auto it = session_index_.find(session_id);
  if (it == session_index_.end()) {
    throw Error(ErrorCode::kUnknownSession, "unknown session '" + session_id + "'");
  }
  return sessions_[it->second];
}

const AnnotationSession& AnnotationService::FindSession(
    const std::string& session_id) const {
  return const_cast<AnnotationService*>(this)->FindSession(session_id);
}

bool AnnotationService::Rated(const std::string& annotator_id,
                              const std::string& dataset_id,
                              const std::string& item_id) const {
  return std::any_of(ratings_.begin(), ratings_.end(), [&](const StoredRating& r) {
    return r.rating.annotator_id == annotator_id && r.dataset_id == dataset_id &&
           r.item_id == item_id;
  });
}

AnnotationSession AnnotationService::CreateSession(
    const std::string& annotator_id, const std::string& dataset_id,
    std::uint64_t seed) {
  std::lock_guard<std::mutex> lock(mu_);
  if (annotator_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "annotator id is empty");
  }
  const DatasetEntry& entry = FindDataset(dataset_id);
  // Items already rated, or still queued in another active session of the
  // same annotator, are left out.
  std::vector<std::string> queue;
  for (const auto& ex : entry.dataset.examples) {
    if (Rated(annotator_id, dataset_id, ex.id)) continue;
    const bool pending = std::any_of(
        sessions_.begin(), sessions_.end(), [&](const AnnotationSession& s) {
          return s.status == SessionStatus::kActive &&
                 s.annotator_id == annotator_id && s.dataset_id == dataset_id &&
                 std::find(s.queue.begin() + static_cast<std::ptrdiff_t>(s.cursor),
                           s.queue.end(), ex.id) != s.queue.end();
        });
    if (!pending) queue.push_back(ex.id);
  }
  if (queue.empty()) {
    throw Error(ErrorCode::kNoRemainingItems,
                "annotator '" + annotator_id + "' has no remaining items in '" +
                    dataset_id + "'");
  }
  std::mt19937_64 rng(seed);
  Shuffle(std::span<std::string>(queue), rng);

  const std::string id = "s" + std::to_string(sessions_.size() + 1);
  const json event = {{"type", "session_created"},
                      {"session_id", id},
                      {"annotator_id", annotator_id},
                      {"dataset_id", dataset_id},
                      {"seed", seed},
                      {"queue", queue}};
  Append(event);
  Apply(event);
  return sessions_.back();
}

AnnotationSession AnnotationService::GetSession(
    const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return FindSession(session_id);
}

AnnotationItem AnnotationService::NextItem(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(mu_);
  const AnnotationSession& session = FindSession(session_id);
  if (session.status == SessionStatus::kAbandoned) {
    throw Error(ErrorCode::kSessionClosed, "session '" + session_id + "' was abandoned");
  }
  if (session.cursor >= session.queue.size()) {
    throw Error(ErrorCode::kExhausted, "session '" + session_id + "' is complete");
  }
  const DatasetEntry& entry = FindDataset(session.dataset_id);
  const AnnotatedExample& ex =
      entry.dataset.examples[entry.index.at(session.queue[session.cursor])];
  AnnotationItem item;
  item.example_id = ex.id;
  item.context = ex.context;
  item.reference = ex.reference;
  item.reference_score = *ex.reference_score;
  item.candidate = ex.candidate;
  item.required_sub_metrics = RequiredSubMetrics(ex.domain);
  item.position = session.cursor;
  item.total = session.queue.size();
  return item;
}

SubmissionResult AnnotationService::SubmitRating(const RatingSubmission& submission) {
  std::lock_guard<std::mutex> lock(mu_);
  const AnnotationSession& session = FindSession(submission.session_id);
  if (session.status != SessionStatus::kActive) {
    throw Error(ErrorCode::kSessionClosed, "session '" + session.id + "' is " +
                                               std::string(ToString(session.status)));
  }
  const std::string& current = session.queue[session.cursor];
  if (submission.item_id != current) {
    throw Error(ErrorCode::kStaleItem, "item '" + submission.item_id +
                                           "' is not current; expected '" +
                                           current + "'");
  }
  if (Rated(session.annotator_id, session.dataset_id, current)) {
    throw Error(ErrorCode::kDuplicateId, "annotator '" + session.annotator_id +
                                             "' already rated '" + current + "'");
  }
  const DatasetEntry& entry = FindDataset(session.dataset_id);
  const AnnotatedExample& ex = entry.dataset.examples[entry.index.at(current)];
  SubmissionResult result = CheckSubmission(ex, submission);
  if (!result.accepted) return result;

  json event = {{"type", "rating"},
                {"session_id", session.id},
                {"item_id", current},
                {"sub_scores", SubScoresToJson(submission.sub_scores)},
                {"comparative", ToString(submission.comparative)},
                {"overall", *result.derived_overall}};
  if (submission.revised_reference_score) {
    event["revised_reference_score"] = *submission.revised_reference_score;
  }
  if (submission.note) event["note"] = *submission.note;
  Append(event);
  Apply(event);
  return result;
}

AnnotationSession AnnotationService::AbandonSession(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(mu_);
  const AnnotationSession& session = FindSession(session_id);
  if (session.status != SessionStatus::kActive) {
    throw Error(ErrorCode::kSessionClosed, "session '" + session_id + "' is " +
                                               std::string(ToString(session.status)));
  }
  const json event = {{"type", "session_abandoned"}, {"session_id", session_id}};
  Append(event);
  Apply(event);
  return FindSession(session_id);
}

std::vector<const StoredRating*> AnnotationService::LiveRatings(
    const std::string& dataset_id) const {
  std::vector<const StoredRating*> out;
  for (const auto& r : ratings_) {
    if (r.dataset_id != dataset_id) continue;
    if (FindSession(r.session_id).status == SessionStatus::kAbandoned) continue;
    out.push_back(&r);
  }
  return out;
}

stats::AgreementReport AnnotationService::AgreementReport(
    const std::string& dataset_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const DatasetEntry& entry = FindDataset(dataset_id);
  std::map<std::string, std::vector<double>> by_item;
  for (const StoredRating* r : LiveRatings(dataset_id)) {
    by_item[r->item_id].push_back(r->overall);
  }
  std::size_t raters = 0;
  for (const auto& [item, overalls] : by_item) {
    if (overalls.size() < 2) continue;
    raters = raters == 0 ? overalls.size() : std::min(raters, overalls.size());
  }
  if (raters == 0) {
    throw Error(ErrorCode::kInsufficientOverlap,
                "no item in '" + dataset_id + "' has ratings from two annotators");
  }
  std::vector<std::vector<int>> counts;
  // Dataset order keeps the rows stable.
  for (const auto& ex : entry.dataset.examples) {
    auto it = by_item.find(ex.id);
    if (it == by_item.end() || it->second.size() < 2) continue;
    std::vector<int> row(stats::kRatingCategories, 0);
    for (std::size_t i = 0; i < raters; ++i) {
      ++row[stats::RatingCategory(it->second[i]) - 1];
    }
    counts.push_back(std::move(row));
  }
  return stats::FleissKappa(counts);
}

Dataset AnnotationService::ExportAnnotations(const std::string& dataset_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const DatasetEntry& entry = FindDataset(dataset_id);
  Dataset out = entry.dataset;
  std::vector<bool> touched(out.examples.size(), false);
  for (const StoredRating* r : LiveRatings(dataset_id)) {
    const std::size_t i = entry.index.at(r->item_id);
    out.examples[i].annotations.push_back(r->rating);
    touched[i] = true;
  }
  for (std::size_t i = 0; i < out.examples.size(); ++i) {
    if (touched[i]) {
      out.examples[i] = MergeAnnotations(out.examples[i], MetricWeights::Uniform());
    }
  }
  return out;
}

void AnnotationService::ExportAnnotations(const std::string& dataset_id,
                                          const std::filesystem::path& path) const {
  SaveDataset(ExportAnnotations(dataset_id), path);
}

std::vector<StoredRating> AnnotationService::Ratings() const {
  std::lock_guard<std::mutex> lock(mu_);
  return ratings_;
}

json AnnotationService::StateSnapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  json sessions = json::array();
  for (const auto& s : sessions_) sessions.push_back(s.ToJson());
  json ratings = json::array();
  for (const auto& r : ratings_) {
    json j = {{"session_id", r.session_id},
              {"dataset_id", r.dataset_id},
              {"item_id", r.item_id},
              {"annotator_id", r.rating.annotator_id},
              {"sub_scores", SubScoresToJson(r.rating.sub_scores)},
              {"comparative", ToString(r.rating.comparative)},
              {"overall", r.overall}};
    if (r.rating.revised_reference_score) {
      j["revised_reference_score"] = *r.rating.revised_reference_score;
    }
    if (r.note) j["note"] = *r.note;
    ratings.push_back(std::move(j));
  }
  return {{"sessions", sessions}, {"ratings", ratings}};
}

}  // namespace rade::annotation
