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

// Annotation sessions over loaded datasets. State is an in-memory
// projection of an append-only JSONL event log; constructing a service over
// an existing log replays it.

#ifndef RADE_ANNOTATION_H_
#define RADE_ANNOTATION_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rade/data_model.h"
#include "rade/error.h"
#include "rade/stats.h"

namespace rade::annotation {

// What the annotator sees. The candidate's source system is never included.
struct AnnotationItem {
  std::string example_id;
  std::vector<Utterance> context;
  std::string reference;
  double reference_score = 0.0;
  std::string candidate;
  std::vector<SubMetric> required_sub_metrics;
  std::size_t position = 0;  // cursor within the session
  std::size_t total = 0;

  nlohmann::json ToJson() const;
};

enum class SessionStatus { kActive, kComplete, kAbandoned };
std::string_view ToString(SessionStatus status);

struct AnnotationSession {
  std::string id;
  std::string annotator_id;
  std::string dataset_id;
  std::vector<std::string> queue;
  std::size_t cursor = 0;
  SessionStatus status = SessionStatus::kActive;

  nlohmann::json ToJson() const;
  friend bool operator==(const AnnotationSession&,
                         const AnnotationSession&) = default;
};

struct RatingSubmission {
  std::string session_id;
  std::string item_id;
  SubScores sub_scores;
  Comparative comparative = Comparative::kTie;
  std::optional<double> revised_reference_score;
  std::optional<std::string> note;

  // Parses the HTTP body; `session_id` comes from the path.
  static RatingSubmission FromJson(const std::string& session_id,
                                   const nlohmann::json& body);
};

struct SubmissionResult {
  bool accepted = false;
  std::optional<double> derived_overall;
  std::vector<Violation> violations;
  // kOrderingViolation when the comparative judgement disagrees with the
  // scores, kMalformedRecord for any other rejection.
  std::optional<ErrorCode> code;

  nlohmann::json ToJson() const;
};

struct StoredRating {
  std::string session_id;
  std::string dataset_id;
  std::string item_id;
  AnnotatorRating rating;
  std::optional<std::string> note;
  double overall = 0.0;

  friend bool operator==(const StoredRating&, const StoredRating&) = default;
};

// Checks a submission against an item's benchmark; shared with clients
// that want to pre-validate.
SubmissionResult CheckSubmission(const AnnotatedExample& example,
                                 const RatingSubmission& submission);

class AnnotationService {
 public:
  // Every example must carry a reference score. Replays `log_path` when it
  // exists.
  AnnotationService(std::vector<Dataset> datasets,
                    std::filesystem::path log_path);

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  AnnotationSession CreateSession(const std::string& annotator_id,
                                  const std::string& dataset_id,
                                  std::uint64_t seed);
  AnnotationSession GetSession(const std::string& session_id) const;
  AnnotationItem NextItem(const std::string& session_id);
  SubmissionResult SubmitRating(const RatingSubmission& submission);
  AnnotationSession AbandonSession(const std::string& session_id);

  // Fleiss' kappa over items rated by at least two annotators in sessions
  // that were not abandoned; items rated more often are cut to the
  // smallest rater count in log order.
  stats::AgreementReport AgreementReport(const std::string& dataset_id) const;
  // The dataset with each example's non-abandoned ratings appended and
  // merged under uniform weights.
  Dataset ExportAnnotations(const std::string& dataset_id) const;
  void ExportAnnotations(const std::string& dataset_id,
                         const std::filesystem::path& path) const;

  std::vector<StoredRating> Ratings() const;
  // Sessions and ratings as JSON; equal across replays of the same log.
  nlohmann::json StateSnapshot() const;
  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  struct DatasetEntry {
    Dataset dataset;
    std::map<std::string, std::size_t> index;  // example id -> position
  };

  const DatasetEntry& FindDataset(const std::string& dataset_id) const;
  AnnotationSession& FindSession(const std::string& session_id);
  const AnnotationSession& FindSession(const std::string& session_id) const;
  bool Rated(const std::string& annotator_id, const std::string& dataset_id,
             const std::string& item_id) const;
  std::vector<const StoredRating*> LiveRatings(
      const std::string& dataset_id) const;

  void Apply(const nlohmann::json& event);
  void Append(const nlohmann::json& event);
  void Replay();

  mutable std::mutex mu_;
  std::map<std::string, DatasetEntry> datasets_;
  std::filesystem::path log_path_;
  std::ofstream log_;
  std::vector<AnnotationSession> sessions_;
  std::map<std::string, std::size_t> session_index_;
  std::vector<StoredRating> ratings_;
};

}  // namespace rade::annotation

#endif  // RADE_ANNOTATION_H_
