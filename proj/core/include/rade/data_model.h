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

// Dataset schema for reference-assisted evaluation data: dialogue context,
// a pre-scored reference response, a candidate response, and the raw
// per-annotator sub-metric ratings that produce the candidate's score.

#ifndef RADE_DATA_MODEL_H_
#define RADE_DATA_MODEL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace rade {

inline constexpr double kMinScore = 1.0;
inline constexpr double kMaxScore = 5.0;

enum class Speaker { kUser1, kUser2, kAgent };

struct Utterance {
  Speaker speaker = Speaker::kUser1;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

enum class SubMetric {
  kRelevance,
  kEngagingness,
  kFluency,
  kUnderstandability,
  kEmotionalAwareness,
  kPersonalityAwareness,
};

enum class MetricKind { kGeneral, kTaskSpecific };

inline constexpr std::array<SubMetric, 6> kAllSubMetrics = {
    SubMetric::kRelevance,         SubMetric::kEngagingness,
    SubMetric::kFluency,           SubMetric::kUnderstandability,
    SubMetric::kEmotionalAwareness, SubMetric::kPersonalityAwareness};

MetricKind KindOf(SubMetric metric);

enum class Domain { kChitchat, kEmpathetic, kPersona, kOther };

// The three general sub-metrics plus the task-specific one tied to the
// domain (none for kOther).
std::vector<SubMetric> RequiredSubMetrics(Domain domain);

enum class Comparative { kBetter, kWorse, kTie };

using SubScores = std::map<SubMetric, int>;

struct AnnotatorRating {
  std::string annotator_id;
  SubScores sub_scores;
  Comparative comparative = Comparative::kTie;
  std::optional<double> revised_reference_score;

  friend bool operator==(const AnnotatorRating&,
                         const AnnotatorRating&) = default;
};

struct AnnotatedExample {
  std::string id;
  std::vector<Utterance> context;
  std::string reference;
  std::string candidate;
  std::optional<double> reference_score;
  std::optional<double> candidate_score;
  Domain domain = Domain::kOther;
  std::vector<AnnotatorRating> annotations;
  // Keys not in the schema, carried through load/save untouched.
  nlohmann::json extras = nlohmann::json::object();

  friend bool operator==(const AnnotatedExample&,
                         const AnnotatedExample&) = default;
};

enum class SplitTag { kTrain, kDev, kTest, kUnsplit };

struct Dataset {
  std::string name;
  std::vector<AnnotatedExample> examples;
  SplitTag split_tag = SplitTag::kUnsplit;
};

// String forms used in the file format and on the wire.
std::string_view ToString(Speaker speaker);
std::string_view ToString(SubMetric metric);
std::string_view ToString(Domain domain);
std::string_view ToString(Comparative comparative);
std::string_view ToString(SplitTag tag);
std::optional<Speaker> ParseSpeaker(std::string_view s);
std::optional<SubMetric> ParseSubMetric(std::string_view s);
std::optional<Domain> ParseDomain(std::string_view s);
std::optional<Comparative> ParseComparative(std::string_view s);

// Context turns joined by single spaces.
std::string JoinContext(std::span<const Utterance> context);

enum class WeightNormalization { kUniform, kProportional, kSoftmaxApproval };

// Sub-metric weights for collapsing sub-scores into one overall score.
// Weights always sum to one. A keyless uniform instance adapts to whatever
// sub-metrics it is applied to.
class MetricWeights {
 public:
  MetricWeights() = default;

  static MetricWeights Uniform();
  static MetricWeights Uniform(std::span<const SubMetric> metrics);
  // raw[i] / sum(raw); raw values must be non-negative with a positive sum.
  static MetricWeights Proportional(const std::map<SubMetric, double>& raw);
  // exp(rate_i) / sum_j exp(rate_j) over approval rates.
  static MetricWeights SoftmaxApproval(
      const std::map<SubMetric, double>& approval_rates);

  WeightNormalization normalization() const { return normalization_; }
  const std::map<SubMetric, double>& weights() const { return weights_; }
  bool keyed() const { return !weights_.empty(); }

  // Weight restricted to `metrics` and renormalized; throws kKeyMismatch
  // if any metric has no weight.
  MetricWeights RestrictedTo(std::span<const SubMetric> metrics) const;

 private:
  WeightNormalization normalization_ = WeightNormalization::kUniform;
  std::map<SubMetric, double> weights_;
};

// Sum of w_i * score_i. Keyed weights must cover exactly the keys of
// `sub_scores`.
double AggregateOverall(const SubScores& sub_scores,
                        const MetricWeights& weights);

// Sets candidate_score to the mean over annotators of their aggregated
// overall score. If any annotator revised the reference score, the mean of
// the revisions replaces reference_score.
AnnotatedExample MergeAnnotations(const AnnotatedExample& example,
                                  const MetricWeights& weights);

struct Violation {
  std::string field;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationOptions {
  // Cross-domain pre-training data carries no reference score.
  bool require_reference_score = true;
};

std::vector<Violation> ValidateExample(const AnnotatedExample& example,
                                       const ValidationOptions& options = {});

struct LoadOptions {
  bool strict = true;
  bool require_reference_score = true;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t skipped = 0;
  // "line N: field: rule" for every skipped record.
  std::vector<std::string> skip_reasons;
};

Dataset LoadDataset(const std::filesystem::path& path,
                    const LoadOptions& options = {},
                    LoadStats* stats = nullptr);

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);

nlohmann::json ExampleToJson(const AnnotatedExample& example);
// Throws kMalformedRecord on schema type errors (not on range violations).
AnnotatedExample ExampleFromJson(const nlohmann::json& record);

struct DatasetSplits {
  Dataset train;
  Dataset dev;
  Dataset test;
};

// Seeded shuffle, then floor(n * ratio) for train and dev; test takes the
// remainder.
DatasetSplits SplitDataset(const Dataset& dataset,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

}  // namespace rade

#endif  // RADE_DATA_MODEL_H_
