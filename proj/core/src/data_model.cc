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

#include "rade/data_model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "rade/error.h"
#include "rade/file_util.h"
#include "rade/log.h"
#include "rade/random.h"

namespace rade {
namespace {

using nlohmann::json;

constexpr double kOrderingTolerance = 1e-9;

template <typename Enum, std::size_t N>
std::optional<Enum> Lookup(std::string_view s,
                           const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (ToString(v) == s) return v;
  }
  return std::nullopt;
}

bool InScoreRange(double v) {
  return std::isfinite(v) && v >= kMinScore && v <= kMaxScore;
}

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedRecord, what);
}

const json& Require(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) Malformed(std::string("missing key '") + key + "'");
  return *it;
}

std::string RequireString(const json& value, const char* key) {
  if (!value.is_string()) Malformed(std::string("'") + key + "' must be a string");
  return value.get<std::string>();
}

std::optional<double> OptionalNumber(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) Malformed(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

const std::set<std::string>& KnownKeys() {
  static const std::set<std::string> keys = {
      "id",        "context",        "reference", "candidate", "reference_score",
      "candidate_score", "domain", "annotations"};
  return keys;
}

}  // namespace

MetricKind KindOf(SubMetric metric) {
  switch (metric) {
    case SubMetric::kRelevance:
    case SubMetric::kEngagingness:
    case SubMetric::kFluency:
      return MetricKind::kGeneral;
    default:
      return MetricKind::kTaskSpecific;
  }
}

std::vector<SubMetric> RequiredSubMetrics(Domain domain) {
  std::vector<SubMetric> metrics = {SubMetric::kRelevance,
                                    SubMetric::kEngagingness,
                                    SubMetric::kFluency};
  switch (domain) {
    case Domain::kChitchat:
      metrics.push_back(SubMetric::kUnderstandability);
      break;
    case Domain::kEmpathetic:
      metrics.push_back(SubMetric::kEmotionalAwareness);
      break;
    case Domain::kPersona:
      metrics.push_back(SubMetric::kPersonalityAwareness);
      break;
    case Domain::kOther:
      break;
  }
  return metrics;
}

std::string_view ToString(Speaker speaker) {
  switch (speaker) {
    case Speaker::kUser1: return "user1";
    case Speaker::kUser2: return "user2";
    case Speaker::kAgent: return "agent";
  }
  return "";
}

std::string_view ToString(SubMetric metric) {
  switch (metric) {
    case SubMetric::kRelevance: return "relevance";
    case SubMetric::kEngagingness: return "engagingness";
    case SubMetric::kFluency: return "fluency";
    case SubMetric::kUnderstandability: return "understandability";
    case SubMetric::kEmotionalAwareness: return "emotional_awareness";
    case SubMetric::kPersonalityAwareness: return "personality_awareness";
  }
  return "";
}

std::string_view ToString(Domain domain) {
  switch (domain) {
    case Domain::kChitchat: return "chitchat";
    case Domain::kEmpathetic: return "empathetic";
    case Domain::kPersona: return "persona";
    case Domain::kOther: return "other";
  }
  return "";
}

std::string_view ToString(Comparative comparative) {
  switch (comparative) {
    case Comparative::kBetter: return "better";
    case Comparative::kWorse: return "worse";
    case Comparative::kTie: return "tie";
  }
  return "";
}

std::string_view ToString(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kDev: return "dev";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnsplit: return "unsplit";
  }
  return "";
}

std::optional<Speaker> ParseSpeaker(std::string_view s) {
  return Lookup(s, std::array{Speaker::kUser1, Speaker::kUser2,
                              Speaker::kAgent});
}
std::optional<SubMetric> ParseSubMetric(std::string_view s) {
  return Lookup(s, kAllSubMetrics);
}
std::optional<Domain> ParseDomain(std::string_view s) {
  return Lookup(s, std::array{Domain::kChitchat, Domain::kEmpathetic,
                              Domain::kPersona, Domain::kOther});
}
std::optional<Comparative> ParseComparative(std::string_view s) {
  return Lookup(s, std::array{Comparative::kBetter, Comparative::kWorse,
                              Comparative::kTie});
}

std::string JoinContext(std::span<const Utterance> context) {
  std::string joined;
  for (const Utterance& u : context) {
    if (!joined.empty()) joined += ' ';
    joined += u.text;
  }
  return joined;
}

// ---------------------------------------------------------------------------
// MetricWeights

MetricWeights MetricWeights::Uniform() { return MetricWeights(); }

MetricWeights MetricWeights::Uniform(std::span<const SubMetric> metrics) {
  MetricWeights w;
  for (SubMetric m : metrics) w.weights_[m] = 0.0;
  for (auto& [m, v] : w.weights_) {
    v = 1.0 / static_cast<double>(w.weights_.size());
  }
  return w;
}

MetricWeights MetricWeights::Proportional(
    const std::map<SubMetric, double>& raw) {
  double total = 0.0;
  for (const auto& [m, v] : raw) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weight for " + std::string(ToString(m)) +
                      " must be non-negative");
    }
    total += v;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "weights must have positive sum");
  }
  MetricWeights w;
  w.normalization_ = WeightNormalization::kProportional;
  for (const auto& [m, v] : raw) w.weights_[m] = v / total;
  return w;
}

MetricWeights MetricWeights::SoftmaxApproval(
    const std::map<SubMetric, double>& approval_rates) {
  if (approval_rates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no approval rates given");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& [m, v] : approval_rates) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "approval rate for " + std::string(ToString(m)) +
                      " must be finite and non-negative");
    }
    peak = std::max(peak, v);
  }
  double total = 0.0;
  for (const auto& [m, v] : approval_rates) total += std::exp(v - peak);
  MetricWeights w;
  w.normalization_ = WeightNormalization::kSoftmaxApproval;
  for (const auto& [m, v] : approval_rates) {
    w.weights_[m] = std::exp(v - peak) / total;
  }
  return w;
}

MetricWeights MetricWeights::RestrictedTo(
    std::span<const SubMetric> metrics) const {
  if (!keyed()) return *this;
  MetricWeights w;
  w.normalization_ = normalization_;
  double total = 0.0;
  for (SubMetric m : metrics) {
    auto it = weights_.find(m);
    if (it == weights_.end()) {
      throw Error(ErrorCode::kKeyMismatch,
                  "no weight for sub-metric " + std::string(ToString(m)));
    }
    w.weights_[m] = it->second;
  }
  for (const auto& [m, v] : w.weights_) total += v;
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "restricted weights have zero mass");
  }
  for (auto& [m, v] : w.weights_) v /= total;
  return w;
}

double AggregateOverall(const SubScores& sub_scores,
                        const MetricWeights& weights) {
  if (sub_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no sub-scores to aggregate");
  }
  if (!weights.keyed()) {
    double sum = 0.0;
    for (const auto& [m, s] : sub_scores) sum += s;
    return sum / static_cast<double>(sub_scores.size());
  }
  const auto& w = weights.weights();
  if (w.size() != sub_scores.size()) {
    throw Error(ErrorCode::kKeyMismatch,
                "weights cover " + std::to_string(w.size()) +
                    " sub-metrics, scores cover " +
                    std::to_string(sub_scores.size()));
  }
  double total = 0.0;
  for (const auto& [m, s] : sub_scores) {
    auto it = w.find(m);
    if (it == w.end()) {
      throw Error(ErrorCode::kKeyMismatch,
                  "no weight for sub-metric " + std::string(ToString(m)));
    }
    total += it->second * s;
  }
  return total;
}

AnnotatedExample MergeAnnotations(const AnnotatedExample& example,
                                  const MetricWeights& weights) {
  if (example.annotations.empty()) {
    throw Error(ErrorCode::kNoAnnotations,
                "example " + example.id + " has no annotations");
  }
  if (example.annotations.size() < 3) {
    LogWarning("example " + example.id + " has only " +
               std::to_string(example.annotations.size()) +
               " annotator(s); at least three are expected");
  }
  // Sum in sorted order so the result does not depend on annotator order.
  std::vector<double> overalls;
  std::vector<double> revisions;
  for (const AnnotatorRating& rating : example.annotations) {
    std::vector<SubMetric> keys;
    for (const auto& [m, s] : rating.sub_scores) keys.push_back(m);
    overalls.push_back(
        AggregateOverall(rating.sub_scores, weights.RestrictedTo(keys)));
    if (rating.revised_reference_score) {
      revisions.push_back(*rating.revised_reference_score);
    }
  }
  auto mean = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  AnnotatedExample merged = example;
  merged.candidate_score = mean(overalls);
  if (!revisions.empty()) merged.reference_score = mean(revisions);
  return merged;
}

std::vector<Violation> ValidateExample(const AnnotatedExample& example,
                                       const ValidationOptions& options) {
  std::vector<Violation> out;
  if (example.id.empty()) out.push_back({"id", "must be non-empty"});
  if (example.context.empty()) {
    out.push_back({"context", "must contain at least one utterance"});
  }
  for (std::size_t i = 0; i < example.context.size(); ++i) {
    if (IsBlank(example.context[i].text)) {
      out.push_back({"context[" + std::to_string(i) + "].text",
                     "must be non-empty after trimming"});
    }
  }
  if (example.reference_score) {
    if (!InScoreRange(*example.reference_score)) {
      out.push_back({"reference_score", "must lie in [1, 5]"});
    }
  } else if (options.require_reference_score) {
    out.push_back({"reference_score", "is required"});
  }
  if (example.candidate_score && !InScoreRange(*example.candidate_score)) {
    out.push_back({"candidate_score", "must lie in [1, 5]"});
  }
  for (std::size_t i = 0; i < example.annotations.size(); ++i) {
    const AnnotatorRating& r = example.annotations[i];
    const std::string prefix = "annotations[" + std::to_string(i) + "]";
    if (r.annotator_id.empty()) {
      out.push_back({prefix + ".annotator_id", "must be non-empty"});
    }
    if (r.sub_scores.empty()) {
      out.push_back({prefix + ".sub_scores", "must be non-empty"});
    }
    bool scores_ok = !r.sub_scores.empty();
    for (const auto& [m, s] : r.sub_scores) {
      if (s < 1 || s > 5) {
        out.push_back({prefix + ".sub_scores." + std::string(ToString(m)),
                       "must be an integer in 1..5"});
        scores_ok = false;
      }
    }
    if (r.revised_reference_score &&
        !InScoreRange(*r.revised_reference_score)) {
      out.push_back({prefix + ".revised_reference_score",
                     "must lie in [1, 5]"});
    }
    std::optional<double> benchmark =
        r.revised_reference_score ? r.revised_reference_score
                                  : example.reference_score;
    if (scores_ok && benchmark) {
      const double overall = AggregateOverall(r.sub_scores,
                                              MetricWeights::Uniform());
      const bool consistent =
          r.comparative == Comparative::kBetter
              ? overall > *benchmark + kOrderingTolerance
          : r.comparative == Comparative::kWorse
              ? overall < *benchmark - kOrderingTolerance
              : std::abs(overall - *benchmark) <= kOrderingTolerance;
      if (!consistent) {
        out.push_back({prefix + ".comparative",
                       "'" + std::string(ToString(r.comparative)) +
                           "' is inconsistent with overall score vs benchmark"});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json ExampleToJson(const AnnotatedExample& example) {
  json record = example.extras.is_object() ? example.extras : json::object();
  record["id"] = example.id;
  json context = json::array();
  for (const Utterance& u : example.context) {
    context.push_back({{"speaker", ToString(u.speaker)}, {"text", u.text}});
  }
  record["context"] = std::move(context);
  record["reference"] = example.reference;
  record["candidate"] = example.candidate;
  if (example.reference_score) {
    record["reference_score"] = *example.reference_score;
  }
  if (example.candidate_score) {
    record["candidate_score"] = *example.candidate_score;
  }
  record["domain"] = ToString(example.domain);
  if (!example.annotations.empty()) {
    json annotations = json::array();
    for (const AnnotatorRating& r : example.annotations) {
      json subs = json::object();
      for (const auto& [m, s] : r.sub_scores) subs[std::string(ToString(m))] = s;
      json a = {{"annotator_id", r.annotator_id},
                {"sub_scores", std::move(subs)},
                {"comparative", ToString(r.comparative)}};
      if (r.revised_reference_score) {
        a["revised_reference_score"] = *r.revised_reference_score;
      }
      annotations.push_back(std::move(a));
    }
    record["annotations"] = std::move(annotations);
  }
  return record;
}

AnnotatedExample ExampleFromJson(const nlohmann::json& record) {
  if (!record.is_object()) Malformed("record must be an object");
  AnnotatedExample ex;
  ex.id = RequireString(Require(record, "id"), "id");

  const json& context = Require(record, "context");
  if (!context.is_array()) Malformed("'context' must be a list");
  for (const json& turn : context) {
    if (!turn.is_object()) Malformed("context turns must be objects");
    Utterance u;
    const std::string speaker =
        RequireString(Require(turn, "speaker"), "speaker");
    auto parsed = ParseSpeaker(speaker);
    if (!parsed) Malformed("unknown speaker '" + speaker + "'");
    u.speaker = *parsed;
    u.text = RequireString(Require(turn, "text"), "text");
    ex.context.push_back(std::move(u));
  }

  if (auto it = record.find("reference"); it != record.end() && !it->is_null()) {
    ex.reference = RequireString(*it, "reference");
  }
  if (auto it = record.find("candidate"); it != record.end() && !it->is_null()) {
    ex.candidate = RequireString(*it, "candidate");
  }
  ex.reference_score = OptionalNumber(record, "reference_score");
  ex.candidate_score = OptionalNumber(record, "candidate_score");

  if (auto it = record.find("domain"); it != record.end()) {
    const std::string domain = RequireString(*it, "domain");
    auto parsed = ParseDomain(domain);
    if (!parsed) Malformed("unknown domain '" + domain + "'");
    ex.domain = *parsed;
  }

  if (auto it = record.find("annotations");
      it != record.end() && !it->is_null()) {
    if (!it->is_array()) Malformed("'annotations' must be a list");
    for (const json& a : *it) {
      if (!a.is_object()) Malformed("annotations must be objects");
      AnnotatorRating r;
      r.annotator_id =
          RequireString(Require(a, "annotator_id"), "annotator_id");
      const json& subs = Require(a, "sub_scores");
      if (!subs.is_object()) Malformed("'sub_scores' must be an object");
      for (const auto& [key, value] : subs.items()) {
        auto metric = ParseSubMetric(key);
        if (!metric) Malformed("unknown sub-metric '" + key + "'");
        if (!value.is_number_integer()) {
          Malformed("sub-score '" + key + "' must be an integer");
        }
        r.sub_scores[*metric] = value.get<int>();
      }
      const std::string comparative =
          RequireString(Require(a, "comparative"), "comparative");
      auto parsed = ParseComparative(comparative);
      if (!parsed) Malformed("unknown comparative '" + comparative + "'");
      r.comparative = *parsed;
      r.revised_reference_score =
          OptionalNumber(a, "revised_reference_score");
      ex.annotations.push_back(std::move(r));
    }
  }

  for (const auto& [key, value] : record.items()) {
    if (!KnownKeys().contains(key)) ex.extras[key] = value;
  }
  return ex;
}

Dataset LoadDataset(const std::filesystem::path& path,
                    const LoadOptions& options, LoadStats* stats) {
  const std::string contents = ReadFile(path);
  Dataset dataset;
  dataset.name = path.stem().string();
  LoadStats local;
  std::set<std::string> seen;
  ValidationOptions validation{options.require_reference_score};

  std::istringstream lines(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (IsBlank(line)) continue;
    ++local.records;
    const std::string where = path.string() + ":" + std::to_string(line_no);

    AnnotatedExample example;
    try {
      example = ExampleFromJson(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  where + ": malformed record: " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedRecord, where + ": " + e.what());
    }

    std::string problem;
    ErrorCode code = ErrorCode::kMalformedRecord;
    if (auto violations = ValidateExample(example, validation);
        !violations.empty()) {
      problem = violations.front().field + ": " + violations.front().rule;
    } else if (seen.contains(example.id)) {
      problem = "duplicate id '" + example.id + "'";
      code = ErrorCode::kDuplicateId;
    }
    if (!problem.empty()) {
      if (options.strict) throw Error(code, where + ": " + problem);
      ++local.skipped;
      local.skip_reasons.push_back("line " + std::to_string(line_no) + ": " +
                                   problem);
      continue;
    }
    seen.insert(example.id);
    dataset.examples.push_back(std::move(example));
  }
  if (local.skipped > 0) {
    LogWarning(path.string() + ": skipped " + std::to_string(local.skipped) +
               " invalid record(s)");
  }
  if (stats) *stats = std::move(local);
  return dataset;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out;
  for (const AnnotatedExample& example : dataset.examples) {
    out += ExampleToJson(example).dump();
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

DatasetSplits SplitDataset(const Dataset& dataset,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split ratios must be positive");
    }
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }
  const std::size_t n = dataset.examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  Shuffle(std::span<std::size_t>(order), rng);

  // The epsilon absorbs representation error in ratios such as 5/7.
  auto floor_count = [n](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  };
  const std::size_t n_train = std::min(n, floor_count(ratios[0]));
  const std::size_t n_dev = std::min(n - n_train, floor_count(ratios[1]));

  DatasetSplits splits;
  splits.train = {dataset.name + ".train", {}, SplitTag::kTrain};
  splits.dev = {dataset.name + ".dev", {}, SplitTag::kDev};
  splits.test = {dataset.name + ".test", {}, SplitTag::kTest};
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& target = i < n_train           ? splits.train
                      : i < n_train + n_dev ? splits.dev
                                            : splits.test;
    target.examples.push_back(dataset.examples[order[i]]);
  }
  return splits;
}

}  // namespace rade
