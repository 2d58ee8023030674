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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "rade/data_model.h"
#include "rade/error.h"
#include "rade/random.h"
#include "support/fixtures.h"

namespace rade {
namespace {

using ::rade::testing::TempDir;

AnnotatedExample Example(const std::string& id) {
  AnnotatedExample ex;
  ex.id = id;
  ex.context = {{Speaker::kUser1, "hi there"}, {Speaker::kAgent, "hello"}};
  ex.reference = "nice to meet you";
  ex.candidate = "hey";
  ex.reference_score = 3.0;
  ex.candidate_score = 4.0;
  ex.domain = Domain::kChitchat;
  return ex;
}

AnnotatorRating Rating(const std::string& who, SubScores scores,
                       Comparative c = Comparative::kTie,
                       std::optional<double> revised = std::nullopt) {
  return {who, std::move(scores), c, revised};
}

void WriteLines(const std::filesystem::path& path,
                const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kUsage;
}

TEST(SubMetricTest, KindsFollowTheCriteriaTable) {
  EXPECT_EQ(KindOf(SubMetric::kRelevance), MetricKind::kGeneral);
  EXPECT_EQ(KindOf(SubMetric::kEngagingness), MetricKind::kGeneral);
  EXPECT_EQ(KindOf(SubMetric::kFluency), MetricKind::kGeneral);
  EXPECT_EQ(KindOf(SubMetric::kUnderstandability), MetricKind::kTaskSpecific);
  EXPECT_EQ(KindOf(SubMetric::kEmotionalAwareness), MetricKind::kTaskSpecific);
  EXPECT_EQ(KindOf(SubMetric::kPersonalityAwareness), MetricKind::kTaskSpecific);
}

TEST(SubMetricTest, PersonaRequiresFourMetrics) {
  const auto m = RequiredSubMetrics(Domain::kPersona);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_NE(std::find(m.begin(), m.end(), SubMetric::kPersonalityAwareness), m.end());
  EXPECT_EQ(RequiredSubMetrics(Domain::kEmpathetic).back(),
            SubMetric::kEmotionalAwareness);
}

TEST(AggregateOverallTest, Examples) {
  EXPECT_EQ(AggregateOverall({{SubMetric::kRelevance, 4},
                              {SubMetric::kEngagingness, 4},
                              {SubMetric::kFluency, 4},
                              {SubMetric::kUnderstandability, 4}},
                             MetricWeights::Uniform()),
            4.0);
  const SubScores two = {{SubMetric::kRelevance, 5}, {SubMetric::kEngagingness, 3}};
  EXPECT_EQ(AggregateOverall(two, MetricWeights::Uniform()), 4.0);
  const auto w = MetricWeights::Proportional(
      {{SubMetric::kRelevance, 0.75}, {SubMetric::kEngagingness, 0.25}});
  EXPECT_NEAR(AggregateOverall(two, w), 4.5, 1e-12);
}

TEST(AggregateOverallTest, KeyMismatchIsAnError) {
  const auto w = MetricWeights::Proportional(
      {{SubMetric::kRelevance, 0.5}, {SubMetric::kFluency, 0.5}});
  const SubScores s = {{SubMetric::kRelevance, 5}, {SubMetric::kEngagingness, 3}};
  EXPECT_EQ(CodeOf([&] { AggregateOverall(s, w); }), ErrorCode::kKeyMismatch);
  EXPECT_EQ(CodeOf([&] { AggregateOverall({}, MetricWeights::Uniform()); }),
            ErrorCode::kInvalidArgument);
}

TEST(AggregateOverallTest, UniformIsMeanAndConvex) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    SubScores s;
    std::vector<double> raw;
    for (SubMetric m : kAllSubMetrics) {
      if (UniformIndex(rng, 2) == 0 && !s.empty()) continue;
      s[m] = 1 + static_cast<int>(UniformIndex(rng, 5));
    }
    double sum = 0;
    int lo = 5, hi = 1;
    for (const auto& [m, v] : s) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(s.size());
    EXPECT_NEAR(AggregateOverall(s, MetricWeights::Uniform()), mean, 1e-12);

    std::map<SubMetric, double> raw_w;
    for (const auto& [m, v] : s) raw_w[m] = 0.01 + UniformReal(rng);
    const double weighted = AggregateOverall(s, MetricWeights::Proportional(raw_w));
    EXPECT_GE(weighted, lo - 1e-12);
    EXPECT_LE(weighted, hi + 1e-12);
  }
}

TEST(MetricWeightsTest, SoftmaxNormalizes) {
  const auto w = MetricWeights::SoftmaxApproval({{SubMetric::kRelevance, 0.9},
                                                 {SubMetric::kEngagingness, 0.5},
                                                 {SubMetric::kFluency, 0.7}});
  double total = 0;
  for (const auto& [m, v] : w.weights()) total += v;
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_EQ(w.normalization(), WeightNormalization::kSoftmaxApproval);
  const double z = std::exp(0.9) + std::exp(0.5) + std::exp(0.7);
  EXPECT_NEAR(w.weights().at(SubMetric::kRelevance), std::exp(0.9) / z, 1e-12);
}

TEST(MergeAnnotationsTest, Examples) {
  AnnotatedExample ex = Example("a");
  ex.candidate_score.reset();
  const SubScores three = {{SubMetric::kRelevance, 3}, {SubMetric::kFluency, 3}};
  ex.annotations = {Rating("x", three), Rating("y", three), Rating("z", three)};
  EXPECT_EQ(*MergeAnnotations(ex, MetricWeights::Uniform()).candidate_score, 3.0);

  ex.annotations = {Rating("x", {{SubMetric::kRelevance, 2}}),
                    Rating("y", {{SubMetric::kRelevance, 3}}),
                    Rating("z", {{SubMetric::kRelevance, 4}})};
  EXPECT_EQ(*MergeAnnotations(ex, MetricWeights::Uniform()).candidate_score, 3.0);
}

TEST(MergeAnnotationsTest, RevisionsReplaceReferenceScore) {
  AnnotatedExample ex = Example("a");
  ex.reference_score = 5.0;
  ex.annotations = {Rating("x", {{SubMetric::kRelevance, 2}}, Comparative::kWorse, 3.0),
                    Rating("y", {{SubMetric::kRelevance, 3}}, Comparative::kWorse, 4.0),
                    Rating("z", {{SubMetric::kRelevance, 4}}, Comparative::kWorse)};
  EXPECT_EQ(*MergeAnnotations(ex, MetricWeights::Uniform()).reference_score, 3.5);
}

TEST(MergeAnnotationsTest, NoAnnotationsIsAnError) {
  EXPECT_EQ(CodeOf([] { MergeAnnotations(Example("a"), MetricWeights::Uniform()); }),
            ErrorCode::kNoAnnotations);
}

TEST(MergeAnnotationsTest, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    AnnotatedExample ex = Example("p");
    const std::size_t k = 1 + UniformIndex(rng, 6);
    for (std::size_t i = 0; i < k; ++i) {
      SubScores s;
      for (SubMetric m : RequiredSubMetrics(Domain::kPersona)) {
        s[m] = 1 + static_cast<int>(UniformIndex(rng, 5));
      }
      std::optional<double> revised;
      if (UniformIndex(rng, 3) == 0) revised = 1.0 + UniformIndex(rng, 5);
      ex.annotations.push_back(Rating("a" + std::to_string(i), s, Comparative::kTie, revised));
    }
    const AnnotatedExample merged = MergeAnnotations(ex, MetricWeights::Uniform());
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      Shuffle(std::span<AnnotatorRating>(ex.annotations), rng);
      const AnnotatedExample again = MergeAnnotations(ex, MetricWeights::Uniform());
      EXPECT_EQ(*again.candidate_score, *merged.candidate_score);
      EXPECT_EQ(*again.reference_score, *merged.reference_score);
    }
  }
}

TEST(ValidateExampleTest, Examples) {
  EXPECT_TRUE(ValidateExample(Example("ok")).empty());

  AnnotatedExample low = Example("low");
  low.reference_score = 0.5;
  const auto v = ValidateExample(low);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "reference_score");

  AnnotatedExample two = Example("two");
  two.context.clear();
  two.candidate_score = 6.0;
  EXPECT_EQ(ValidateExample(two).size(), 2u);
}

TEST(ValidateExampleTest, ComparativeMustMatchScores) {
  AnnotatedExample ex = Example("c");
  ex.annotations = {Rating("x", {{SubMetric::kRelevance, 2}}, Comparative::kBetter)};
  const auto v = ValidateExample(ex);
  ASSERT_EQ(v.size(), 1u);
  ex.annotations = {Rating("x", {{SubMetric::kRelevance, 4}}, Comparative::kBetter)};
  EXPECT_TRUE(ValidateExample(ex).empty());
  ex.annotations = {Rating("x", {{SubMetric::kRelevance, 6}}, Comparative::kBetter)};
  EXPECT_FALSE(ValidateExample(ex).empty());
}

TEST(ValidateExampleTest, ReferenceScoreOptionalOnRequest) {
  AnnotatedExample ex = Example("n");
  ex.reference_score.reset();
  EXPECT_EQ(ValidateExample(ex).size(), 1u);
  EXPECT_TRUE(ValidateExample(ex, {.require_reference_score = false}).empty());
}

TEST(LoadDatasetTest, EmptyAndThreeLines) {
  TempDir dir;
  WriteLines(dir / "empty.jsonl", {});
  EXPECT_TRUE(LoadDataset(dir / "empty.jsonl").examples.empty());

  std::vector<std::string> lines;
  for (const char* id : {"x1", "x2", "x3"}) {
    lines.push_back(ExampleToJson(Example(id)).dump());
  }
  WriteLines(dir / "three.jsonl", lines);
  const Dataset d = LoadDataset(dir / "three.jsonl");
  ASSERT_EQ(d.examples.size(), 3u);
  EXPECT_EQ(d.examples[0].id, "x1");
  EXPECT_EQ(d.examples[2].id, "x3");
}

TEST(LoadDatasetTest, LenientSkipsInvalidLine) {
  TempDir dir;
  AnnotatedExample bad = Example("b");
  bad.reference_score = 7.0;
  WriteLines(dir / "d.jsonl", {ExampleToJson(Example("a")).dump(),
                               ExampleToJson(bad).dump(),
                               ExampleToJson(Example("c")).dump()});
  LoadStats stats;
  const Dataset d = LoadDataset(dir / "d.jsonl", {.strict = false}, &stats);
  EXPECT_EQ(d.examples.size(), 2u);
  EXPECT_EQ(stats.skipped, 1u);
  EXPECT_EQ(stats.records, 3u);
  EXPECT_EQ(CodeOf([&] { LoadDataset(dir / "d.jsonl"); }), ErrorCode::kMalformedRecord);
}

TEST(LoadDatasetTest, Errors) {
  TempDir dir;
  EXPECT_EQ(CodeOf([&] { LoadDataset(dir / "missing.jsonl"); }), ErrorCode::kMissingFile);

  WriteLines(dir / "dup.jsonl", {ExampleToJson(Example("a")).dump(),
                                 ExampleToJson(Example("a")).dump()});
  EXPECT_EQ(CodeOf([&] { LoadDataset(dir / "dup.jsonl"); }), ErrorCode::kDuplicateId);

  WriteLines(dir / "bad.jsonl", {ExampleToJson(Example("a")).dump(), "{not json"});
  try {
    LoadDataset(dir / "bad.jsonl", {.strict = false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(LoadDatasetTest, RoundTripPreservesEverything) {
  TempDir dir;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset d = testing::RatedFixture(1 + UniformIndex(rng, 12), trial);
    d.name = "rt";
    for (auto& ex : d.examples) {
      if (UniformIndex(rng, 2) == 0) ex.candidate_score.reset();
      ex.candidate_score = ex.candidate_score.has_value()
                               ? std::optional<double>(1.0 + 4.0 * UniformReal(rng))
                               : std::nullopt;
      ex.extras["source"] = "gen";
      ex.extras["nested"] = {{"k", trial}};
      if (UniformIndex(rng, 2) == 0) {
        const double overall = 1.0 + UniformIndex(rng, 5);
        const Comparative c = overall > *ex.reference_score   ? Comparative::kBetter
                              : overall < *ex.reference_score ? Comparative::kWorse
                                                              : Comparative::kTie;
        ex.annotations.push_back(
            Rating("ann", {{SubMetric::kRelevance, static_cast<int>(overall)}}, c));
      }
    }
    SaveDataset(d, dir / "rt.jsonl");
    const Dataset back = LoadDataset(dir / "rt.jsonl");
    ASSERT_EQ(back.examples.size(), d.examples.size());
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
      EXPECT_EQ(back.examples[i], d.examples[i]) << ExampleToJson(d.examples[i]).dump();
    }
  }
}

TEST(SplitDatasetTest, Examples) {
  const Dataset seven = testing::RatedFixture(7, 1);
  const auto s = SplitDataset(seven, {5.0 / 7, 1.0 / 7, 1.0 / 7}, 9);
  EXPECT_EQ(s.train.examples.size(), 5u);
  EXPECT_EQ(s.dev.examples.size(), 1u);
  EXPECT_EQ(s.test.examples.size(), 1u);
  EXPECT_EQ(s.train.split_tag, SplitTag::kTrain);

  const Dataset ten = testing::RatedFixture(10, 1);
  EXPECT_EQ(CodeOf([&] { SplitDataset(ten, {1.0, 0.0, 0.0}, 1); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { SplitDataset(ten, {0.5, 0.2, 0.2}, 1); }),
            ErrorCode::kInvalidArgument);
}

TEST(SplitDatasetTest, PartitionAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Dataset d = testing::RatedFixture(3 + seed, seed);
    const auto a = SplitDataset(d, {0.6, 0.2, 0.2}, seed);
    const auto b = SplitDataset(d, {0.6, 0.2, 0.2}, seed);
    std::multiset<std::string> ids;
    for (const Dataset* part : {&a.train, &a.dev, &a.test}) {
      for (const auto& ex : part->examples) ids.insert(ex.id);
    }
    std::multiset<std::string> expected;
    for (const auto& ex : d.examples) expected.insert(ex.id);
    EXPECT_EQ(ids, expected);
    ASSERT_EQ(a.train.examples.size(), b.train.examples.size());
    for (std::size_t i = 0; i < a.train.examples.size(); ++i) {
      EXPECT_EQ(a.train.examples[i].id, b.train.examples[i].id);
    }
    const std::size_t n = d.examples.size();
    EXPECT_EQ(a.train.examples.size(),
              static_cast<std::size_t>(std::floor(n * 0.6 + 1e-9)));
  }
}

}  // namespace
}  // namespace rade
