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

// Seeded synthetic datasets shared by the unit and acceptance tests.

#ifndef RADE_TESTS_SUPPORT_FIXTURES_H_
#define RADE_TESTS_SUPPORT_FIXTURES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rade/data_model.h"
#include "rade/model.h"
#include "rade/retrieval.h"
#include "rade/training.h"

namespace rade::testing {

// Synthetic chitchat dialogues. The reference is a quality word (awful=1 ...
// great=5, which sets s_h) and three content words; the candidate is a
// filler word and three content words, k of which repeat the reference's
// word at the same place, with s_a = 1 + 4k/3. Both scores are present.
Dataset RatedFixture(std::size_t n, std::uint64_t seed,
                     const std::string& name = "synthetic");

// RatedFixture without reference scores, as in cross-domain corpora.
Dataset CrossDomainFixture(std::size_t n, std::uint64_t seed);

// Candidates with human scores but no reference and no reference score.
Dataset ReferenceFreeFixture(std::size_t n, std::uint64_t seed);

// Distinct context/response pairs.
std::vector<retrieval::ContextResponse> RetrievalPairs(std::size_t n,
                                                       std::uint64_t seed);

// Pairs as a dataset (context + reference) for indexing from a file.
Dataset RetrievalCorpus(const std::vector<retrieval::ContextResponse>& pairs);

// Small model and optimizer settings for from-scratch runs on the fixtures.
ModelConfig SmallModelConfig();
training::TrainConfig FastTrainConfig(training::Stage stage, std::uint64_t seed);

RadeModel MakeModel(const Dataset& corpus, const ModelConfig& config,
                    std::uint64_t seed);

// Fraction of examples with s_h < s_a where the model also ranks the
// candidate above the reference.
double RankingAgreement(RadeModel& model, const Dataset& dataset);

// Worst relative error between the analytic gradient of the stage loss on
// `batch` and a central finite difference, over `samples_per_parameter`
// seeded entries of every parameter. The denominator is floored at
// `floor` so entries with near-zero gradient do not dominate.
struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t entries_checked = 0;
};
GradientCheckResult CheckLossGradient(RadeModel& model,
                                      std::span<const AnnotatedExample> batch,
                                      training::Stage stage,
                                      int samples_per_parameter,
                                      std::uint64_t seed, double step = 1e-5,
                                      double floor = 1e-4);

// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string Slurp(const std::filesystem::path& path);

}  // namespace rade::testing

#endif  // RADE_TESTS_SUPPORT_FIXTURES_H_
