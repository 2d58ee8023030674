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

#include "support/fixtures.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "rade/random.h"
#include "rade/vocabulary.h"

namespace rade::testing {
namespace {

constexpr std::array<const char*, 5> kQuality = {"awful", "poor", "okay",
                                                 "good", "great"};
constexpr std::array<const char*, 6> kTopics = {"music", "movies", "food",
                                                "travel", "sports", "books"};
constexpr std::array<const char*, 10> kContent = {
    "sure", "fun", "like", "love", "think", "maybe", "yes", "cool", "new", "old"};
constexpr std::size_t kContentLength = 3;
constexpr std::array<const char*, 4> kFiller = {"indeed", "really", "today",
                                                "honestly"};

const char* Pick(const auto& words, std::mt19937_64& rng) {
  return words[UniformIndex(rng, words.size())];
}

}  // namespace

Dataset RatedFixture(std::size_t n, std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.name = name;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotatedExample ex;
    ex.id = name + "-" + std::to_string(i);
    ex.domain = Domain::kChitchat;
    const char* topic = Pick(kTopics, rng);
    ex.context = {{Speaker::kUser1, std::string("do you like ") + topic},
                  {Speaker::kUser2, std::string(Pick(kFiller, rng)) + " " + topic}};

    // Reference: quality word + three distinct content words.
    std::vector<std::size_t> words(kContent.size());
    for (std::size_t w = 0; w < words.size(); ++w) words[w] = w;
    Shuffle(std::span<std::size_t>(words), rng);
    const std::size_t q = UniformIndex(rng, kQuality.size());
    // Candidate keeps `k` of the reference's content words in place and
    // swaps the rest for words the reference does not use.
    const std::size_t k = UniformIndex(rng, kContentLength + 1);
    std::vector<std::size_t> keep(kContentLength);
    for (std::size_t w = 0; w < kContentLength; ++w) keep[w] = w;
    Shuffle(std::span<std::size_t>(keep), rng);
    keep.resize(k);

    std::string reference = kQuality[q];
    std::string candidate = Pick(kFiller, rng);
    std::size_t spare = kContentLength;
    for (std::size_t w = 0; w < kContentLength; ++w) {
      reference += std::string(" ") + kContent[words[w]];
      const bool kept = std::find(keep.begin(), keep.end(), w) != keep.end();
      candidate += std::string(" ") + kContent[words[kept ? w : spare++]];
    }
    ex.reference = reference;
    ex.candidate = candidate;
    ex.reference_score = 1.0 + static_cast<double>(q);
    ex.candidate_score =
        1.0 + 4.0 * static_cast<double>(k) / static_cast<double>(kContentLength);
    d.examples.push_back(std::move(ex));
  }
  return d;
}

Dataset CrossDomainFixture(std::size_t n, std::uint64_t seed) {
  Dataset d = RatedFixture(n, seed, "crossdomain");
  for (auto& ex : d.examples) {
    ex.reference_score.reset();
    ex.domain = Domain::kOther;
  }
  return d;
}

Dataset ReferenceFreeFixture(std::size_t n, std::uint64_t seed) {
  Dataset d = RatedFixture(n, seed, "reffree");
  for (auto& ex : d.examples) {
    ex.reference.clear();
    ex.reference_score.reset();
  }
  return d;
}

std::vector<retrieval::ContextResponse> RetrievalPairs(std::size_t n,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<retrieval::ContextResponse> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream ctx;
    ctx << "tell me about " << Pick(kTopics, rng) << " number" << i << " "
        << Pick(kFiller, rng);
    std::ostringstream resp;
    resp << Pick(kQuality, rng) << " answer " << i;
    pairs.push_back({ctx.str(), resp.str()});
  }
  return pairs;
}

Dataset RetrievalCorpus(const std::vector<retrieval::ContextResponse>& pairs) {
  Dataset d;
  d.name = "corpus";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    AnnotatedExample ex;
    ex.id = "corpus-" + std::to_string(i);
    ex.context = {{Speaker::kUser1, pairs[i].context}};
    ex.reference = pairs[i].response;
    d.examples.push_back(std::move(ex));
  }
  return d;
}

ModelConfig SmallModelConfig() {
  ModelConfig c;
  c.d_model = 32;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.ff_width = 64;
  c.max_length = 32;
  c.dropout = 0.0;
  return c;
}

training::TrainConfig FastTrainConfig(training::Stage stage, std::uint64_t seed) {
  training::TrainConfig c;
  c.stage = stage;
  c.learning_rate = 1e-3;
  c.batch_size = 8;
  c.seed = seed;
  return c;
}

RadeModel MakeModel(const Dataset& corpus, const ModelConfig& config,
                    std::uint64_t seed) {
  std::vector<std::string> texts;
  for (const auto& ex : corpus.examples) {
    texts.push_back(JoinContext(ex.context));
    texts.push_back(ex.reference);
    texts.push_back(ex.candidate);
  }
  return RadeModel(config, Vocabulary::Build(texts, 1), seed);
}

double RankingAgreement(RadeModel& model, const Dataset& dataset) {
  std::size_t pairs = 0;
  std::size_t agree = 0;
  for (const auto& ex : dataset.examples) {
    if (!(*ex.reference_score < *ex.candidate_score)) continue;
    ++pairs;
    const ScorePair s =
        model.Score(JoinContext(ex.context), ex.reference, ex.candidate);
    if (s.candidate > s.reference) ++agree;
  }
  return pairs == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(pairs);
}

GradientCheckResult CheckLossGradient(RadeModel& model,
                                      std::span<const AnnotatedExample> batch,
                                      training::Stage stage,
                                      int samples_per_parameter,
                                      std::uint64_t seed, double step,
                                      double floor) {
  auto loss = [&] {
    return training::BatchLoss(model, batch, stage, {}, {}, false).total;
  };
  model.ZeroGrad();
  training::BatchLoss(model, batch, stage, {}, {}, true);
  std::mt19937_64 rng(seed);
  GradientCheckResult result;
  for (auto& p : model.parameters()) {
    const Eigen::Index size = p.value.size();
    for (int s = 0; s < samples_per_parameter; ++s) {
      const Eigen::Index k = static_cast<Eigen::Index>(rng() % size);
      double& w = p.value.data()[k];
      const double saved = w;
      w = saved + step;
      const double up = loss();
      w = saved - step;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = p.grad.data()[k];
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic), floor});
      const double err = std::abs(numeric - analytic) / denom;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
      }
      ++result.entries_checked;
    }
  }
  return result;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("rade-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace rade::testing
