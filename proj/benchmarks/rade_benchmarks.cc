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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "rade/lexical.h"
#include "rade/model.h"
#include "rade/retrieval.h"
#include "rade/stats.h"
#include "rade/vocabulary.h"

namespace {

std::vector<double> RandomScores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

rade::TokenSequence RandomTokens(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  rade::TokenSequence out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(rng() % 50));
  return out;
}

void BM_Kendall(benchmark::State& state) {
  const auto x = RandomScores(state.range(0), 1);
  const auto y = RandomScores(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(rade::stats::Kendall(x, y));
}
BENCHMARK(BM_Kendall)->Arg(100)->Arg(1000);

void BM_PermutationPValue(benchmark::State& state) {
  const auto x = RandomScores(200, 1);
  const auto y = RandomScores(200, 2);
  rade::stats::PermutationOptions options;
  options.n_permutations = 999;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        rade::stats::PermutationPValue(x, y, rade::stats::Statistic::kSpearman, options));
  }
}
BENCHMARK(BM_PermutationPValue);

void BM_Bleu2(benchmark::State& state) {
  const auto a = RandomTokens(state.range(0), 3);
  const auto b = RandomTokens(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(rade::lexical::Bleu(a, b, 2));
}
BENCHMARK(BM_Bleu2)->Arg(20)->Arg(200);

void BM_RougeL(benchmark::State& state) {
  const auto a = RandomTokens(state.range(0), 3);
  const auto b = RandomTokens(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(rade::lexical::RougeLScore(a, b));
}
BENCHMARK(BM_RougeL)->Arg(20)->Arg(200);

void BM_Meteor(benchmark::State& state) {
  const auto a = RandomTokens(state.range(0), 3);
  const auto b = RandomTokens(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(rade::lexical::Meteor(a, b));
}
BENCHMARK(BM_Meteor)->Arg(10)->Arg(20);

void BM_Bm25Retrieve(benchmark::State& state) {
  std::vector<rade::retrieval::ContextResponse> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    std::string context;
    for (const auto& t : RandomTokens(12, i)) context += t + " ";
    pairs.push_back({context, "r" + std::to_string(i)});
  }
  const auto index = rade::retrieval::RetrievalIndex::Build(pairs);
  const auto query = RandomTokens(12, 99);
  for (auto _ : state) benchmark::DoNotOptimize(index.Retrieve(query, 5));
}
BENCHMARK(BM_Bm25Retrieve)->Arg(1000);

void BM_ModelScore(benchmark::State& state) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 20; ++i) {
    std::string s;
    for (const auto& t : RandomTokens(10, i)) s += t + " ";
    corpus.push_back(s);
  }
  rade::ModelConfig config;
  config.dropout = 0.0;
  rade::RadeModel model(config, rade::Vocabulary::Build(corpus, 1), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.Score(corpus[0], corpus[1], corpus[2]));
  }
}
BENCHMARK(BM_ModelScore);

}  // namespace

BENCHMARK_MAIN();
