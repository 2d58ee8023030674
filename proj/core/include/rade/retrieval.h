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

// Okapi BM25 over dialogue contexts, used to pick a pseudo-reference
// response for contexts that have no human reference.

#ifndef RADE_RETRIEVAL_H_
#define RADE_RETRIEVAL_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rade/data_model.h"
#include "rade/tokenizer.h"

namespace rade::retrieval {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ContextResponse {
  std::string context;
  std::string response;
};

struct Hit {
  std::size_t doc = 0;
  std::string response;
  double score = 0.0;
};

class RetrievalIndex {
 public:
  RetrievalIndex() = default;

  static RetrievalIndex Build(const std::vector<ContextResponse>& pairs,
                              const Bm25Params& params = {});
  // Reference field is the paired response; examples without a reference
  // are not indexed.
  static RetrievalIndex FromDataset(const Dataset& dataset,
                                    const Bm25Params& params = {});

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const Bm25Params& params() const { return params_; }
  double average_length() const { return avg_length_; }
  std::size_t DocumentFrequency(const std::string& term) const;
  const TokenSequence& document(std::size_t doc) const;
  const std::string& response(std::size_t doc) const;

  // ln((N - df + 0.5) / (df + 0.5) + 1); never negative.
  double Idf(const std::string& term) const;

  // Sum over query tokens of idf * tf * (k1 + 1) /
  // (tf + k1 * (1 - b + b * len / avg_len)). Throws kInvalidDocument.
  double Score(const TokenSequence& query, std::size_t doc) const;

  // Top-k documents by score, ties broken by insertion order. Throws
  // kEmptyIndex.
  std::vector<Hit> Retrieve(const TokenSequence& query, std::size_t k) const;

  // Line-delimited file: a header record with format, version, parameters
  // and document frequencies, then one record per document.
  void Save(const std::filesystem::path& path) const;
  static RetrievalIndex Load(const std::filesystem::path& path);

 private:
  void Finalize();

  Bm25Params params_;
  std::vector<TokenSequence> docs_;
  std::vector<std::map<std::string, int>> term_counts_;
  std::vector<std::string> responses_;
  std::map<std::string, std::size_t> doc_freq_;
  double avg_length_ = 0.0;
};

inline constexpr int kIndexVersion = 1;

// BM25 query for an example: the full context, or only its last turn.
TokenSequence ContextQuery(const AnnotatedExample& example, bool last_turn_only);

// Source of generated pseudo-references (e.g. a large language model); not
// implemented here.
using ReferenceProvider = std::function<std::string(const std::string& context)>;

}  // namespace rade::retrieval

#endif  // RADE_RETRIEVAL_H_
