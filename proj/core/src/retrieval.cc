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

#include "rade/retrieval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rade/error.h"
#include "rade/file_util.h"

namespace rade::retrieval {

using nlohmann::json;

RetrievalIndex RetrievalIndex::Build(const std::vector<ContextResponse>& pairs,
                                     const Bm25Params& params) {
  RetrievalIndex index;
  index.params_ = params;
  for (const ContextResponse& pair : pairs) {
    index.docs_.push_back(Tokenize(pair.context));
    index.responses_.push_back(pair.response);
  }
  index.Finalize();
  return index;
}

RetrievalIndex RetrievalIndex::FromDataset(const Dataset& dataset,
                                           const Bm25Params& params) {
  std::vector<ContextResponse> pairs;
  for (const AnnotatedExample& ex : dataset.examples) {
    if (ex.reference.empty()) continue;
    pairs.push_back({JoinContext(ex.context), ex.reference});
  }
  return Build(pairs, params);
}

void RetrievalIndex::Finalize() {
  term_counts_.clear();
  doc_freq_.clear();
  std::size_t total = 0;
  for (const TokenSequence& doc : docs_) {
    std::map<std::string, int> counts;
    for (const std::string& t : doc) ++counts[t];
    for (const auto& [t, c] : counts) ++doc_freq_[t];
    term_counts_.push_back(std::move(counts));
    total += doc.size();
  }
  avg_length_ = docs_.empty() ? 0.0
                              : static_cast<double>(total) /
                                    static_cast<double>(docs_.size());
}

std::size_t RetrievalIndex::DocumentFrequency(const std::string& term) const {
  auto it = doc_freq_.find(term);
  return it == doc_freq_.end() ? 0 : it->second;
}

const TokenSequence& RetrievalIndex::document(std::size_t doc) const {
  if (doc >= docs_.size()) {
    throw Error(ErrorCode::kInvalidDocument,
                "no document " + std::to_string(doc));
  }
  return docs_[doc];
}

const std::string& RetrievalIndex::response(std::size_t doc) const {
  if (doc >= docs_.size()) {
    throw Error(ErrorCode::kInvalidDocument,
                "no document " + std::to_string(doc));
  }
  return responses_[doc];
}

double RetrievalIndex::Idf(const std::string& term) const {
  const double n = static_cast<double>(docs_.size());
  const double df = static_cast<double>(DocumentFrequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double RetrievalIndex::Score(const TokenSequence& query, std::size_t doc) const {
  if (doc >= docs_.size()) {
    throw Error(ErrorCode::kInvalidDocument,
                "no document " + std::to_string(doc));
  }
  const auto& counts = term_counts_[doc];
  // An empty document set has avg_length 0 only when every doc is empty.
  const double length_ratio =
      avg_length_ > 0.0 ? static_cast<double>(docs_[doc].size()) / avg_length_
                        : 0.0;
  const double norm = params_.k1 * (1.0 - params_.b + params_.b * length_ratio);
  double score = 0.0;
  for (const std::string& term : query) {
    auto it = counts.find(term);
    if (it == counts.end()) continue;
    const double tf = it->second;
    score += Idf(term) * tf * (params_.k1 + 1.0) / (tf + norm);
  }
  return score;
}

std::vector<Hit> RetrievalIndex::Retrieve(const TokenSequence& query,
                                          std::size_t k) const {
  if (docs_.empty()) {
    throw Error(ErrorCode::kEmptyIndex, "retrieval index is empty");
  }
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  std::vector<Hit> hits;
  hits.reserve(docs_.size());
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    hits.push_back({d, responses_[d], Score(query, d)});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.score > b.score;
  });
  hits.resize(std::min(k, hits.size()));
  return hits;
}

void RetrievalIndex::Save(const std::filesystem::path& path) const {
  json header = {{"format", "rade-bm25-index"},
                 {"version", kIndexVersion},
                 {"k1", params_.k1},
                 {"b", params_.b},
                 {"n_docs", docs_.size()},
                 {"avg_length", avg_length_},
                 {"doc_freq", doc_freq_}};
  std::string out = header.dump() + "\n";
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    out += json{{"tokens", docs_[d]}, {"response", responses_[d]}}.dump() + "\n";
  }
  WriteFileAtomic(path, out);
}

RetrievalIndex RetrievalIndex::Load(const std::filesystem::path& path) {
  std::istringstream lines(ReadFile(path));
  std::string line;
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedRecord,
                 "bad index file " + path.string() + ": " + why);
  };
  try {
    if (!std::getline(lines, line)) throw malformed("missing header");
    const json header = json::parse(line);
    if (header.value("format", "") != "rade-bm25-index") {
      throw malformed("not a BM25 index");
    }
    if (header.at("version").get<int>() != kIndexVersion) {
      throw malformed("unsupported version");
    }
    RetrievalIndex index;
    index.params_.k1 = header.at("k1").get<double>();
    index.params_.b = header.at("b").get<double>();
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const json doc = json::parse(line);
      index.docs_.push_back(doc.at("tokens").get<TokenSequence>());
      index.responses_.push_back(doc.at("response").get<std::string>());
    }
    index.Finalize();
    if (index.docs_.size() != header.at("n_docs").get<std::size_t>() ||
        index.doc_freq_ !=
            header.at("doc_freq").get<std::map<std::string, std::size_t>>()) {
      throw malformed("statistics do not match the documents");
    }
    return index;
  } catch (const json::exception& e) {
    throw malformed(e.what());
  }
}

TokenSequence ContextQuery(const AnnotatedExample& example,
                           bool last_turn_only) {
  if (last_turn_only && !example.context.empty()) {
    return Tokenize(example.context.back().text);
  }
  return Tokenize(JoinContext(example.context));
}

}  // namespace rade::retrieval
