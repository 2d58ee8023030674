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

#include "rade/vocabulary.h"

#include <algorithm>
#include <map>

#include "rade/error.h"

namespace rade {

Vocabulary::Vocabulary()
    : Vocabulary(FromTokens({"[PAD]", "[BOS]", "[EOS]", "[SEP]", "[UNK]"})) {}

Vocabulary Vocabulary::Build(std::span<const std::string> corpus,
                             int min_freq) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot build a vocabulary from nothing");
  }
  std::map<std::string, long long> freq;
  for (const std::string& text : corpus) {
    for (std::string& tok : Tokenize(text)) ++freq[std::move(tok)];
  }
  std::vector<std::pair<std::string, long long>> entries;
  for (auto& [tok, count] : freq) {
    if (count >= min_freq) entries.emplace_back(tok, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens = Vocabulary().tokens();
  for (auto& [tok, count] : entries) tokens.push_back(tok);
  return FromTokens(std::move(tokens));
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  static const char* kSpecials[] = {"[PAD]", "[BOS]", "[EOS]", "[SEP]",
                                    "[UNK]"};
  if (tokens.size() < kNumSpecials) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary is missing specials");
  }
  Vocabulary v{Empty{}};
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vocabulary special token " + std::to_string(i) +
                      " must be " + kSpecials[i]);
    }
  }
  v.tokens_ = std::move(tokens);
  for (int i = 0; i < v.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::IdOf(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::Encode(const TokenSequence& tokens,
                                    std::size_t* unknown) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    const int id = IdOf(tok);
    if (id == kUnk && unknown != nullptr) ++*unknown;
    ids.push_back(id);
  }
  return ids;
}

TokenSequence Vocabulary::Decode(std::span<const int> ids) const {
  TokenSequence out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(TokenOf(id));
  return out;
}

}  // namespace rade
