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

#ifndef RADE_VOCABULARY_H_
#define RADE_VOCABULARY_H_

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rade/tokenizer.h"

namespace rade {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSep = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumSpecials = 5;

  // Specials only.
  Vocabulary();

  // Tokens with frequency >= min_freq, most frequent first, ties broken
  // lexicographically. Throws kEmptyCorpus for an empty corpus.
  static Vocabulary Build(std::span<const std::string> corpus, int min_freq);

  // Specials must already be the leading entries of `tokens`.
  static Vocabulary FromTokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int IdOf(const std::string& token) const;
  const std::string& TokenOf(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Maps tokens to ids; out-of-vocabulary tokens become kUnk and are counted
  // in `unknown` when given.
  std::vector<int> Encode(const TokenSequence& tokens,
                          std::size_t* unknown = nullptr) const;
  TokenSequence Decode(std::span<const int> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  struct Empty {};
  explicit Vocabulary(Empty) {}

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace rade

#endif  // RADE_VOCABULARY_H_
