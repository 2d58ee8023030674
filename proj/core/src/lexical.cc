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

#include "rade/lexical.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace rade::lexical {
namespace {

using NgramCounts = std::map<TokenSequence, std::size_t>;

NgramCounts CountNgrams(const TokenSequence& tokens, int k) {
  NgramCounts counts;
  const auto width = static_cast<std::size_t>(k);
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    ++counts[TokenSequence(tokens.begin() + i, tokens.begin() + i + width)];
  }
  return counts;
}

// Branch-and-bound over alignments that realize the maximum match count.
class ChunkSearch {
 public:
  ChunkSearch(const TokenSequence& cand, const TokenSequence& ref)
      : cand_(cand), ref_(ref), used_(ref.size(), false) {
    std::map<std::string, std::size_t> cand_count, ref_count;
    for (const auto& t : cand) ++cand_count[t];
    for (const auto& t : ref) ++ref_count[t];
    for (const auto& [t, c] : cand_count) {
      auto it = ref_count.find(t);
      if (it == ref_count.end()) continue;
      need_[t] = std::min(c, it->second);
      matches_ += need_[t];
    }
    // Candidate occurrences of each word at positions >= i.
    remaining_.resize(cand.size() + 1);
    for (std::size_t i = cand.size(); i-- > 0;) {
      remaining_[i] = remaining_[i + 1];
      ++remaining_[i][cand[i]];
    }
  }

  MeteorAlignment Run() {
    if (matches_ == 0) return {};
    best_chunks_ = std::numeric_limits<std::size_t>::max();
    Visit(0, kNone, 0);
    return {matches_, best_chunks_};
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // Beyond this many search nodes the best alignment found so far is kept.
  static constexpr std::size_t kNodeBudget = 4'000'000;

  void Visit(std::size_t i, std::size_t prev_ref, std::size_t chunks) {
    if (chunks >= best_chunks_ || nodes_ > kNodeBudget) return;
    ++nodes_;
    if (i == cand_.size()) {
      best_chunks_ = chunks;
      return;
    }
    const std::string& word = cand_[i];
    auto need_it = need_.find(word);
    const std::size_t need = need_it == need_.end() ? 0 : need_it->second;
    if (need > 0) {
      // Extending the current chunk first finds good bounds early.
      if (prev_ref != kNone && prev_ref + 1 < ref_.size() &&
          !used_[prev_ref + 1] && ref_[prev_ref + 1] == word) {
        Match(i, prev_ref + 1, chunks);
      }
      for (std::size_t j = 0; j < ref_.size(); ++j) {
        if (used_[j] || ref_[j] != word) continue;
        if (prev_ref != kNone && j == prev_ref + 1) continue;
        Match(i, j, chunks + 1);
      }
    }
    // Skip position i only if later occurrences can still satisfy `need`.
    const std::size_t later = remaining_[i + 1].contains(word)
                                  ? remaining_[i + 1].at(word)
                                  : 0;
    if (later >= need) Visit(i + 1, kNone, chunks);
  }

  void Match(std::size_t i, std::size_t j, std::size_t chunks) {
    used_[j] = true;
    --need_[cand_[i]];
    Visit(i + 1, j, chunks);
    ++need_[cand_[i]];
    used_[j] = false;
  }

  const TokenSequence& cand_;
  const TokenSequence& ref_;
  std::vector<bool> used_;
  std::map<std::string, std::size_t> need_;
  std::vector<std::map<std::string, std::size_t>> remaining_;
  std::size_t matches_ = 0;
  std::size_t best_chunks_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

double Bleu(const TokenSequence& candidate, const TokenSequence& reference,
            int n, BleuSmoothing smoothing) {
  if (n < 1) n = 1;
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const NgramCounts cand = CountNgrams(candidate, k);
    const NgramCounts ref = CountNgrams(reference, k);
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : cand) {
      total += static_cast<double>(count);
      auto it = ref.find(gram);
      if (it != ref.end()) {
        matched += static_cast<double>(std::min(count, it->second));
      }
    }
    if (smoothing == BleuSmoothing::kAddOne && k >= 2) {
      matched += 1.0;
      total += 1.0;
    }
    if (matched == 0.0 || total == 0.0) return 0.0;
    log_sum += std::log(matched / total);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * std::exp(log_sum / n);
}

std::size_t LcsLength(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

RougeL RougeLScore(const TokenSequence& candidate,
                   const TokenSequence& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  RougeL out;
  out.precision = lcs / static_cast<double>(candidate.size());
  out.recall = lcs / static_cast<double>(reference.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

MeteorAlignment AlignExact(const TokenSequence& candidate,
                           const TokenSequence& reference) {
  return ChunkSearch(candidate, reference).Run();
}

double Meteor(const TokenSequence& candidate, const TokenSequence& reference,
              const MeteorParams& params) {
  const MeteorAlignment a = AlignExact(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  const double f_mean = precision * recall /
                        (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double penalty =
      params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return f_mean * (1.0 - penalty);
}

}  // namespace rade::lexical
