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

// Reference-based lexical baselines: BLEU-n, ROUGE-L and exact-match METEOR.

#ifndef RADE_LEXICAL_H_
#define RADE_LEXICAL_H_

#include <cstddef>

#include "rade/tokenizer.h"

namespace rade::lexical {

enum class BleuSmoothing { kNone, kAddOne };

// Geometric mean of clipped k-gram precisions (k = 1..n) times the brevity
// penalty. kAddOne adds one to numerator and denominator for k >= 2.
// An empty candidate scores 0.
double Bleu(const TokenSequence& candidate, const TokenSequence& reference,
            int n = 2, BleuSmoothing smoothing = BleuSmoothing::kNone);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

std::size_t LcsLength(const TokenSequence& a, const TokenSequence& b);

RougeL RougeLScore(const TokenSequence& candidate,
                   const TokenSequence& reference);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Maximum number of exact unigram matches, and among those alignments the
// fewest chunks (runs contiguous in both sequences).
MeteorAlignment AlignExact(const TokenSequence& candidate,
                           const TokenSequence& reference);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

double Meteor(const TokenSequence& candidate, const TokenSequence& reference,
              const MeteorParams& params = {});

}  // namespace rade::lexical

#endif  // RADE_LEXICAL_H_
