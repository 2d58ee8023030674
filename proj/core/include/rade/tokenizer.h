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

#ifndef RADE_TOKENIZER_H_
#define RADE_TOKENIZER_H_

#include <string>
#include <string_view>
#include <vector>

namespace rade {

using TokenSequence = std::vector<std::string>;

// Lowercases, splits on whitespace, and emits every ASCII punctuation
// character as its own token. Shared by the lexical metrics, the model
// vocabulary and the BM25 index.
TokenSequence Tokenize(std::string_view text);

}  // namespace rade

#endif  // RADE_TOKENIZER_H_
