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

// The reference-assisted scorer: a transformer encoder reads
// "context [SEP] reference [SEP] candidate", mean pooling plus a two-layer
// regression head predicts scores for the reference and the candidate, and
// a transformer decoder over the same encoder (applied to the context
// alone) models the probability of the reference response.

#ifndef RADE_MODEL_H_
#define RADE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rade/autodiff.h"
#include "rade/tokenizer.h"
#include "rade/vocabulary.h"

namespace rade {

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_encoder_layers = 2;
  int n_decoder_layers = 2;
  int ff_width = 128;
  int max_length = 128;
  double dropout = 0.1;

  // Throws kInvalidArgument.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ScorePair {
  double reference = 0.0;  // predicted s_h
  double candidate = 0.0;  // predicted s_a
};

struct EncodedBatch {
  std::vector<int> tokens;  // the concatenated input X
  ad::Matrix hidden;        // H, one row per token of X
  std::vector<bool> mask;   // true = attend / pool
  ad::Matrix context_hidden;  // encoding of the context alone
};

// Token ids for one example, before truncation.
struct ExampleIds {
  std::vector<int> context;
  std::vector<int> reference;
  std::vector<int> candidate;
};

// Dropout is applied only when `training` and `rng` are both set.
struct ForwardMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

namespace model_internal {

struct LayerNormParams {
  int gain = -1;
  int bias = -1;
};

struct AttentionParams {
  int wq = -1, bq = -1, wk = -1, bk = -1, wv = -1, bv = -1, wo = -1, bo = -1;
};

struct FeedForwardParams {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

struct EncoderLayer {
  LayerNormParams norm1;
  AttentionParams self_attention;
  LayerNormParams norm2;
  FeedForwardParams feed_forward;
};

struct DecoderLayer {
  LayerNormParams norm1;
  AttentionParams self_attention;
  LayerNormParams norm2;
  AttentionParams cross_attention;
  LayerNormParams norm3;
  FeedForwardParams feed_forward;
};

}  // namespace model_internal

// The one encoder stack; both the posterior path and the generation path go
// through it.
struct Encoder {
  int positions = -1;
  std::vector<model_internal::EncoderLayer> layers;
  model_internal::LayerNormParams final_norm;
};

struct Decoder {
  int positions = -1;
  std::vector<model_internal::DecoderLayer> layers;
  model_internal::LayerNormParams final_norm;
};

struct RegressionHead {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

class RadeModel {
 public:
  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero except the
  // score head output, which starts at the middle of the 1..5 scale.
  RadeModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }

  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  ad::Parameter& parameter(int index) { return params_.at(index); }
  const ad::Parameter& parameter(const std::string& name) const;
  ad::Parameter& parameter(const std::string& name);
  std::size_t ParameterCount() const;
  void ZeroGrad();

  const Encoder& posterior_encoder() const { return encoder_; }
  const Encoder& context_encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const RegressionHead& head() const { return head_; }
  int token_embedding() const { return token_embedding_; }

  // Tokenization with the shared tokenizer. Context turns are joined with
  // spaces; [SEP] only separates context, reference and candidate.
  ExampleIds Ids(const std::string& context, const std::string& reference,
                 const std::string& candidate) const;

  // X = context [SEP] reference [SEP] candidate, dropping the oldest context
  // tokens to fit max_length. Throws kSequenceTooLong when the responses
  // alone do not fit.
  std::vector<int> PosteriorInput(const ExampleIds& ids) const;
  // Most recent max_length context tokens.
  std::vector<int> ContextInput(const std::vector<int>& context) const;

  // ---- Tape-level building blocks (used by training) ----
  ad::Var Encode(ad::Tape& tape, const std::vector<int>& tokens,
                 const ForwardMode& mode);
  // Decoder logits for each position of `inputs` given the encoded context.
  ad::Var DecodeLogits(ad::Tape& tape, ad::Var memory,
                       const std::vector<int>& inputs, const ForwardMode& mode);
  // 1 x 2 row (s_h, s_a) from a pooled 1 x d row.
  ad::Var Head(ad::Tape& tape, ad::Var pooled);
  // Posterior encoding, pooling and head: 1 x 2 scores.
  ad::Var ScoresOnTape(ad::Tape& tape, const ExampleIds& ids,
                       const ForwardMode& mode);
  // log P(reference | context) summed over reference tokens plus EOS.
  ad::Var ReferenceLogProbOnTape(ad::Tape& tape, const ExampleIds& ids,
                                 const ForwardMode& mode);

  // ---- Inference API ----
  EncodedBatch EncodePosterior(const std::string& context,
                               const std::string& reference,
                               const std::string& candidate);
  static ad::RowVector Pool(const EncodedBatch& batch);
  // Throws kNonFinite on a non-finite output.
  ScorePair PredictScores(const ad::RowVector& pooled);
  ScorePair Score(const std::string& context, const std::string& reference,
                  const std::string& candidate);

  // Teacher-forced, single decoder pass. Target tokens outside the
  // vocabulary are scored as [UNK] and counted in `unknown`.
  double GenerationLogProb(const std::string& context,
                           const std::string& reference,
                           std::size_t* unknown = nullptr);
  // Same quantity, re-running the decoder on each prefix.
  double GenerationLogProbStepwise(const std::string& context,
                                   const std::string& reference);
  // Per-position log-probability rows over the vocabulary.
  ad::Matrix GenerationLogProbTable(const std::string& context,
                                    const std::string& reference);

  // Greedy decoding; stops at [EOS] or after max_len tokens. Ties go to the
  // lowest token id.
  TokenSequence Generate(const std::string& context, int max_len);

 private:
  int AddParameter(const std::string& name, int rows, int cols,
                   double init_bound, std::mt19937_64& rng);
  int AddConstantParameter(const std::string& name, int rows, int cols,
                           double value);
  model_internal::LayerNormParams AddLayerNorm(const std::string& prefix);
  model_internal::AttentionParams AddAttention(const std::string& prefix,
                                               std::mt19937_64& rng);
  model_internal::FeedForwardParams AddFeedForward(const std::string& prefix,
                                                   std::mt19937_64& rng);

  ad::Var Norm(ad::Tape& tape, ad::Var x,
               const model_internal::LayerNormParams& p);
  ad::Var MultiHead(ad::Tape& tape, ad::Var query_in, ad::Var kv_in,
                    const model_internal::AttentionParams& p, bool causal);
  ad::Var FeedForward(ad::Tape& tape, ad::Var x,
                      const model_internal::FeedForwardParams& p);
  ad::Var Embed(ad::Tape& tape, const std::vector<int>& tokens,
                int positions_param);
  ad::Var MaybeDropout(ad::Tape& tape, ad::Var x, const ForwardMode& mode);

  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<ad::Parameter> params_;
  int token_embedding_ = -1;
  Encoder encoder_;
  Decoder decoder_;
  RegressionHead head_;
};

}  // namespace rade

#endif  // RADE_MODEL_H_
