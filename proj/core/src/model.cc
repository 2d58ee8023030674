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

#include "rade/model.h"

#include <cmath>
#include <utility>

#include "rade/error.h"
#include "rade/random.h"

namespace rade {

using ad::Matrix;
using ad::Tape;
using ad::Var;
using model_internal::AttentionParams;
using model_internal::FeedForwardParams;
using model_internal::LayerNormParams;

namespace {

// Initial score-head output bias: the middle of the 1..5 rating scale.
constexpr double kInitialScoreBias = 3.0;

}  // namespace

void ModelConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "model config: " + what);
  };
  if (d_model <= 0) fail("d_model must be positive");
  if (n_heads <= 0 || d_model % n_heads != 0) {
    fail("d_model must be divisible by n_heads");
  }
  if (n_encoder_layers < 0 || n_decoder_layers < 0) {
    fail("layer counts must be non-negative");
  }
  if (ff_width <= 0) fail("ff_width must be positive");
  if (max_length < 8) fail("max_length must be at least 8");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"d_model", d_model},
          {"n_heads", n_heads},
          {"n_encoder_layers", n_encoder_layers},
          {"n_decoder_layers", n_decoder_layers},
          {"ff_width", ff_width},
          {"max_length", max_length},
          {"dropout", dropout}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_encoder_layers = j.value("n_encoder_layers", c.n_encoder_layers);
  c.n_decoder_layers = j.value("n_decoder_layers", c.n_decoder_layers);
  c.ff_width = j.value("ff_width", c.ff_width);
  c.max_length = j.value("max_length", c.max_length);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

RadeModel::RadeModel(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const int d = config_.d_model;
  const double embed_bound = 1.0 / std::sqrt(static_cast<double>(d));

  // Reserve so parameter references stay valid while building.
  params_.reserve(static_cast<std::size_t>(
      11 + 16 * config_.n_encoder_layers + 26 * config_.n_decoder_layers));

  token_embedding_ =
      AddParameter("embed.tokens", vocab_.size(), d, embed_bound, rng);

  encoder_.positions = AddParameter("encoder.positions", config_.max_length, d,
                                    embed_bound, rng);
  for (int l = 0; l < config_.n_encoder_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    model_internal::EncoderLayer layer;
    layer.norm1 = AddLayerNorm(p + "norm1");
    layer.self_attention = AddAttention(p + "self_attention", rng);
    layer.norm2 = AddLayerNorm(p + "norm2");
    layer.feed_forward = AddFeedForward(p + "feed_forward", rng);
    encoder_.layers.push_back(layer);
  }
  encoder_.final_norm = AddLayerNorm("encoder.final_norm");

  decoder_.positions = AddParameter("decoder.positions", config_.max_length, d,
                                    embed_bound, rng);
  for (int l = 0; l < config_.n_decoder_layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l) + ".";
    model_internal::DecoderLayer layer;
    layer.norm1 = AddLayerNorm(p + "norm1");
    layer.self_attention = AddAttention(p + "self_attention", rng);
    layer.norm2 = AddLayerNorm(p + "norm2");
    layer.cross_attention = AddAttention(p + "cross_attention", rng);
    layer.norm3 = AddLayerNorm(p + "norm3");
    layer.feed_forward = AddFeedForward(p + "feed_forward", rng);
    decoder_.layers.push_back(layer);
  }
  decoder_.final_norm = AddLayerNorm("decoder.final_norm");

  const double head_bound = 1.0 / std::sqrt(static_cast<double>(d));
  head_.w1 = AddParameter("head.w1", d, d, head_bound, rng);
  head_.b1 = AddConstantParameter("head.b1", 1, d, 0.0);
  head_.w2 = AddParameter("head.w2", d, 2, head_bound, rng);
  head_.b2 = AddConstantParameter("head.b2", 1, 2, kInitialScoreBias);
}

int RadeModel::AddParameter(const std::string& name, int rows, int cols,
                            double init_bound, std::mt19937_64& rng) {
  ad::Parameter p;
  p.name = name;
  p.value.resize(rows, cols);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = (2.0 * UniformReal(rng) - 1.0) * init_bound;
  }
  p.ZeroGrad();
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int RadeModel::AddConstantParameter(const std::string& name, int rows,
                                    int cols, double value) {
  ad::Parameter p;
  p.name = name;
  p.value = Matrix::Constant(rows, cols, value);
  p.ZeroGrad();
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

LayerNormParams RadeModel::AddLayerNorm(const std::string& prefix) {
  return {AddConstantParameter(prefix + ".gain", 1, config_.d_model, 1.0),
          AddConstantParameter(prefix + ".bias", 1, config_.d_model, 0.0)};
}

AttentionParams RadeModel::AddAttention(const std::string& prefix,
                                        std::mt19937_64& rng) {
  const int d = config_.d_model;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionParams a;
  a.wq = AddParameter(prefix + ".wq", d, d, bound, rng);
  a.bq = AddConstantParameter(prefix + ".bq", 1, d, 0.0);
  a.wk = AddParameter(prefix + ".wk", d, d, bound, rng);
  a.bk = AddConstantParameter(prefix + ".bk", 1, d, 0.0);
  a.wv = AddParameter(prefix + ".wv", d, d, bound, rng);
  a.bv = AddConstantParameter(prefix + ".bv", 1, d, 0.0);
  a.wo = AddParameter(prefix + ".wo", d, d, bound, rng);
  a.bo = AddConstantParameter(prefix + ".bo", 1, d, 0.0);
  return a;
}

FeedForwardParams RadeModel::AddFeedForward(const std::string& prefix,
                                            std::mt19937_64& rng) {
  const int d = config_.d_model;
  const int f = config_.ff_width;
  FeedForwardParams ff;
  ff.w1 = AddParameter(prefix + ".w1", d, f, 1.0 / std::sqrt(double(d)), rng);
  ff.b1 = AddConstantParameter(prefix + ".b1", 1, f, 0.0);
  ff.w2 = AddParameter(prefix + ".w2", f, d, 1.0 / std::sqrt(double(f)), rng);
  ff.b2 = AddConstantParameter(prefix + ".b2", 1, d, 0.0);
  return ff;
}

const ad::Parameter& RadeModel::parameter(const std::string& name) const {
  for (const ad::Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "no parameter named " + name);
}

ad::Parameter& RadeModel::parameter(const std::string& name) {
  return const_cast<ad::Parameter&>(std::as_const(*this).parameter(name));
}

std::size_t RadeModel::ParameterCount() const {
  std::size_t total = 0;
  for (const ad::Parameter& p : params_) {
    total += static_cast<std::size_t>(p.value.size());
  }
  return total;
}

void RadeModel::ZeroGrad() {
  for (ad::Parameter& p : params_) p.ZeroGrad();
}

// ---------------------------------------------------------------------------
// Inputs

ExampleIds RadeModel::Ids(const std::string& context,
                          const std::string& reference,
                          const std::string& candidate) const {
  return {vocab_.Encode(Tokenize(context)), vocab_.Encode(Tokenize(reference)),
          vocab_.Encode(Tokenize(candidate))};
}

std::vector<int> RadeModel::PosteriorInput(const ExampleIds& ids) const {
  const std::size_t max_len = static_cast<std::size_t>(config_.max_length);
  const std::size_t fixed = ids.reference.size() + ids.candidate.size() + 2;
  if (fixed > max_len) {
    throw Error(ErrorCode::kSequenceTooLong,
                "reference and candidate need " + std::to_string(fixed) +
                    " positions, max_length is " + std::to_string(max_len));
  }
  const std::size_t keep = std::min(ids.context.size(), max_len - fixed);
  std::vector<int> x(ids.context.end() - static_cast<std::ptrdiff_t>(keep),
                     ids.context.end());
  x.push_back(Vocabulary::kSep);
  x.insert(x.end(), ids.reference.begin(), ids.reference.end());
  x.push_back(Vocabulary::kSep);
  x.insert(x.end(), ids.candidate.begin(), ids.candidate.end());
  return x;
}

std::vector<int> RadeModel::ContextInput(const std::vector<int>& context) const {
  if (context.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dialogue context is empty");
  }
  const std::size_t keep =
      std::min(context.size(), static_cast<std::size_t>(config_.max_length));
  return {context.end() - static_cast<std::ptrdiff_t>(keep), context.end()};
}

// ---------------------------------------------------------------------------
// Tape building blocks

Var RadeModel::MaybeDropout(Tape& tape, Var x, const ForwardMode& mode) {
  if (!mode.training || mode.rng == nullptr || config_.dropout <= 0.0) return x;
  return tape.Dropout(x, config_.dropout, *mode.rng);
}

Var RadeModel::Norm(Tape& tape, Var x, const LayerNormParams& p) {
  return tape.LayerNorm(x, tape.Param(params_[p.gain]),
                        tape.Param(params_[p.bias]));
}

Var RadeModel::MultiHead(Tape& tape, Var query_in, Var kv_in,
                         const AttentionParams& p, bool causal) {
  auto P = [&](int i) { return tape.Param(params_[i]); };
  Var q = tape.Linear(query_in, P(p.wq), P(p.bq));
  Var k = tape.Linear(kv_in, P(p.wk), P(p.bk));
  Var v = tape.Linear(kv_in, P(p.wv), P(p.bv));
  Var attended = tape.Attention(q, k, v, config_.n_heads, causal);
  return tape.Linear(attended, P(p.wo), P(p.bo));
}

Var RadeModel::FeedForward(Tape& tape, Var x, const FeedForwardParams& p) {
  auto P = [&](int i) { return tape.Param(params_[i]); };
  Var hidden = tape.Gelu(tape.Linear(x, P(p.w1), P(p.b1)));
  return tape.Linear(hidden, P(p.w2), P(p.b2));
}

Var RadeModel::Embed(Tape& tape, const std::vector<int>& tokens,
                     int positions_param) {
  if (tokens.size() > static_cast<std::size_t>(config_.max_length)) {
    throw Error(ErrorCode::kSequenceTooLong,
                "sequence of " + std::to_string(tokens.size()) +
                    " tokens exceeds max_length");
  }
  Var tok = tape.GatherRows(tape.Param(params_[token_embedding_]), tokens);
  Var pos = tape.SliceRows(tape.Param(params_[positions_param]), 0,
                           static_cast<int>(tokens.size()));
  return tape.Add(tok, pos);
}

Var RadeModel::Encode(Tape& tape, const std::vector<int>& tokens,
                      const ForwardMode& mode) {
  Var x = MaybeDropout(tape, Embed(tape, tokens, encoder_.positions), mode);
  for (const auto& layer : encoder_.layers) {
    Var a = Norm(tape, x, layer.norm1);
    x = tape.Add(x, MaybeDropout(
                        tape, MultiHead(tape, a, a, layer.self_attention, false),
                        mode));
    Var f = Norm(tape, x, layer.norm2);
    x = tape.Add(x, MaybeDropout(tape, FeedForward(tape, f, layer.feed_forward),
                                 mode));
  }
  return Norm(tape, x, encoder_.final_norm);
}

Var RadeModel::DecodeLogits(Tape& tape, Var memory,
                            const std::vector<int>& inputs,
                            const ForwardMode& mode) {
  Var y = MaybeDropout(tape, Embed(tape, inputs, decoder_.positions), mode);
  for (const auto& layer : decoder_.layers) {
    Var a = Norm(tape, y, layer.norm1);
    y = tape.Add(y, MaybeDropout(
                        tape, MultiHead(tape, a, a, layer.self_attention, true),
                        mode));
    Var c = Norm(tape, y, layer.norm2);
    y = tape.Add(y, MaybeDropout(tape,
                                 MultiHead(tape, c, memory,
                                           layer.cross_attention, false),
                                 mode));
    Var f = Norm(tape, y, layer.norm3);
    y = tape.Add(y, MaybeDropout(tape, FeedForward(tape, f, layer.feed_forward),
                                 mode));
  }
  y = Norm(tape, y, decoder_.final_norm);
  // Output projection tied to the token embeddings.
  return tape.MatMulTransposed(y, tape.Param(params_[token_embedding_]));
}

Var RadeModel::Head(Tape& tape, Var pooled) {
  auto P = [&](int i) { return tape.Param(params_[i]); };
  Var hidden = tape.Tanh(tape.Linear(pooled, P(head_.w1), P(head_.b1)));
  return tape.Linear(hidden, P(head_.w2), P(head_.b2));
}

Var RadeModel::ScoresOnTape(Tape& tape, const ExampleIds& ids,
                            const ForwardMode& mode) {
  const std::vector<int> x = PosteriorInput(ids);
  Var hidden = Encode(tape, x, mode);
  Var pooled = tape.MaskedMeanRows(hidden, std::vector<bool>(x.size(), true));
  return Head(tape, pooled);
}

Var RadeModel::ReferenceLogProbOnTape(Tape& tape, const ExampleIds& ids,
                                      const ForwardMode& mode) {
  if (ids.reference.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "reference response is empty");
  }
  if (ids.reference.size() + 1 > static_cast<std::size_t>(config_.max_length)) {
    throw Error(ErrorCode::kSequenceTooLong,
                "reference of " + std::to_string(ids.reference.size()) +
                    " tokens exceeds the decoder length");
  }
  Var memory = Encode(tape, ContextInput(ids.context), mode);
  std::vector<int> inputs = {Vocabulary::kBos};
  inputs.insert(inputs.end(), ids.reference.begin(), ids.reference.end());
  std::vector<int> targets(ids.reference.begin(), ids.reference.end());
  targets.push_back(Vocabulary::kEos);
  Var logits = DecodeLogits(tape, memory, inputs, mode);
  return tape.SumTargetLogProbs(logits, targets);
}

// ---------------------------------------------------------------------------
// Inference

EncodedBatch RadeModel::EncodePosterior(const std::string& context,
                                        const std::string& reference,
                                        const std::string& candidate) {
  const ExampleIds ids = Ids(context, reference, candidate);
  EncodedBatch batch;
  batch.tokens = PosteriorInput(ids);
  batch.mask.assign(batch.tokens.size(), true);
  Tape tape;
  batch.hidden = tape.Value(Encode(tape, batch.tokens, {}));
  if (!ids.context.empty()) {
    Tape context_tape;
    batch.context_hidden =
        context_tape.Value(Encode(context_tape, ContextInput(ids.context), {}));
  }
  return batch;
}

ad::RowVector RadeModel::Pool(const EncodedBatch& batch) {
  Tape tape;
  Var h = tape.Constant(batch.hidden);
  return tape.Value(tape.MaskedMeanRows(h, batch.mask));
}

ScorePair RadeModel::PredictScores(const ad::RowVector& pooled) {
  if (pooled.cols() != config_.d_model) {
    throw Error(ErrorCode::kInvalidArgument, "pooled width must equal d_model");
  }
  Tape tape;
  const Matrix& out = tape.Value(Head(tape, tape.Constant(pooled)));
  if (!out.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "score head produced a non-finite value");
  }
  return {out(0, 0), out(0, 1)};
}

ScorePair RadeModel::Score(const std::string& context,
                           const std::string& reference,
                           const std::string& candidate) {
  Tape tape;
  const Matrix& out =
      tape.Value(ScoresOnTape(tape, Ids(context, reference, candidate), {}));
  if (!out.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "score head produced a non-finite value");
  }
  return {out(0, 0), out(0, 1)};
}

double RadeModel::GenerationLogProb(const std::string& context,
                                    const std::string& reference,
                                    std::size_t* unknown) {
  ExampleIds ids;
  ids.context = vocab_.Encode(Tokenize(context));
  ids.reference = vocab_.Encode(Tokenize(reference), unknown);
  Tape tape;
  return tape.Scalar(ReferenceLogProbOnTape(tape, ids, {}));
}

Matrix RadeModel::GenerationLogProbTable(const std::string& context,
                                         const std::string& reference) {
  const std::vector<int> ref = vocab_.Encode(Tokenize(reference));
  Tape tape;
  Var memory =
      Encode(tape, ContextInput(vocab_.Encode(Tokenize(context))), {});
  std::vector<int> inputs = {Vocabulary::kBos};
  inputs.insert(inputs.end(), ref.begin(), ref.end());
  return ad::LogSoftmaxRows(tape.Value(DecodeLogits(tape, memory, inputs, {})));
}

double RadeModel::GenerationLogProbStepwise(const std::string& context,
                                            const std::string& reference) {
  const std::vector<int> ref = vocab_.Encode(Tokenize(reference));
  if (ref.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "reference response is empty");
  }
  Tape memory_tape;
  Var memory_var = Encode(
      memory_tape, ContextInput(vocab_.Encode(Tokenize(context))), {});
  const Matrix memory = memory_tape.Value(memory_var);

  std::vector<int> targets = ref;
  targets.push_back(Vocabulary::kEos);
  std::vector<int> prefix = {Vocabulary::kBos};
  double total = 0.0;
  for (int target : targets) {
    Tape tape;
    Var logits = DecodeLogits(tape, tape.Constant(memory), prefix, {});
    const Matrix& all = tape.Value(logits);
    const Matrix last = all.bottomRows(1);
    total += ad::LogSoftmaxRows(last)(0, target);
    prefix.push_back(target);
  }
  return total;
}

TokenSequence RadeModel::Generate(const std::string& context, int max_len) {
  TokenSequence out;
  if (max_len <= 0) return out;
  Tape memory_tape;
  Var memory_var = Encode(
      memory_tape, ContextInput(vocab_.Encode(Tokenize(context))), {});
  const Matrix memory = memory_tape.Value(memory_var);
  std::vector<int> prefix = {Vocabulary::kBos};
  const int limit = std::min(max_len, config_.max_length - 1);
  for (int step = 0; step < limit; ++step) {
    Tape tape;
    const Matrix& logits =
        tape.Value(DecodeLogits(tape, tape.Constant(memory), prefix, {}));
    const Eigen::Index last = logits.rows() - 1;
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(last, j) > logits(last, best)) best = static_cast<int>(j);
    }
    if (best == Vocabulary::kEos) break;
    out.push_back(vocab_.TokenOf(best));
    prefix.push_back(best);
  }
  return out;
}

}  // namespace rade
