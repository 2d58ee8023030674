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

#include "rade/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rade/error.h"
#include "rade/file_util.h"
#include "rade/random.h"
#include "rade/stats.h"

namespace rade::training {
namespace {

using ad::Tape;
using ad::Var;
using nlohmann::json;

// Stream tags for DeriveSeed.
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kDropoutStream = 0x44524f50ULL;

double RequireScore(const std::optional<double>& score, const char* which,
                    const AnnotatedExample& ex) {
  if (!score) {
    throw Error(ErrorCode::kMissingScore,
                "example " + ex.id + " has no " + which);
  }
  return *score;
}

ExampleIds IdsFor(const RadeModel& model, const AnnotatedExample& ex) {
  return model.Ids(JoinContext(ex.context), ex.reference, ex.candidate);
}

std::vector<ad::Matrix> Snapshot(const RadeModel& model) {
  std::vector<ad::Matrix> values;
  values.reserve(model.parameters().size());
  for (const auto& p : model.parameters()) values.push_back(p.value);
  return values;
}

void Restore(RadeModel& model, const std::vector<ad::Matrix>& values) {
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

void CheckStageScores(const Dataset& data, Stage stage) {
  for (const AnnotatedExample& ex : data.examples) {
    RequireScore(ex.candidate_score, "candidate_score", ex);
    if (stage == Stage::kTaskSpecific) {
      RequireScore(ex.reference_score, "reference_score", ex);
    }
  }
}

bool AllFinite(const LossBreakdown& l) {
  return std::isfinite(l.total) && std::isfinite(l.gen) &&
         std::isfinite(l.pr) && std::isfinite(l.mse_candidate) &&
         std::isfinite(l.mse_reference);
}

}  // namespace

std::string_view ToString(Stage stage) {
  return stage == Stage::kCrossDomain ? "cross_domain" : "task_specific";
}

std::optional<Stage> ParseStage(std::string_view s) {
  if (s == "cross_domain" || s == "pretrain") return Stage::kCrossDomain;
  if (s == "task_specific" || s == "finetune") return Stage::kTaskSpecific;
  return std::nullopt;
}

json LossBreakdown::ToJson() const {
  return {{"mse_candidate", mse_candidate},
          {"mse_reference", mse_reference},
          {"gen", gen},
          {"pr", pr},
          {"total", total}};
}

double LossMse(double predicted, double target) {
  const double diff = predicted - target;
  return diff * diff;
}

int RankingLabel(double reference_score, double candidate_score) {
  return reference_score < candidate_score ? 1 : 0;
}

double LossPr(double predicted_reference, double predicted_candidate,
              double reference_score, double candidate_score) {
  if (RankingLabel(reference_score, candidate_score) == 0) return 0.0;
  const double margin = predicted_reference - predicted_candidate;
  return std::max(margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

double LossGen(RadeModel& model, const std::string& context,
               const std::string& reference) {
  const std::size_t steps = Tokenize(reference).size() + 1;
  return -model.GenerationLogProb(context, reference) /
         static_cast<double>(steps);
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "train config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be positive");
  if (epochs < 0) fail("epochs must be non-negative");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(clip_norm > 0.0)) fail("clip_norm must be positive");
}

json TrainConfig::ToJson() const {
  json j = {{"stage", ToString(stage)},
            {"learning_rate", learning_rate},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"adam_epsilon", adam_epsilon},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"seed", seed},
            {"clip_norm", clip_norm},
            {"weight_mse_candidate", loss_weights.mse_candidate},
            {"weight_mse_reference", loss_weights.mse_reference},
            {"weight_gen", loss_weights.gen},
            {"weight_pr", loss_weights.pr}};
  if (target_dev_pearson) j["target_dev_pearson"] = *target_dev_pearson;
  return j;
}

TrainConfig TrainConfig::FromJson(const json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "stage") {
      auto stage = ParseStage(value.get<std::string>());
      if (!stage) {
        throw Error(ErrorCode::kInvalidArgument,
                    "unknown stage '" + value.get<std::string>() + "'");
      }
      c.stage = *stage;
    } else if (key == "learning_rate") {
      c.learning_rate = value.get<double>();
    } else if (key == "adam_beta1") {
      c.adam_beta1 = value.get<double>();
    } else if (key == "adam_beta2") {
      c.adam_beta2 = value.get<double>();
    } else if (key == "adam_epsilon") {
      c.adam_epsilon = value.get<double>();
    } else if (key == "epochs") {
      c.epochs = value.get<int>();
    } else if (key == "batch_size") {
      c.batch_size = value.get<int>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "clip_norm") {
      c.clip_norm = value.get<double>();
    } else if (key == "weight_mse_candidate") {
      c.loss_weights.mse_candidate = value.get<double>();
    } else if (key == "weight_mse_reference") {
      c.loss_weights.mse_reference = value.get<double>();
    } else if (key == "weight_gen") {
      c.loss_weights.gen = value.get<double>();
    } else if (key == "weight_pr") {
      c.loss_weights.pr = value.get<double>();
    } else if (key == "target_dev_pearson") {
      if (!value.is_null()) c.target_dev_pearson = value.get<double>();
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown train config key '" + key + "'");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Losses

LossBreakdown BatchLoss(RadeModel& model,
                        std::span<const AnnotatedExample> batch, Stage stage,
                        const LossWeights& weights, const ForwardMode& mode,
                        bool accumulate_gradients) {
  LossBreakdown sum;
  if (batch.empty()) return sum;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const AnnotatedExample& ex : batch) {
    const double s_a = RequireScore(ex.candidate_score, "candidate_score", ex);
    const ExampleIds ids = IdsFor(model, ex);

    Tape tape;
    Var scores = model.ScoresOnTape(tape, ids, mode);
    Var pred_h = tape.Element(scores, 0, 0);
    Var pred_a = tape.Element(scores, 0, 1);
    Var log_prob = model.ReferenceLogProbOnTape(tape, ids, mode);
    const double steps = static_cast<double>(ids.reference.size() + 1);

    Var mse_a = tape.Square(tape.AddConstant(pred_a, -s_a));
    Var gen = tape.Scale(log_prob, -1.0 / steps);
    std::vector<Var> terms = {tape.Scale(mse_a, weights.mse_candidate),
                              tape.Scale(gen, weights.gen)};
    sum.mse_candidate += tape.Scalar(mse_a);
    sum.gen += tape.Scalar(gen);

    if (stage == Stage::kTaskSpecific) {
      const double s_h =
          RequireScore(ex.reference_score, "reference_score", ex);
      Var mse_h = tape.Square(tape.AddConstant(pred_h, -s_h));
      terms.push_back(tape.Scale(mse_h, weights.mse_reference));
      sum.mse_reference += tape.Scalar(mse_h);
      if (RankingLabel(s_h, s_a) == 1) {
        Var pr = tape.Softplus(tape.Sub(pred_h, pred_a));
        terms.push_back(tape.Scale(pr, weights.pr));
        sum.pr += tape.Scalar(pr);
      }
    }
    Var total = tape.Sum(terms);
    sum.total += tape.Scalar(total);
    if (accumulate_gradients) tape.Backward(tape.Scale(total, inv_n));
  }
  sum.mse_candidate *= inv_n;
  sum.mse_reference *= inv_n;
  sum.gen *= inv_n;
  sum.pr *= inv_n;
  sum.total *= inv_n;
  return sum;
}

LossBreakdown LossCross(RadeModel& model,
                        std::span<const AnnotatedExample> batch) {
  return BatchLoss(model, batch, Stage::kCrossDomain, {}, {}, false);
}

LossBreakdown LossIn(RadeModel& model, std::span<const AnnotatedExample> batch) {
  return BatchLoss(model, batch, Stage::kTaskSpecific, {}, {}, false);
}

// ---------------------------------------------------------------------------
// Optimizer

AdamOptimizer::AdamOptimizer(const std::vector<ad::Parameter>& params,
                             double learning_rate, double beta1, double beta2,
                             double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  for (const auto& p : params) {
    first_moment_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    second_moment_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamOptimizer::Step(std::vector<ad::Parameter>& params) {
  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = params[i];
    if (p.grad.size() == 0) continue;
    ad::Matrix& m = first_moment_[i];
    ad::Matrix& v = second_moment_[i];
    m = beta1_ * m + (1.0 - beta1_) * p.grad;
    v = beta2_ * v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= learning_rate_ * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + epsilon_);
  }
}

double ClipGradientNorm(std::vector<ad::Parameter>& params, double max_norm) {
  double squared = 0.0;
  for (const auto& p : params) {
    if (p.grad.size() != 0) squared += p.grad.squaredNorm();
  }
  const double norm = std::sqrt(squared);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : params) {
      if (p.grad.size() != 0) p.grad *= factor;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Loop

std::string TrainHistory::ToJsonLines() const {
  std::string out;
  for (const EpochRecord& e : epochs) {
    json j = {{"epoch", e.epoch},
              {"train", e.train.ToJson()},
              {"dev", e.dev.ToJson()},
              {"dev_pearson", e.dev_pearson ? json(*e.dev_pearson) : json()}};
    out += j.dump() + "\n";
  }
  out += json{{"selected_epoch", selected_epoch}}.dump() + "\n";
  return out;
}

std::vector<double> PredictCandidateScores(
    RadeModel& model, std::span<const AnnotatedExample> examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const AnnotatedExample& ex : examples) {
    out.push_back(
        model.Score(JoinContext(ex.context), ex.reference, ex.candidate)
            .candidate);
  }
  return out;
}

std::optional<double> CandidatePearson(
    RadeModel& model, std::span<const AnnotatedExample> examples) {
  std::vector<AnnotatedExample> scored;
  std::vector<double> human;
  for (const AnnotatedExample& ex : examples) {
    if (!ex.candidate_score) continue;
    scored.push_back(ex);
    human.push_back(*ex.candidate_score);
  }
  if (scored.size() < 3) return std::nullopt;
  const std::vector<double> predicted = PredictCandidateScores(model, scored);
  try {
    return stats::Pearson(predicted, human);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUndefinedCorrelation) return std::nullopt;
    throw;
  }
}

TrainResult TrainStage(RadeModel model, const Dataset& train,
                       const Dataset& dev, const TrainConfig& config,
                       const EpochCallback& on_epoch) {
  config.Validate();
  TrainResult result{std::move(model), {}};
  if (config.epochs == 0) return result;
  if (train.examples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "training split is empty");
  }
  CheckStageScores(train, config.stage);
  CheckStageScores(dev, config.stage);

  RadeModel& m = result.model;
  TrainHistory& history = result.history;
  AdamOptimizer optimizer(m.parameters(), config.learning_rate,
                          config.adam_beta1, config.adam_beta2,
                          config.adam_epsilon);
  std::vector<ad::Matrix> best = Snapshot(m);
  double best_pearson = -std::numeric_limits<double>::infinity();

  const std::size_t n = train.examples.size();
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<AnnotatedExample> batch;
  long long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(
        DeriveSeed(config.seed ^ kShuffleStream, static_cast<std::uint64_t>(epoch)));
    Shuffle(std::span<std::size_t>(order), shuffle_rng);

    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(train.examples[order[i]]);
      }
      std::mt19937_64 dropout_rng(DeriveSeed(config.seed ^ kDropoutStream,
                                             static_cast<std::uint64_t>(step)));
      m.ZeroGrad();
      const LossBreakdown loss =
          BatchLoss(m, batch, config.stage, config.loss_weights,
                    ForwardMode{true, &dropout_rng}, true);
      if (!AllFinite(loss)) {
        throw Error(ErrorCode::kNonFinite,
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(start / batch_size) +
                        ", step " + std::to_string(step));
      }
      const double w = static_cast<double>(end - start) / static_cast<double>(n);
      record.train.mse_candidate += w * loss.mse_candidate;
      record.train.mse_reference += w * loss.mse_reference;
      record.train.gen += w * loss.gen;
      record.train.pr += w * loss.pr;
      record.train.total += w * loss.total;
      ClipGradientNorm(m.parameters(), config.clip_norm);
      optimizer.Step(m.parameters());
      ++step;
    }

    if (!dev.examples.empty()) {
      record.dev = BatchLoss(m, dev.examples, config.stage,
                             config.loss_weights, {}, false);
      record.dev_pearson = CandidatePearson(m, dev.examples);
    }
    if (record.dev_pearson && *record.dev_pearson > best_pearson) {
      best_pearson = *record.dev_pearson;
      best = Snapshot(m);
      history.selected_epoch = epoch;
    }
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
    if (config.target_dev_pearson && record.dev_pearson &&
        *record.dev_pearson >= *config.target_dev_pearson) {
      break;
    }
  }

  if (history.selected_epoch == 0) {
    // No epoch produced a defined dev Pearson: keep the final parameters.
    history.selected_epoch = history.epochs.back().epoch;
  } else {
    Restore(m, best);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

void SaveCheckpoint(const RadeModel& model, const std::filesystem::path& path,
                    const TrainHistory* history, const json& metadata) {
  json params = json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"data", std::vector<double>(p.value.data(),
                                                   p.value.data() + p.value.size())}});
  }
  json j = {{"format", "rade-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", model.config().ToJson()},
            {"vocab", model.vocab().tokens()},
            {"parameters", std::move(params)}};
  if (history != nullptr) j["selected_epoch"] = history->selected_epoch;
  if (!metadata.is_null()) j["metadata"] = metadata;
  WriteFileAtomic(path, j.dump() + "\n");
}

RadeModel LoadCheckpoint(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kCorruptCheckpoint,
                 "corrupt checkpoint " + path.string() + ": " + why);
  };
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  try {
    if (j.value("format", "") != "rade-checkpoint") throw corrupt("not a checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorCode::kCheckpointMismatch,
                  "checkpoint version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
    }
    const ModelConfig config = ModelConfig::FromJson(j.at("config"));
    Vocabulary vocab =
        Vocabulary::FromTokens(j.at("vocab").get<std::vector<std::string>>());
    RadeModel model(config, std::move(vocab), 0);
    const json& params = j.at("parameters");
    if (params.size() != model.parameters().size()) {
      throw corrupt("parameter count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      ad::Parameter& p = model.parameters()[i];
      const json& entry = params[i];
      if (entry.at("name").get<std::string>() != p.name ||
          entry.at("rows").get<Eigen::Index>() != p.value.rows() ||
          entry.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw corrupt("parameter " + p.name + " does not match the config");
      }
      const auto data = entry.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != p.value.size()) {
        throw corrupt("parameter " + p.name + " has the wrong size");
      }
      std::copy(data.begin(), data.end(), p.value.data());
      if (!p.value.allFinite()) {
        throw corrupt("parameter " + p.name + " is not finite");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
}

RadeModel LoadCheckpoint(const std::filesystem::path& path,
                         const ModelConfig& expected) {
  RadeModel model = LoadCheckpoint(path);
  if (!(model.config() == expected)) {
    throw Error(ErrorCode::kCheckpointMismatch,
                "checkpoint model config " + model.config().ToJson().dump() +
                    " does not match " + expected.ToJson().dump());
  }
  return model;
}

}  // namespace rade::training
