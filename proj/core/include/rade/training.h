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

// Training objectives and the two-stage training loop.
//
//   cross-domain:   L = MSE(s_a) + L_GEN
//   task-specific:  L = MSE(s_a) + MSE(s_h) + L_GEN + L_PR
//
// L_GEN is the per-token mean negative log-likelihood of the reference given
// the context. L_PR = g(s_h, s_a) * -log softmax(s_h_hat, s_a_hat)[candidate]
// with g = 1 iff s_h < s_a.

#ifndef RADE_TRAINING_H_
#define RADE_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rade/autodiff.h"
#include "rade/data_model.h"
#include "rade/model.h"

namespace rade::training {

enum class Stage { kCrossDomain, kTaskSpecific };

std::string_view ToString(Stage stage);
std::optional<Stage> ParseStage(std::string_view s);

struct LossBreakdown {
  double mse_candidate = 0.0;
  double mse_reference = 0.0;
  double gen = 0.0;
  double pr = 0.0;
  double total = 0.0;

  nlohmann::json ToJson() const;
};

// Optional coefficients on the four terms; all 1 reproduces the plain sum.
struct LossWeights {
  double mse_candidate = 1.0;
  double mse_reference = 1.0;
  double gen = 1.0;
  double pr = 1.0;
};

double LossMse(double predicted, double target);

// g(s_h, s_a): 1 iff the human ranks the candidate strictly above the
// reference.
int RankingLabel(double reference_score, double candidate_score);

// g * log(1 + exp(s_h_hat - s_a_hat)), evaluated stably.
double LossPr(double predicted_reference, double predicted_candidate,
              double reference_score, double candidate_score);

// -log P(reference | context) / (T + 1).
double LossGen(RadeModel& model, const std::string& context,
               const std::string& reference);

struct TrainConfig {
  Stage stage = Stage::kTaskSpecific;
  double learning_rate = 5e-5;
  double adam_beta1 = 0.98;
  double adam_beta2 = 0.97;
  double adam_epsilon = 1e-8;
  int epochs = 10;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double clip_norm = 1.0;
  LossWeights loss_weights;
  // Stop once dev Pearson reaches this value.
  std::optional<double> target_dev_pearson;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys are rejected.
  static TrainConfig FromJson(const nlohmann::json& j);
};

// Composite loss over a batch (mean over examples) for the given stage.
// With `accumulate_gradients`, d(total)/d(params) is added to each
// parameter's grad. Cross-domain never reads reference_score.
LossBreakdown BatchLoss(RadeModel& model,
                        std::span<const AnnotatedExample> batch, Stage stage,
                        const LossWeights& weights, const ForwardMode& mode,
                        bool accumulate_gradients);

// Inference-mode composites.
LossBreakdown LossCross(RadeModel& model,
                        std::span<const AnnotatedExample> batch);
LossBreakdown LossIn(RadeModel& model, std::span<const AnnotatedExample> batch);

// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer(const std::vector<ad::Parameter>& params, double learning_rate,
                double beta1, double beta2, double epsilon);

  void Step(std::vector<ad::Parameter>& params);
  long long steps() const { return step_; }

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long long step_ = 0;
  std::vector<ad::Matrix> first_moment_;
  std::vector<ad::Matrix> second_moment_;
};

// Scales all gradients so their global L2 norm is at most `max_norm`;
// returns the norm before clipping.
double ClipGradientNorm(std::vector<ad::Parameter>& params, double max_norm);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown dev;
  std::optional<double> dev_pearson;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  // 0 means the initial parameters were kept.
  int selected_epoch = 0;

  // One JSON object per line: each epoch, then a summary record.
  std::string ToJsonLines() const;
};

struct TrainResult {
  RadeModel model;
  TrainHistory history;
};

// Predicted candidate scores, in example order.
std::vector<double> PredictCandidateScores(RadeModel& model,
                                           std::span<const AnnotatedExample> examples);

// Pearson between predicted and human candidate scores; empty when fewer
// than three scored examples or the correlation is undefined.
std::optional<double> CandidatePearson(RadeModel& model,
                                       std::span<const AnnotatedExample> examples);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Runs `config.epochs` epochs of seeded, shuffled mini-batch Adam with
// gradient clipping and returns the parameters of the epoch with the best
// dev Pearson (earliest on ties). Throws kNonFinite if the loss diverges.
TrainResult TrainStage(RadeModel model, const Dataset& train,
                       const Dataset& dev, const TrainConfig& config,
                       const EpochCallback& on_epoch = nullptr);

// ---- Checkpoints ----

inline constexpr int kCheckpointVersion = 1;

void SaveCheckpoint(const RadeModel& model, const std::filesystem::path& path,
                    const TrainHistory* history = nullptr,
                    const nlohmann::json& metadata = nullptr);

// Throws kCorruptCheckpoint or kCheckpointMismatch.
RadeModel LoadCheckpoint(const std::filesystem::path& path);
// Also rejects a checkpoint whose model config differs from `expected`.
RadeModel LoadCheckpoint(const std::filesystem::path& path,
                         const ModelConfig& expected);

}  // namespace rade::training

#endif  // RADE_TRAINING_H_
