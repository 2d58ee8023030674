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

// The operations behind the `rade` command-line verbs. Each command reads
// its inputs, writes outputs atomically, and reports failures as
// rade::Error so the binary can map them to exit codes.

#ifndef RADE_COMMANDS_H_
#define RADE_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rade/data_model.h"
#include "rade/model.h"
#include "rade/stats.h"
#include "rade/training.h"

namespace rade::cli {

// Model and training settings read from a config file: either a JSON object
// or `key = value` lines (`#` starts a comment). Model keys are the
// ModelConfig field names; `vocab_min_freq` and `init_seed` control model
// construction; every other key goes to TrainConfig.
struct RunConfig {
  ModelConfig model;
  training::TrainConfig train;
  int vocab_min_freq = 1;
  std::uint64_t init_seed = 0;

  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig Parse(const std::string& text);
  static RunConfig Load(const std::filesystem::path& path);
  // Hash of the canonical JSON serialization.
  std::string Fingerprint() const;
};

// A relative path that does not exist is looked up under $RADE_DATA_DIR.
std::filesystem::path ResolveInput(const std::filesystem::path& path);

struct TrainOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path train_data;
  std::optional<std::filesystem::path> dev_data;
  std::optional<std::filesystem::path> init_checkpoint;
  std::filesystem::path out_checkpoint;
  std::filesystem::path out_history;
  std::optional<training::Stage> stage;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  bool strict = true;
};

training::TrainHistory CmdTrain(const TrainOptions& options, std::ostream& log);

struct Prediction {
  std::string id;
  double reference = 0.0;
  double candidate = 0.0;
};

// Header record plus one record per example.
void CmdEvaluate(const std::filesystem::path& checkpoint,
                 const std::filesystem::path& data,
                 const std::filesystem::path& out);

std::vector<Prediction> LoadPredictions(const std::filesystem::path& path);

struct MethodRow {
  std::string method;
  stats::CorrelationReport correlation;
};

struct EvaluationReport {
  std::string dataset;
  std::size_t n = 0;
  std::string config_fingerprint;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  std::vector<MethodRow> rows;

  nlohmann::json ToJson() const;
  // Fixed-width table; coefficients with p >= 0.05 carry a trailing '*'.
  std::string ToTable() const;
};

inline constexpr double kSignificanceLevel = 0.05;

struct CorrelateOptions {
  int n_permutations = 999;
  std::uint64_t seed = 0;
  std::string method = "RADE";
};

// Joins predicted candidate scores to human candidate scores by id.
EvaluationReport CmdCorrelate(const std::filesystem::path& predictions,
                              const std::filesystem::path& data,
                              const CorrelateOptions& options);

// BLEU-2, ROUGE-L F1 and METEOR per example, each correlated with the human
// candidate score.
EvaluationReport CmdBaselines(const std::filesystem::path& data,
                              const CorrelateOptions& options);

// Fleiss' kappa over per-annotator overall scores rounded to 1..5. Without
// `subsample`, every example must carry the same number of annotators;
// with it, each example keeps its first k annotators where k is the
// smallest count.
stats::AgreementReport CmdAgreement(const std::filesystem::path& data,
                                    bool subsample);
stats::AgreementReport AgreementFromDataset(const Dataset& dataset,
                                            bool subsample);

struct ScatterOptions {
  std::string method = "RADE";
  bool sort_by_human = false;
};

// Tab-separated (predicted, human) pairs under a method header.
void CmdScatter(const std::filesystem::path& predictions,
                const std::filesystem::path& data,
                const std::filesystem::path& out,
                const ScatterOptions& options);

void CmdIndex(const std::filesystem::path& corpus,
              const std::filesystem::path& out);

struct RetrieveOptions {
  std::size_t k = 1;
  bool last_turn_only = false;
};

// Fills each example's reference with the top BM25 hit and marks it with
// "pseudo_reference": true. `index` may be a saved index or a dataset file
// to index on the fly.
void CmdRetrieve(const std::filesystem::path& index,
                 const std::filesystem::path& data,
                 const std::filesystem::path& out,
                 const RetrieveOptions& options);

}  // namespace rade::cli

#endif  // RADE_COMMANDS_H_
