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

#include "rade/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "rade/error.h"
#include "rade/file_util.h"
#include "rade/lexical.h"
#include "rade/retrieval.h"
#include "rade/tokenizer.h"
#include "rade/vocabulary.h"

namespace rade::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kPredictionsFormat = "rade-predictions";
constexpr int kPredictionsVersion = 1;

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

// Shortest text that parses back to the same double.
std::string FormatDouble(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

Dataset LoadForScoring(const fs::path& path) {
  LoadOptions options;
  options.require_reference_score = false;
  return LoadDataset(ResolveInput(path), options);
}

struct PredictionFile {
  json header;
  std::vector<Prediction> records;
};

PredictionFile ReadPredictionFile(const fs::path& path) {
  std::istringstream in(ReadFile(ResolveInput(path)));
  PredictionFile file;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (file.header.is_null()) {
      if (j.value("format", "") != kPredictionsFormat) {
        throw Error(ErrorCode::kMalformedRecord,
                    path.string() + ": missing predictions header");
      }
      file.header = std::move(j);
      continue;
    }
    try {
      Prediction p{j.at("id").get<std::string>(),
                   j.at("pred_reference").get<double>(),
                   j.at("pred_candidate").get<double>()};
      if (!seen.insert(p.id).second) {
        throw Error(ErrorCode::kDuplicateId,
                    "duplicate prediction id '" + p.id + "'");
      }
      file.records.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  if (file.header.is_null()) {
    throw Error(ErrorCode::kMalformedRecord,
                path.string() + ": missing predictions header");
  }
  return file;
}

std::vector<double> HumanCandidateScores(const Dataset& dataset) {
  std::vector<double> human;
  human.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    if (!ex.candidate_score) {
      throw Error(ErrorCode::kMissingScore,
                  "example '" + ex.id + "' has no human candidate score");
    }
    human.push_back(*ex.candidate_score);
  }
  return human;
}

// Predicted candidate scores in dataset order. The id sets must match.
std::vector<double> AlignPredictions(const std::vector<Prediction>& preds,
                                     const Dataset& dataset) {
  std::map<std::string, double> by_id;
  for (const auto& p : preds) by_id.emplace(p.id, p.candidate);
  std::vector<double> aligned;
  aligned.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kIdMismatch,
                  "no prediction for example '" + ex.id + "'");
    }
    aligned.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw Error(ErrorCode::kIdMismatch, "prediction '" + by_id.begin()->first +
                                            "' has no matching example");
  }
  return aligned;
}

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string CoefficientCell(const std::optional<double>& value,
                            const std::map<stats::Statistic, double>& p_values,
                            stats::Statistic statistic) {
  if (!value) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *value);
  std::string cell = buf;
  auto it = p_values.find(statistic);
  if (it != p_values.end() && it->second >= kSignificanceLevel) cell += "*";
  return cell;
}

std::string ReportFingerprint(const json& config) {
  return HexDigest(Fnv1a64(config.dump()));
}

}  // namespace

// ---- RunConfig ----

json RunConfig::ToJson() const {
  return {{"model", model.ToJson()},
          {"train", train.ToJson()},
          {"vocab_min_freq", vocab_min_freq},
          {"init_seed", init_seed}};
}

RunConfig RunConfig::FromJson(const json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "config must be an object");
  }
  RunConfig c;
  const json model_keys = ModelConfig().ToJson();
  json model = json::object();
  json train = json::object();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model" && value.is_object()) {
        model.update(value);
      } else if (key == "train" && value.is_object()) {
        train.update(value);
      } else if (key == "vocab_min_freq") {
        c.vocab_min_freq = value.get<int>();
      } else if (key == "init_seed") {
        c.init_seed = value.get<std::uint64_t>();
      } else if (model_keys.contains(key)) {
        model[key] = value;
      } else {
        train[key] = value;
      }
    }
    for (const auto& [key, value] : model.items()) {
      if (!model_keys.contains(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "unknown model config key '" + key + "'");
      }
    }
    c.model = ModelConfig::FromJson(model);
    c.train = training::TrainConfig::FromJson(train);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad config value: ") + e.what());
  }
  if (c.vocab_min_freq < 1) {
    throw Error(ErrorCode::kInvalidArgument, "vocab_min_freq must be >= 1");
  }
  c.model.Validate();
  c.train.Validate();
  return c;
}

RunConfig RunConfig::Parse(const std::string& text) {
  const std::string trimmed = Trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') {
    try {
      return FromJson(json::parse(trimmed));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("bad config: ") + e.what());
    }
  }
  json j = json::object();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string value = Trim(std::string_view(line).substr(eq + 1));
    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    j[key] = parsed.is_discarded() ? json(value) : parsed;
  }
  return FromJson(j);
}

RunConfig RunConfig::Load(const fs::path& path) {
  return Parse(ReadFile(ResolveInput(path)));
}

std::string RunConfig::Fingerprint() const {
  return HexDigest(Fnv1a64(ToJson().dump()));
}

fs::path ResolveInput(const fs::path& path) {
  if (path.is_absolute() || fs::exists(path)) return path;
  const char* dir = std::getenv("RADE_DATA_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  return fs::path(dir) / path;
}

// ---- train ----

training::TrainHistory CmdTrain(const TrainOptions& options,
                                std::ostream& log) {
  RunConfig config;
  if (options.config) config = RunConfig::Load(*options.config);
  if (options.stage) config.train.stage = *options.stage;
  if (options.epochs) config.train.epochs = *options.epochs;
  if (options.seed) config.train.seed = *options.seed;
  config.train.Validate();

  LoadOptions load;
  load.strict = options.strict;
  load.require_reference_score = false;
  const Dataset train = LoadDataset(ResolveInput(options.train_data), load);
  Dataset dev;
  if (options.dev_data) dev = LoadDataset(ResolveInput(*options.dev_data), load);
  if (train.examples.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "training set is empty");
  }

  std::optional<RadeModel> model;
  if (options.init_checkpoint) {
    model = options.config
                ? training::LoadCheckpoint(ResolveInput(*options.init_checkpoint),
                                           config.model)
                : training::LoadCheckpoint(ResolveInput(*options.init_checkpoint));
    config.model = model->config();
  } else {
    std::vector<std::string> corpus;
    for (const auto& ex : train.examples) {
      corpus.push_back(JoinContext(ex.context));
      corpus.push_back(ex.reference);
      corpus.push_back(ex.candidate);
    }
    model.emplace(config.model, Vocabulary::Build(corpus, config.vocab_min_freq),
                  config.init_seed);
  }

  log << "training " << training::ToString(config.train.stage) << " on "
      << train.examples.size() << " examples, " << model->ParameterCount()
      << " parameters\n";
  auto on_epoch = [&log](const training::EpochRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "epoch %d  train %.6f  dev %.6f  dev_r %s\n",
                  r.epoch, r.train.total, r.dev.total,
                  r.dev_pearson ? FormatDouble(*r.dev_pearson).c_str()
                                : "undefined");
    log << buf;
  };
  training::TrainResult result = training::TrainStage(
      std::move(*model), train, dev, config.train, on_epoch);
  log << "selected epoch " << result.history.selected_epoch << "\n";

  const json metadata = {{"run_config", config.ToJson()},
                         {"config_fingerprint", config.Fingerprint()}};
  training::SaveCheckpoint(result.model, options.out_checkpoint,
                           &result.history, metadata);
  WriteFileAtomic(options.out_history, result.history.ToJsonLines());
  return result.history;
}

// ---- evaluate ----

void CmdEvaluate(const fs::path& checkpoint, const fs::path& data,
                 const fs::path& out) {
  const fs::path checkpoint_path = ResolveInput(checkpoint);
  RadeModel model = training::LoadCheckpoint(checkpoint_path);
  std::string fingerprint = ReportFingerprint(model.config().ToJson());
  {
    const json j = json::parse(ReadFile(checkpoint_path), nullptr, false);
    if (j.is_object() && j.contains("metadata") &&
        j["metadata"].contains("config_fingerprint")) {
      fingerprint = j["metadata"]["config_fingerprint"].get<std::string>();
    }
  }
  const Dataset dataset = LoadForScoring(data);

  std::string text = json{{"format", kPredictionsFormat},
                          {"version", kPredictionsVersion},
                          {"dataset", dataset.name},
                          {"n", dataset.examples.size()},
                          {"config_fingerprint", fingerprint}}
                         .dump() +
                     "\n";
  for (const auto& ex : dataset.examples) {
    const ScorePair s =
        model.Score(JoinContext(ex.context), ex.reference, ex.candidate);
    text += json{{"id", ex.id},
                 {"pred_reference", s.reference},
                 {"pred_candidate", s.candidate}}
                .dump() +
            "\n";
  }
  WriteFileAtomic(out, text);
}

std::vector<Prediction> LoadPredictions(const fs::path& path) {
  return ReadPredictionFile(path).records;
}

// ---- reports ----

json EvaluationReport::ToJson() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    const auto& c = row.correlation;
    json p = json::object();
    json significant = json::object();
    for (const auto& [statistic, value] : c.p_values) {
      p[std::string(stats::ToString(statistic))] = value;
      significant[std::string(stats::ToString(statistic))] =
          value < kSignificanceLevel;
    }
    json undefined = json::array();
    if (!c.pearson_r) undefined.push_back("pearson");
    if (!c.spearman_rho) undefined.push_back("spearman");
    if (!c.kendall_tau) undefined.push_back("kendall");
    rows_json.push_back({{"method", row.method},
                         {"n", c.n},
                         {"pearson", OptionalNumber(c.pearson_r)},
                         {"spearman", OptionalNumber(c.spearman_rho)},
                         {"kendall", OptionalNumber(c.kendall_tau)},
                         {"p_values", p},
                         {"significant", significant},
                         {"undefined", undefined}});
  }
  return {{"dataset", dataset},
          {"n", n},
          {"config_fingerprint", config_fingerprint},
          {"significance",
           {{"test", "permutation"},
            {"n_permutations", n_permutations},
            {"seed", seed},
            {"alpha", kSignificanceLevel}}},
          {"rows", rows_json}};
}

std::string EvaluationReport::ToTable() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %12s %12s %12s\n", "method",
                "pearson", "spearman", "kendall");
  out << buf;
  for (const auto& row : rows) {
    const auto& c = row.correlation;
    std::snprintf(
        buf, sizeof(buf), "%-10s %12s %12s %12s\n", row.method.c_str(),
        CoefficientCell(c.pearson_r, c.p_values, stats::Statistic::kPearson).c_str(),
        CoefficientCell(c.spearman_rho, c.p_values, stats::Statistic::kSpearman).c_str(),
        CoefficientCell(c.kendall_tau, c.p_values, stats::Statistic::kKendall).c_str());
    out << buf;
  }
  out << "n = " << n << "; * marks p >= 0.05 (permutation test, "
      << n_permutations << " permutations)\n";
  return out.str();
}

// ---- correlate / baselines ----

EvaluationReport CmdCorrelate(const fs::path& predictions, const fs::path& data,
                              const CorrelateOptions& options) {
  const PredictionFile file = ReadPredictionFile(predictions);
  const Dataset dataset = LoadForScoring(data);
  const std::vector<double> predicted = AlignPredictions(file.records, dataset);
  const std::vector<double> human = HumanCandidateScores(dataset);

  EvaluationReport report;
  report.dataset = dataset.name;
  report.n = dataset.examples.size();
  report.config_fingerprint = file.header.value("config_fingerprint", "");
  report.n_permutations = options.n_permutations;
  report.seed = options.seed;
  stats::PermutationOptions perm;
  perm.n_permutations = options.n_permutations;
  perm.seed = options.seed;
  report.rows.push_back({options.method, stats::Correlate(predicted, human, perm)});
  return report;
}

EvaluationReport CmdBaselines(const fs::path& data,
                              const CorrelateOptions& options) {
  const Dataset dataset = LoadForScoring(data);
  const std::vector<double> human = HumanCandidateScores(dataset);
  std::vector<double> bleu, rouge, meteor;
  for (const auto& ex : dataset.examples) {
    const TokenSequence cand = Tokenize(ex.candidate);
    const TokenSequence ref = Tokenize(ex.reference);
    bleu.push_back(lexical::Bleu(cand, ref, 2));
    rouge.push_back(lexical::RougeLScore(cand, ref).f1);
    meteor.push_back(lexical::Meteor(cand, ref));
  }

  EvaluationReport report;
  report.dataset = dataset.name;
  report.n = dataset.examples.size();
  report.config_fingerprint = ReportFingerprint(
      {{"baselines", {"BLEU-2", "ROUGE-L", "METEOR"}},
       {"bleu_smoothing", "none"},
       {"meteor", {{"alpha", 0.9}, {"beta", 3.0}, {"gamma", 0.5}}}});
  report.n_permutations = options.n_permutations;
  report.seed = options.seed;
  stats::PermutationOptions perm;
  perm.n_permutations = options.n_permutations;
  perm.seed = options.seed;
  report.rows.push_back({"BLEU-2", stats::Correlate(bleu, human, perm)});
  report.rows.push_back({"ROUGE-L", stats::Correlate(rouge, human, perm)});
  report.rows.push_back({"METEOR", stats::Correlate(meteor, human, perm)});
  return report;
}

// ---- agreement ----

stats::AgreementReport AgreementFromDataset(const Dataset& dataset,
                                            bool subsample) {
  std::size_t min_raters = 0;
  bool first = true;
  for (const auto& ex : dataset.examples) {
    const std::size_t k = ex.annotations.size();
    if (k < 2) {
      throw Error(ErrorCode::kInsufficientAnnotators,
                  "example '" + ex.id + "' has " + std::to_string(k) +
                      " annotator(s); at least 2 are required");
    }
    if (first) {
      min_raters = k;
      first = false;
    } else if (k != min_raters && !subsample) {
      throw Error(ErrorCode::kRaggedRatings,
                  "example '" + ex.id + "' has " + std::to_string(k) +
                      " annotators but earlier examples have " +
                      std::to_string(min_raters));
    }
    min_raters = std::min(min_raters, k);
  }
  if (first) {
    throw Error(ErrorCode::kInsufficientAnnotators, "dataset has no examples");
  }
  std::vector<std::vector<int>> counts;
  counts.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    std::vector<int> row(stats::kRatingCategories, 0);
    for (std::size_t i = 0; i < min_raters; ++i) {
      const auto& a = ex.annotations[i];
      const double overall = AggregateOverall(a.sub_scores, MetricWeights::Uniform());
      ++row[stats::RatingCategory(overall) - 1];
    }
    counts.push_back(std::move(row));
  }
  return stats::FleissKappa(counts);
}

stats::AgreementReport CmdAgreement(const fs::path& data, bool subsample) {
  LoadOptions load;
  load.require_reference_score = false;
  return AgreementFromDataset(LoadDataset(ResolveInput(data), load), subsample);
}

// ---- scatter ----

void CmdScatter(const fs::path& predictions, const fs::path& data,
                const fs::path& out, const ScatterOptions& options) {
  const PredictionFile file = ReadPredictionFile(predictions);
  const Dataset dataset = LoadForScoring(data);
  const std::vector<double> predicted = AlignPredictions(file.records, dataset);
  const std::vector<double> human = HumanCandidateScores(dataset);
  std::vector<std::size_t> order(predicted.size());
  std::iota(order.begin(), order.end(), 0);
  if (options.sort_by_human) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return human[a] < human[b];
    });
  }
  std::string text = "# method: " + options.method + "\npredicted\thuman\n";
  for (std::size_t i : order) {
    text += FormatDouble(predicted[i]) + "\t" + FormatDouble(human[i]) + "\n";
  }
  WriteFileAtomic(out, text);
}

// ---- retrieval ----

void CmdIndex(const fs::path& corpus, const fs::path& out) {
  const Dataset dataset = LoadForScoring(corpus);
  const retrieval::RetrievalIndex index =
      retrieval::RetrievalIndex::FromDataset(dataset);
  if (index.empty()) {
    throw Error(ErrorCode::kEmptyIndex, "no context/response pairs in " +
                                            corpus.string());
  }
  index.Save(out);
}

void CmdRetrieve(const fs::path& index_path, const fs::path& data,
                 const fs::path& out, const RetrieveOptions& options) {
  const fs::path resolved = ResolveInput(index_path);
  retrieval::RetrievalIndex index;
  {
    // A saved index starts with its header record; anything else is read
    // as a dataset and indexed here.
    const std::string text = ReadFile(resolved);
    const json head = json::parse(text.substr(0, text.find('\n')), nullptr, false);
    if (head.is_object() && head.value("format", "") == "rade-bm25-index") {
      index = retrieval::RetrievalIndex::Load(resolved);
    } else {
      index = retrieval::RetrievalIndex::FromDataset(LoadForScoring(resolved));
    }
  }
  Dataset dataset = LoadForScoring(data);
  for (auto& ex : dataset.examples) {
    const auto hits = index.Retrieve(
        retrieval::ContextQuery(ex, options.last_turn_only), options.k);
    ex.reference = hits.front().response;
    ex.extras["pseudo_reference"] = true;
  }
  SaveDataset(dataset, out);
}

}  // namespace rade::cli
