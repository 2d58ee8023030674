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

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "rade/commands.h"
#include "rade/error.h"
#include "rade/lexical.h"
#include "rade/tokenizer.h"
#include "support/fixtures.h"
#include "support/oracles.h"

namespace rade::cli {
namespace {

using nlohmann::json;
using rade::testing::RatedFixture;
using rade::testing::Slurp;
using rade::testing::TempDir;

namespace fs = std::filesystem;

const char* kSmallConfig = R"({
  "d_model": 16, "n_heads": 2, "n_encoder_layers": 1, "n_decoder_layers": 1,
  "ff_width": 32, "max_length": 32, "dropout": 0.0,
  "learning_rate": 0.001, "batch_size": 8, "epochs": 3, "seed": 4
})";

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUsage;
}

// Trains a small model on a fixture and returns the checkpoint path.
struct TrainedRun {
  TempDir dir;
  fs::path data;
  fs::path checkpoint;
  fs::path history_path;
  training::TrainHistory history;
};

std::unique_ptr<TrainedRun> TrainSmall() {
  auto run = std::make_unique<TrainedRun>();
  run->data = run->dir / "data.jsonl";
  SaveDataset(RatedFixture(24, 7), run->data);
  WriteText(run->dir / "config.json", kSmallConfig);
  TrainOptions o;
  o.config = run->dir / "config.json";
  o.train_data = run->data;
  o.dev_data = run->data;
  o.out_checkpoint = run->checkpoint = run->dir / "model.json";
  o.out_history = run->history_path = run->dir / "history.jsonl";
  std::ostringstream log;
  run->history = CmdTrain(o, log);
  return run;
}

TEST(RunConfigTest, JsonAndKeyValueAgree) {
  const RunConfig a = RunConfig::Parse(kSmallConfig);
  const RunConfig b = RunConfig::Parse(
      "# small run\n"
      "d_model = 16\nn_heads = 2\nn_encoder_layers = 1\nn_decoder_layers = 1\n"
      "ff_width = 32\nmax_length = 32\ndropout = 0.0\n"
      "learning_rate = 0.001\nbatch_size = 8\nepochs = 3\nseed = 4\n");
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model.d_model, 16);
  EXPECT_EQ(a.train.epochs, 3);
  EXPECT_EQ(a.train.learning_rate, 1e-3);
  EXPECT_EQ(a.Fingerprint(), b.Fingerprint());
  RunConfig c = a;
  c.train.epochs = 4;
  EXPECT_NE(c.Fingerprint(), a.Fingerprint());
  EXPECT_EQ(RunConfig::FromJson(a.ToJson()).Fingerprint(), a.Fingerprint());
}

TEST(RunConfigTest, StageNamesAndUnknownKeys) {
  EXPECT_EQ(RunConfig::Parse("stage = pretrain").train.stage,
            training::Stage::kCrossDomain);
  EXPECT_EQ(RunConfig::Parse("{\"model\": {\"d_model\": 32}}").model.d_model, 32);
  EXPECT_THROW(RunConfig::Parse("learning_rat = 0.1"), Error);
  EXPECT_THROW(RunConfig::Parse("{\"d_model\": 30, \"n_heads\": 4}"), Error);
}

TEST(CmdTrainTest, WritesCheckpointAndHistory) {
  auto run = TrainSmall();
  ASSERT_TRUE(fs::exists(run->checkpoint));
  std::istringstream lines(Slurp(run->history_path));
  std::string line;
  std::vector<json> records;
  while (std::getline(lines, line)) records.push_back(json::parse(line));
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records.back()["selected_epoch"], run->history.selected_epoch);
  const json ckpt = json::parse(Slurp(run->checkpoint));
  EXPECT_EQ(ckpt["metadata"]["config_fingerprint"],
            RunConfig::Parse(kSmallConfig).Fingerprint());
}

TEST(CmdTrainTest, TaskStageNeedsReferenceScores) {
  TempDir dir;
  SaveDataset(rade::testing::CrossDomainFixture(8, 2), dir / "x.jsonl");
  WriteText(dir / "c.json", kSmallConfig);
  TrainOptions o;
  o.config = dir / "c.json";
  o.train_data = dir / "x.jsonl";
  o.out_checkpoint = dir / "m.json";
  o.out_history = dir / "h.jsonl";
  std::ostringstream log;
  EXPECT_EQ(CodeOf([&] { CmdTrain(o, log); }), ErrorCode::kMissingScore);
  EXPECT_FALSE(fs::exists(dir / "m.json"));
  o.stage = training::Stage::kCrossDomain;
  o.epochs = 1;
  EXPECT_NO_THROW(CmdTrain(o, log));
}

TEST(CmdEvaluateTest, CorrelationMatchesTrainingDevPearson) {
  auto run = TrainSmall();
  const fs::path preds = run->dir / "preds.jsonl";
  CmdEvaluate(run->checkpoint, run->data, preds);
  const auto loaded = LoadPredictions(preds);
  ASSERT_EQ(loaded.size(), 24u);
  EXPECT_EQ(loaded[0].id, "synthetic-0");

  CorrelateOptions options;
  options.n_permutations = 199;
  const EvaluationReport report = CmdCorrelate(preds, run->data, options);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& selected = run->history.epochs[run->history.selected_epoch - 1];
  ASSERT_TRUE(selected.dev_pearson.has_value());
  EXPECT_NEAR(*report.rows[0].correlation.pearson_r, *selected.dev_pearson, 1e-9);
  EXPECT_EQ(report.n, 24u);

  // Oracle on the same pairs.
  const Dataset data = LoadDataset(run->data);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    x.push_back(loaded[i].candidate);
    y.push_back(*data.examples[i].candidate_score);
  }
  EXPECT_NEAR(*report.rows[0].correlation.spearman_rho,
              static_cast<double>(rade::oracle::Spearman(x, y)), 1e-12);

  // Same inputs, same bytes.
  CmdEvaluate(run->checkpoint, run->data, run->dir / "preds2.jsonl");
  EXPECT_EQ(Slurp(preds), Slurp(run->dir / "preds2.jsonl"));
  EXPECT_EQ(CmdCorrelate(preds, run->data, options).ToJson().dump(),
            report.ToJson().dump());
}

TEST(CmdCorrelateTest, IdAndScoreErrors) {
  auto run = TrainSmall();
  const fs::path preds = run->dir / "preds.jsonl";
  CmdEvaluate(run->checkpoint, run->data, preds);
  Dataset other = RatedFixture(24, 7, "renamed");
  SaveDataset(other, run->dir / "renamed.jsonl");
  EXPECT_EQ(CodeOf([&] { CmdCorrelate(preds, run->dir / "renamed.jsonl", {}); }),
            ErrorCode::kIdMismatch);
  Dataset unscored = LoadDataset(run->data);
  unscored.examples[3].candidate_score.reset();
  SaveDataset(unscored, run->dir / "unscored.jsonl");
  EXPECT_EQ(CodeOf([&] { CmdCorrelate(preds, run->dir / "unscored.jsonl", {}); }),
            ErrorCode::kMissingScore);
  WriteText(run->dir / "bad.jsonl", "{\"format\":\"rade-predictions\"}\nnot json\n");
  EXPECT_THROW(LoadPredictions(run->dir / "bad.jsonl"), Error);
}

TEST(ReportTest, SignificanceMarkersAndUndefined) {
  EvaluationReport r;
  r.dataset = "d";
  r.n = 3;
  r.n_permutations = 9;
  stats::CorrelationReport c;
  c.n = 3;
  c.pearson_r = 0.5;
  c.p_values[stats::Statistic::kPearson] = 0.2;
  c.spearman_rho = 0.9;
  c.p_values[stats::Statistic::kSpearman] = 0.01;
  r.rows.push_back({"M", c});
  const std::string table = r.ToTable();
  EXPECT_NE(table.find("0.5000*"), std::string::npos) << table;
  EXPECT_NE(table.find("undefined"), std::string::npos);
  const json j = r.ToJson();
  EXPECT_TRUE(j["rows"][0]["kendall"].is_null());
  EXPECT_EQ(j["rows"][0]["significant"]["spearman"], true);
  EXPECT_EQ(j["rows"][0]["significant"]["pearson"], false);
}

TEST(CmdBaselinesTest, ThreeRows) {
  TempDir dir;
  SaveDataset(RatedFixture(20, 3), dir / "d.jsonl");
  CorrelateOptions options;
  options.n_permutations = 0;
  const EvaluationReport r = CmdBaselines(dir / "d.jsonl", options);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].method, "BLEU-2");
  EXPECT_EQ(r.rows[1].method, "ROUGE-L");
  EXPECT_EQ(r.rows[2].method, "METEOR");
  // Candidate overlap drives the human score, so overlap metrics correlate.
  EXPECT_GT(*r.rows[1].correlation.pearson_r, 0.5);
}

TEST(CmdBaselinesTest, RougeRowTracksRougeBasedScores) {
  TempDir dir;
  Dataset d = RatedFixture(30, 8);
  for (auto& ex : d.examples) {
    ex.candidate_score =
        1.0 + 4.0 * lexical::RougeLScore(Tokenize(ex.candidate), Tokenize(ex.reference)).f1;
  }
  SaveDataset(d, dir / "d.jsonl");
  CorrelateOptions options;
  options.n_permutations = 0;
  const EvaluationReport r = CmdBaselines(dir / "d.jsonl", options);
  EXPECT_GE(*r.rows[1].correlation.pearson_r, 0.99);
}

AnnotatorRating Rating(const std::string& who, int value) {
  AnnotatorRating r;
  r.annotator_id = who;
  for (SubMetric m : RequiredSubMetrics(Domain::kChitchat)) r.sub_scores[m] = value;
  return r;
}

TEST(AgreementTest, MatchesOracleAndChecksShape) {
  Dataset d = RatedFixture(4, 1);
  const int values[4][3] = {{1, 1, 2}, {5, 5, 5}, {3, 2, 3}, {4, 4, 1}};
  std::vector<std::vector<int>> counts(4, std::vector<int>(5, 0));
  for (int i = 0; i < 4; ++i) {
    for (int a = 0; a < 3; ++a) {
      d.examples[i].annotations.push_back(Rating("a" + std::to_string(a), values[i][a]));
      ++counts[i][values[i][a] - 1];
    }
  }
  const auto report = AgreementFromDataset(d, false);
  EXPECT_NEAR(report.kappa, static_cast<double>(rade::oracle::FleissKappa(counts)), 1e-12);
  EXPECT_EQ(report.n_raters, 3u);

  Dataset ragged = d;
  ragged.examples[2].annotations.pop_back();
  try {
    AgreementFromDataset(ragged, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRaggedRatings);
    EXPECT_NE(std::string(e.what()).find(ragged.examples[2].id), std::string::npos);
  }
  EXPECT_EQ(AgreementFromDataset(ragged, true).n_raters, 2u);

  Dataset single = RatedFixture(2, 1);
  for (auto& ex : single.examples) ex.annotations.push_back(Rating("a", 3));
  EXPECT_EQ(CodeOf([&] { AgreementFromDataset(single, false); }),
            ErrorCode::kInsufficientAnnotators);
}

TEST(CmdScatterTest, Format) {
  auto run = TrainSmall();
  const fs::path preds = run->dir / "preds.jsonl";
  CmdEvaluate(run->checkpoint, run->data, preds);
  ScatterOptions options;
  options.sort_by_human = true;
  CmdScatter(preds, run->data, run->dir / "s.tsv", options);
  std::istringstream in(Slurp(run->dir / "s.tsv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# method: RADE");
  std::getline(in, line);
  EXPECT_EQ(line, "predicted\thuman");
  double last = -1e9;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos);
    const double human = std::stod(line.substr(tab + 1));
    EXPECT_GE(human, last);
    last = human;
    ++rows;
  }
  EXPECT_EQ(rows, 24);
}

TEST(CmdRetrieveTest, InstallsPseudoReferences) {
  TempDir dir;
  const auto pairs = rade::testing::RetrievalPairs(10, 2);
  SaveDataset(rade::testing::RetrievalCorpus(pairs), dir / "corpus.jsonl");
  Dataset queries = rade::testing::ReferenceFreeFixture(3, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    queries.examples[i].context = {{Speaker::kUser1, pairs[i * 3].context}};
  }
  SaveDataset(queries, dir / "q.jsonl");
  CmdIndex(dir / "corpus.jsonl", dir / "idx.jsonl");
  CmdRetrieve(dir / "idx.jsonl", dir / "q.jsonl", dir / "out1.jsonl", {});
  CmdRetrieve(dir / "corpus.jsonl", dir / "q.jsonl", dir / "out2.jsonl", {});
  EXPECT_EQ(Slurp(dir / "out1.jsonl"), Slurp(dir / "out2.jsonl"));
  LoadOptions relaxed;
  relaxed.require_reference_score = false;
  const Dataset out = LoadDataset(dir / "out1.jsonl", relaxed);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out.examples[i].reference, pairs[i * 3].response);
    EXPECT_EQ(out.examples[i].extras["pseudo_reference"], true);
  }
  Dataset empty;
  empty.name = "empty";
  SaveDataset(empty, dir / "empty.jsonl");
  EXPECT_EQ(CodeOf([&] { CmdIndex(dir / "empty.jsonl", dir / "e.jsonl"); }),
            ErrorCode::kEmptyIndex);
  EXPECT_FALSE(fs::exists(dir / "e.jsonl"));
}

int RunCli(const std::string& args) {
  const std::string command =
      std::string(RADE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

TEST(CliTest, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli(""), 1);
  EXPECT_EQ(RunCli("frobnicate"), 1);
  EXPECT_EQ(RunCli("correlate --data x.jsonl"), 1);
  EXPECT_EQ(RunCli("baselines --data " + (dir / "missing.jsonl").string()), 2);
  SaveDataset(RatedFixture(6, 1), dir / "d.jsonl");
  EXPECT_EQ(RunCli("baselines --n-perm 0 --data " + (dir / "d.jsonl").string()), 0);
  EXPECT_EQ(RunCli("train --train " + (dir / "d.jsonl").string() + " --stage sideways --out " +
                   (dir / "m.json").string() + " --history " + (dir / "h.jsonl").string()),
            1);
  EXPECT_FALSE(fs::exists(dir / "m.json"));
}

TEST(CliTest, ResolvesInputsUnderDataDir) {
  TempDir dir;
  SaveDataset(RatedFixture(6, 1), dir / "d.jsonl");
  const std::string command = "RADE_DATA_DIR=" + dir.path().string() + " " +
                              RADE_CLI_PATH + " baselines --n-perm 0 --data d.jsonl" +
                              " >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(command.c_str())), 0);
}

}  // namespace
}  // namespace rade::cli
