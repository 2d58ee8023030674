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

// rade: command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rade/annotation.h"
#include "rade/annotation_http.h"
#include "rade/commands.h"
#include "rade/error.h"
#include "rade/file_util.h"
#include "rade/log.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

rade::annotation::HttpServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

void WriteReport(const rade::cli::EvaluationReport& report,
                 const std::optional<fs::path>& out) {
  std::cout << report.ToTable();
  if (out) rade::WriteFileAtomic(*out, report.ToJson().dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RADE dialogue evaluation toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // train
  rade::cli::TrainOptions train;
  std::string stage_name;
  int epochs = -1;
  std::uint64_t train_seed = 0;
  bool lenient = false;
  std::string config_path, dev_path, init_path;
  auto* train_cmd = app.add_subcommand("train", "Train one stage");
  train_cmd->add_option("--config", config_path, "Config file (JSON or key = value)");
  train_cmd->add_option("--train", train.train_data, "Training data (JSONL)")->required();
  train_cmd->add_option("--dev", dev_path, "Dev data used for model selection");
  train_cmd->add_option("--init", init_path, "Checkpoint to continue from");
  train_cmd->add_option("--out", train.out_checkpoint, "Checkpoint output")->required();
  train_cmd->add_option("--history", train.out_history, "History output (JSONL)")->required();
  train_cmd->add_option("--stage", stage_name, "pretrain | finetune");
  train_cmd->add_option("--epochs", epochs, "Override the epoch count")->check(CLI::NonNegativeNumber);
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_flag("--lenient", lenient, "Skip invalid records instead of failing");

  // evaluate
  fs::path eval_checkpoint, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score every example with a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--out", eval_out, "Predictions output (JSONL)")->required();

  // correlate / baselines
  fs::path corr_predictions, corr_data;
  std::string corr_out;
  rade::cli::CorrelateOptions corr;
  auto* corr_cmd = app.add_subcommand("correlate", "Correlate predictions with human scores");
  corr_cmd->add_option("--predictions", corr_predictions)->required();
  corr_cmd->add_option("--data", corr_data)->required();
  corr_cmd->add_option("--out", corr_out, "Report output (JSON)");
  corr_cmd->add_option("--n-perm", corr.n_permutations, "Permutations for p-values");
  corr_cmd->add_option("--seed", corr.seed);
  corr_cmd->add_option("--method", corr.method, "Row label");

  fs::path base_data;
  std::string base_out;
  rade::cli::CorrelateOptions base;
  auto* base_cmd = app.add_subcommand("baselines", "Correlate BLEU-2, ROUGE-L and METEOR");
  base_cmd->add_option("--data", base_data)->required();
  base_cmd->add_option("--out", base_out, "Report output (JSON)");
  base_cmd->add_option("--n-perm", base.n_permutations);
  base_cmd->add_option("--seed", base.seed);

  // agreement
  fs::path agree_data;
  std::string agree_out;
  bool subsample = false;
  auto* agree_cmd = app.add_subcommand("agreement", "Fleiss' kappa over annotator ratings");
  agree_cmd->add_option("--data", agree_data)->required();
  agree_cmd->add_option("--out", agree_out);
  agree_cmd->add_flag("--subsample", subsample,
                      "Cut every example to the smallest annotator count");

  // scatter
  fs::path scatter_predictions, scatter_data, scatter_out;
  rade::cli::ScatterOptions scatter;
  auto* scatter_cmd = app.add_subcommand("scatter", "Export (predicted, human) pairs");
  scatter_cmd->add_option("--predictions", scatter_predictions)->required();
  scatter_cmd->add_option("--data", scatter_data)->required();
  scatter_cmd->add_option("--out", scatter_out)->required();
  scatter_cmd->add_option("--method", scatter.method);
  scatter_cmd->add_flag("--sort-by-human", scatter.sort_by_human);

  // index / retrieve
  fs::path index_corpus, index_out;
  auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a dataset");
  index_cmd->add_option("--corpus", index_corpus)->required();
  index_cmd->add_option("--out", index_out)->required();

  fs::path retrieve_index, retrieve_data, retrieve_out;
  rade::cli::RetrieveOptions retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Install retrieved pseudo-references");
  retrieve_cmd->add_option("--index", retrieve_index, "Saved index or corpus dataset")->required();
  retrieve_cmd->add_option("--data", retrieve_data)->required();
  retrieve_cmd->add_option("--out", retrieve_out)->required();
  retrieve_cmd->add_option("--k", retrieve.k)->check(CLI::PositiveNumber);
  retrieve_cmd->add_flag("--last-turn", retrieve.last_turn_only, "Query with the last turn only");

  // serve
  std::vector<fs::path> serve_data;
  fs::path serve_log;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation service");
  serve_cmd->add_option("--data", serve_data, "Datasets to annotate")->required();
  serve_cmd->add_option("--log", serve_log, "Event log (JSONL)")->required();
  serve_cmd->add_option("--host", serve_host);
  serve_cmd->add_option("--port", serve_port);
  serve_cmd->add_option("--static-dir", static_dir, "Browser client assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (verbose) rade::MinLogLevel() = rade::LogLevel::kInfo;

  try {
    if (*train_cmd) {
      if (!config_path.empty()) train.config = config_path;
      if (!dev_path.empty()) train.dev_data = dev_path;
      if (!init_path.empty()) train.init_checkpoint = init_path;
      if (!stage_name.empty()) {
        train.stage = rade::training::ParseStage(stage_name);
        if (!train.stage) {
          throw rade::Error(rade::ErrorCode::kUsage, "unknown stage '" + stage_name + "'");
        }
      }
      if (epochs >= 0) train.epochs = epochs;
      if (train_seed_opt->count() > 0) train.seed = train_seed;
      train.strict = !lenient;
      rade::cli::CmdTrain(train, std::cout);
    } else if (*eval_cmd) {
      rade::cli::CmdEvaluate(eval_checkpoint, eval_data, eval_out);
    } else if (*corr_cmd) {
      WriteReport(rade::cli::CmdCorrelate(corr_predictions, corr_data, corr),
                  corr_out.empty() ? std::nullopt : std::optional<fs::path>(corr_out));
    } else if (*base_cmd) {
      WriteReport(rade::cli::CmdBaselines(base_data, base),
                  base_out.empty() ? std::nullopt : std::optional<fs::path>(base_out));
    } else if (*agree_cmd) {
      const auto r = rade::cli::CmdAgreement(agree_data, subsample);
      const std::string text = json{{"kappa", r.kappa},
                                    {"n_items", r.n_items},
                                    {"n_raters", r.n_raters},
                                    {"n_categories", r.n_categories}}
                                   .dump(2) +
                               "\n";
      std::cout << text;
      if (!agree_out.empty()) rade::WriteFileAtomic(agree_out, text);
    } else if (*scatter_cmd) {
      rade::cli::CmdScatter(scatter_predictions, scatter_data, scatter_out, scatter);
    } else if (*index_cmd) {
      rade::cli::CmdIndex(index_corpus, index_out);
    } else if (*retrieve_cmd) {
      rade::cli::CmdRetrieve(retrieve_index, retrieve_data, retrieve_out, retrieve);
    } else if (*serve_cmd) {
      std::vector<rade::Dataset> datasets;
      for (const auto& path : serve_data) {
        datasets.push_back(rade::LoadDataset(rade::cli::ResolveInput(path)));
      }
      rade::annotation::AnnotationService service(std::move(datasets), serve_log);
      rade::annotation::HttpServer server(
          service, static_dir.empty() ? std::nullopt
                                      : std::optional<fs::path>(static_dir));
      const int port = server.Bind(serve_host, serve_port);
      std::cout << "listening on " << serve_host << ":" << port << std::endl;
      g_server = &server;
      std::signal(SIGINT, HandleSignal);
      std::signal(SIGTERM, HandleSignal);
      server.Serve();
      g_server = nullptr;
    }
  } catch (const rade::Error& e) {
    std::cerr << "rade: " << rade::ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return rade::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "rade: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
