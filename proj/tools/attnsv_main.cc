// Copyright 2026 The attnsv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// attnsv: synthetic-corpus generation, training, evaluation, gradient
// checking and attention heatmaps for attention-pooled d-vector models.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attnsv/commands.h"

namespace {

struct Flags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out, checkpoint, corpus, scoring, mode, pooling;
  std::vector<std::string> overrides;
};

void AddCommonFlags(CLI::App *cmd, Flags *flags) {
  cmd->add_option("--config", flags->config_path, "key = value config file");
  cmd->add_option("--seed", flags->seed, "RNG seed (required for train)");
  cmd->add_option("--out", flags->out, "output directory");
  cmd->add_option("--checkpoint", flags->checkpoint, "checkpoint path");
  cmd->add_option("--corpus", flags->corpus, "corpus directory");
  cmd->add_option("--scoring", flags->scoring, "bo|l|sl|nl|snl")
      ->check(CLI::IsMember({"bo", "l", "sl", "nl", "snl"}));
  cmd->add_option("--mode", flags->mode, "baseline|basic|cross|divided")
      ->check(CLI::IsMember({"baseline", "basic", "cross", "divided"}));
  cmd->add_option("--pooling", flags->pooling, "none|sliding|topk")
      ->check(CLI::IsMember({"none", "sliding", "topk"}));
  cmd->add_option("--set", flags->overrides, "override a config key: key=value");
}

attnsv::RunConfig Resolve(const Flags &flags) {
  attnsv::RunConfig config;
  if (!flags.config_path.empty()) config = attnsv::LoadConfig(flags.config_path);
  for (const std::string &kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw attnsv::ConfigError("--set expects key=value, got '" + kv + "'");
    config.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) config.Set("seed", std::to_string(*flags.seed));
  if (flags.out) config.out = *flags.out;
  if (flags.checkpoint) config.checkpoint = *flags.checkpoint;
  if (flags.corpus) config.corpus = *flags.corpus;
  if (flags.scoring) config.scoring = *flags.scoring;
  if (flags.mode) config.mode = *flags.mode;
  if (flags.pooling) config.pooling = *flags.pooling;
  return config;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Attention-pooled d-vector speaker verification on a synthetic keyword corpus"};
  app.require_subcommand(1);
  Flags flags;
  CLI::App *gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  CLI::App *train = app.add_subcommand("train", "train a model");
  CLI::App *eval = app.add_subcommand("eval", "EER for every enroll/verify keyword pair");
  CLI::App *grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
  CLI::App *viz = app.add_subcommand("viz-weights", "attention weight heatmaps");
  for (CLI::App *cmd : {gen, train, eval, grad, viz}) AddCommonFlags(cmd, &flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? attnsv::kExitOk : attnsv::kExitUsage;
  }

  try {
    const attnsv::RunConfig config = Resolve(flags);
    if (gen->parsed()) {
      const size_t n = attnsv::CmdGenData(config);
      std::cout << "wrote " << n << " utterances to " << config.corpus << "\n";
    } else if (train->parsed()) {
      attnsv::CmdTrain(config, std::cout);
    } else if (eval->parsed()) {
      const attnsv::MatrixEvalResult r = attnsv::CmdEval(config);
      std::cout << attnsv::FormatResultsCsv(r);
    } else if (grad->parsed()) {
      const auto rows = attnsv::CmdGradcheck(config, std::cout);
      for (const auto &row : rows)
        if (!(row.max_relative_error < attnsv::kGradcheckTolerance))
          return attnsv::kExitNumeric;
    } else if (viz->parsed()) {
      for (const auto &image : attnsv::CmdVizWeights(config))
        std::cout << "weights_" << image.pooling << ".pgm " << image.cols << "x"
                  << image.rows << "\n";
    }
  } catch (...) {
    return attnsv::ExitCodeForCurrentException(std::cerr);
  }
  return attnsv::kExitOk;
}
