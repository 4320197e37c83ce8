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

#ifndef ATTNSV_COMMANDS_H_
#define ATTNSV_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "attnsv/config.h"
#include "attnsv/eval.h"

namespace attnsv {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

// Maps the exception currently being handled to an exit code and prints
// it to `err`.
int ExitCodeForCurrentException(std::ostream &err);

// Writes <corpus>/features/*.atnf and <corpus>/manifest.csv with columns
// path,speaker,keyword,split. Returns the number of utterances.
size_t CmdGenData(const RunConfig &config);

enum class Split { kTrain, kTest, kAll };
Corpus LoadCorpus(const std::string &dir, Split split);

struct TrainSummary {
  uint64_t steps_done = 0;
  double mean_recent_loss = 0.0;  // over the last 100 steps of this run
};

// Trains from <corpus> (train split), writing the checkpoint every
// checkpoint_every steps and at the end, and appending rows
// step,keyword,is_positive,loss,grad_norm to <out>/train_log.csv.
TrainSummary CmdTrain(const RunConfig &config, std::ostream &progress);

// Model and training step stored in one checkpoint file.
void SaveModel(const std::string &path, const Model &model, uint64_t step);
Model LoadModel(const std::string &path, const ModelConfig &config,
                uint64_t *step = nullptr);

// Evaluates the checkpoint on the test split; writes <out>/results.csv and
// <out>/det_<E>_<V>.csv.
MatrixEvalResult CmdEval(const RunConfig &config);

// Heatmaps of the first viz_batch test utterances, one per pooling kind:
// <out>/weights_{none,sliding,topk}.{pgm,csv}.
struct HeatmapImage {
  std::string pooling;
  int rows = 0, cols = 0;
  std::vector<uint8_t> pixels;  // row-major
};
std::vector<HeatmapImage> CmdVizWeights(const RunConfig &config);
// Intensity proportional to weight, scaled so the image maximum is 255;
// any nonzero weight maps to at least 1.
HeatmapImage RenderHeatmap(const std::vector<Eigen::VectorXd> &rows);

struct GradcheckRow {
  std::string scoring, mode, pooling;
  double max_relative_error = 0.0;
};
// Full tuple loss at small dimensions (T = 8, m = 4), every scoring kind x
// attention mode x pooling kind, gradcheck_seeds points each.
std::vector<GradcheckRow> CmdGradcheck(const RunConfig &config, std::ostream &report);
inline constexpr double kGradcheckTolerance = 1e-4;

}  // namespace attnsv

#endif  // ATTNSV_COMMANDS_H_
