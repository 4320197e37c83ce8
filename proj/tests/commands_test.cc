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

#include "attnsv/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "attnsv/binary_io.h"
#include "test_util.h"

namespace attnsv {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const std::string &path) {
  std::string bytes;
  EXPECT_TRUE(ReadFileBytes(path, &bytes)) << path;
  return bytes;
}

// Small geometry so every command finishes in well under a second.
RunConfig SmallRun(const testing::ScratchDir &dir) {
  RunConfig c;
  c.Set("seed", "3");
  c.corpus = dir / "corpus";
  c.out = dir / "out";
  c.num_speakers = 6;
  c.utterances_per_speaker = 6;
  c.num_layers = 2;
  c.cell_dim = 12;
  c.projection_dim = 6;
  c.final_linear_dim = 6;
  c.attention_hidden = 5;
  c.mode = "divided";
  c.pooling = "sliding";
  c.steps = 6;
  c.checkpoint_every = 2;
  c.num_enroll = 2;
  c.eval_enroll = 2;
  c.viz_batch = 5;
  c.test_fraction = 0.34;
  return c;
}

TEST(GenData, WritesADeterministicManifest) {
  testing::ScratchDir dir("gen");
  RunConfig a = SmallRun(dir);
  EXPECT_EQ(CmdGenData(a), 72u);
  RunConfig b = a;
  b.corpus = dir / "corpus2";
  CmdGenData(b);
  const std::string manifest = Slurp(a.corpus + "/manifest.csv");
  EXPECT_EQ(manifest, Slurp(b.corpus + "/manifest.csv"));
  std::istringstream rows(manifest);
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "path,speaker,keyword,split");
  int train = 0, test = 0;
  while (std::getline(rows, line)) {
    const std::string path = line.substr(0, line.find(','));
    EXPECT_EQ(Slurp(a.corpus + "/" + path), Slurp(b.corpus + "/" + path)) << path;
    (line.ends_with(",test") ? test : train)++;
  }
  EXPECT_EQ(train, 4 * 12);
  EXPECT_EQ(test, 2 * 12);
  EXPECT_EQ(LoadCorpus(a.corpus, Split::kTest).utterances().size(), 24u);
  EXPECT_EQ(LoadCorpus(a.corpus, Split::kAll).utterances().size(), 72u);
  EXPECT_EQ(LoadCorpus(a.corpus, Split::kTest).Speakers(Keyword::kB),
            (std::vector<int>{4, 5}));
  EXPECT_THROW(LoadCorpus(dir / "missing", Split::kAll), DataError);
}

TEST(Train, ZeroStepsStoresTheInitialModel) {
  testing::ScratchDir dir("train0");
  RunConfig c = SmallRun(dir);
  CmdGenData(c);
  c.steps = 0;
  std::ostringstream progress;
  EXPECT_EQ(CmdTrain(c, progress).steps_done, 0u);
  uint64_t step = 99;
  const Model loaded = LoadModel(c.CheckpointPath(), c.ToModelConfig(), &step);
  EXPECT_EQ(step, 0u);
  EXPECT_EQ(loaded.params, InitModel(c.ToModelConfig(), 3).params);
}

TEST(Train, RequiresASeed) {
  testing::ScratchDir dir("train_seed");
  RunConfig c = SmallRun(dir);
  CmdGenData(c);
  c.has_seed = false;
  std::ostringstream progress;
  EXPECT_THROW(CmdTrain(c, progress), ConfigError);
}

TEST(Train, LogAndResumeMatchAStraightRun) {
  testing::ScratchDir dir("resume");
  RunConfig straight = SmallRun(dir);
  CmdGenData(straight);
  std::ostringstream progress;
  const TrainSummary s = CmdTrain(straight, progress);
  EXPECT_EQ(s.steps_done, 6u);
  EXPECT_TRUE(std::isfinite(s.mean_recent_loss));

  std::istringstream log(Slurp(straight.out + "/train_log.csv"));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "step,keyword,is_positive,loss,grad_norm");
  for (int step = 0; step < 6; ++step) {
    ASSERT_TRUE(std::getline(log, line));
    const std::string expect = std::to_string(step) + "," + (step % 2 ? "B" : "A") +
                               "," + ((step / 2) % 2 == 0 ? "1" : "0") + ",";
    EXPECT_EQ(line.rfind(expect, 0), 0u) << line;
  }
  ASSERT_TRUE(std::getline(log, line));
  EXPECT_EQ(line.rfind("# mean_loss_last_100 = ", 0), 0u);

  RunConfig split = straight;
  split.out = dir / "split";
  split.steps = 4;
  CmdTrain(split, progress);
  split.steps = 6;
  split.resume = true;
  CmdTrain(split, progress);
  EXPECT_EQ(Slurp(split.CheckpointPath()), Slurp(straight.CheckpointPath()));
}

TEST(Eval, WritesResultsAndDetCurves) {
  testing::ScratchDir dir("eval");
  RunConfig c = SmallRun(dir);
  CmdGenData(c);
  std::ostringstream progress;
  CmdTrain(c, progress);
  const MatrixEvalResult r = CmdEval(c);
  EXPECT_EQ(r.cells[0][1].num_target, 2u * 4);
  EXPECT_EQ(r.cells[0][1].num_impostor, 2u * 4);
  const std::string csv = Slurp(c.out + "/results.csv");
  EXPECT_EQ(csv, FormatResultsCsv(r));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  for (const char *cell : {"A_A", "A_B", "B_A", "B_B"})
    EXPECT_TRUE(fs::exists(c.out + "/det_" + cell + ".csv")) << cell;
}

TEST(VizWeights, PixelCountsFollowThePooling) {
  testing::ScratchDir dir("viz");
  RunConfig c = SmallRun(dir);
  CmdGenData(c);
  c.steps = 0;
  std::ostringstream progress;
  CmdTrain(c, progress);
  const std::vector<HeatmapImage> images = CmdVizWeights(c);
  ASSERT_EQ(images.size(), 3u);
  for (const HeatmapImage &img : images) {
    EXPECT_EQ(img.rows, 5);
    EXPECT_EQ(img.cols, 80);
    const std::string pgm = Slurp(c.out + "/weights_" + img.pooling + ".pgm");
    EXPECT_EQ(pgm.rfind("P5\n80 5\n255\n", 0), 0u);
    EXPECT_EQ(pgm.size(), std::string("P5\n80 5\n255\n").size() + 400);
    for (int r = 0; r < img.rows; ++r) {
      int nonzero = 0;
      for (int t = 0; t < img.cols; ++t) nonzero += img.pixels[r * img.cols + t] > 0;
      if (img.pooling == "topk") EXPECT_EQ(nonzero, c.pool_k);
      if (img.pooling == "sliding") EXPECT_LE(nonzero, (80 + c.pool_step - 1) / c.pool_step);
      if (img.pooling == "none") EXPECT_EQ(nonzero, 80);
    }
    EXPECT_TRUE(fs::exists(c.out + "/weights_" + img.pooling + ".csv"));
  }
  c.mode = "baseline";
  EXPECT_THROW(CmdVizWeights(c), ConfigError);
}

TEST(RenderHeatmap, ScalesToThePeak) {
  const std::vector<Eigen::VectorXd> rows{Eigen::Vector3d(0.0, 1e-9, 0.5),
                                          Eigen::Vector3d(0.25, 0.0, 0.0)};
  const HeatmapImage img = RenderHeatmap(rows);
  EXPECT_EQ(img.pixels, (std::vector<uint8_t>{0, 1, 255, 128, 0, 0}));
}

TEST(Gradcheck, EveryCombinationPasses) {
  RunConfig c;
  c.gradcheck_seeds = 1;
  std::ostringstream report;
  const std::vector<GradcheckRow> rows = CmdGradcheck(c, report);
  ASSERT_EQ(rows.size(), 45u);
  for (const GradcheckRow &row : rows)
    EXPECT_LT(row.max_relative_error, kGradcheckTolerance)
        << row.scoring << " " << row.mode << " " << row.pooling;
  EXPECT_EQ(report.str().rfind("scoring,mode,pooling,max_rel_error,status\n", 0), 0u);
}

TEST(ExitCodes, MapExceptionKinds) {
  auto code = [](auto thrower) {
    std::ostringstream err;
    try {
      thrower();
    } catch (...) {
      return ExitCodeForCurrentException(err);
    }
    return -1;
  };
  EXPECT_EQ(code([] { throw ConfigError("x"); }), kExitUsage);
  EXPECT_EQ(code([] { throw DataError("x"); }), kExitData);
  EXPECT_EQ(code([] { throw NumericError("x"); }), kExitNumeric);
}

#ifdef ATTNSV_CLI_PATH
int RunCli(const std::string &args) {
  const std::string cmd =
      std::string(ATTNSV_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  testing::ScratchDir dir("cli");
  EXPECT_EQ(RunCli(""), kExitUsage);
  EXPECT_EQ(RunCli("train --bogus"), kExitUsage);
  EXPECT_EQ(RunCli("train --corpus " + dir / "c"), kExitUsage);
  EXPECT_EQ(RunCli("train --seed 1 --corpus " + dir / "missing"), kExitData);
  EXPECT_EQ(RunCli("gen-data --set nope=1"), kExitUsage);
  EXPECT_EQ(RunCli("gen-data --set num_speakers=3 --set utterances_per_speaker=2 "
                   "--corpus " + dir / "c"),
            kExitOk);
  EXPECT_EQ(RunCli("gradcheck --set gradcheck_seeds=1 --set corrupt_gradient=0.01"),
            kExitNumeric);
}
#endif

}  // namespace
}  // namespace attnsv
