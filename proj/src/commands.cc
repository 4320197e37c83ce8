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
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace attnsv {

namespace fs = std::filesystem;

namespace {

constexpr const char *kStepTensor = "meta/step";
constexpr int kRecentLossWindow = 100;

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) throw DataError("cannot write " + path.string());
}

void EnsureDir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<std::string> SplitCsv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

int ExitCodeForCurrentException(std::ostream &err) {
  try {
    throw;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError &e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError &e) {
    err << "shape error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

size_t CmdGenData(const RunConfig &config) {
  config.Validate();
  const SynthCorpusModel synth(config.ToSynthSpec());
  const fs::path dir(config.corpus);
  EnsureDir(dir / "features");
  const int first_test = config.num_speakers - config.NumTestSpeakers();
  std::ostringstream manifest;
  manifest << "path,speaker,keyword,split\n";
  size_t count = 0;
  for (int s = 0; s < config.num_speakers; ++s) {
    for (Keyword k : {Keyword::kA, Keyword::kB}) {
      for (int i = 0; i < config.utterances_per_speaker; ++i) {
        const FeatureMatrix u = synth.Utterance(s, k, i);
        const std::string rel = "features/" + u.utterance_id + ".atnf";
        WriteFeatures((dir / rel).string(), u);
        manifest << rel << "," << s << "," << KeywordName(k) << ","
                 << (s >= first_test ? "test" : "train") << "\n";
        ++count;
      }
    }
  }
  WriteText(dir / "manifest.csv", manifest.str());
  return count;
}

Corpus LoadCorpus(const std::string &dir, Split split) {
  std::ifstream is(fs::path(dir) / "manifest.csv");
  if (!is) throw DataError("no manifest.csv in corpus directory " + dir);
  std::string line;
  std::getline(is, line);
  if (line != "path,speaker,keyword,split")
    throw DataError("manifest.csv has an unexpected header: " + line);
  Corpus corpus;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != 4)
      throw DataError("manifest.csv row " + std::to_string(row) + " is malformed");
    const std::string &which = cells[3];
    if (which != "train" && which != "test")
      throw DataError("manifest.csv row " + std::to_string(row) + ": unknown split " + which);
    if ((split == Split::kTrain && which != "train") ||
        (split == Split::kTest && which != "test"))
      continue;
    FeatureMatrix u = ReadFeatures((fs::path(dir) / cells[0]).string());
    if (u.num_frames() != kSegmentFrames)
      throw DataError(cells[0] + ": expected " + std::to_string(kSegmentFrames) +
                      " frames, got " + std::to_string(u.num_frames()));
    u.utterance_id = fs::path(cells[0]).stem().string();
    try {
      u.speaker = std::stoi(cells[1]);
    } catch (const std::exception &) {
      throw DataError("manifest.csv row " + std::to_string(row) + ": bad speaker id");
    }
    u.keyword = ParseKeyword(cells[2]);
    corpus.Add(std::move(u));
  }
  return corpus;
}

void SaveModel(const std::string &path, const Model &model, uint64_t step) {
  ParameterSet tensors = model.params;
  tensors[kStepTensor] = Tensor::Constant(1, 1, static_cast<double>(step));
  WriteCheckpoint(path, tensors);
}

Model LoadModel(const std::string &path, const ModelConfig &config, uint64_t *step) {
  ParameterSet tensors = ReadCheckpoint(path);
  uint64_t stored = 0;
  if (auto it = tensors.find(kStepTensor); it != tensors.end()) {
    stored = static_cast<uint64_t>(it->second(0, 0));
    tensors.erase(it);
  }
  CheckModelParams(config, tensors);
  if (step) *step = stored;
  return Model{config, std::move(tensors)};
}

TrainSummary CmdTrain(const RunConfig &config, std::ostream &progress) {
  if (!config.has_seed) throw ConfigError("train requires an explicit --seed");
  config.Validate();
  const ModelConfig model_config = config.ToModelConfig();
  const OptimizerConfig opt = config.ToOptimizerConfig();
  const Corpus corpus = LoadCorpus(config.corpus, Split::kTrain);
  const TupleBuilder builder(corpus, opt.num_enroll);
  EnsureDir(config.out);
  const std::string ckpt = config.CheckpointPath();
  if (fs::path(ckpt).has_parent_path()) EnsureDir(fs::path(ckpt).parent_path());

  uint64_t step = 0;
  Model model;
  const bool resuming = config.resume && fs::exists(ckpt);
  if (resuming) {
    model = LoadModel(ckpt, model_config, &step);
    progress << "resuming from step " << step << "\n";
  } else {
    model = InitModel(model_config, config.seed);
  }
  const fs::path log_path = fs::path(config.out) / "train_log.csv";
  std::ofstream log(log_path, resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write " + log_path.string());
  log.precision(10);
  if (!resuming) log << "step,keyword,is_positive,loss,grad_norm\n";

  std::deque<double> recent;
  const uint64_t total = static_cast<uint64_t>(opt.steps);
  for (; step < total; ++step) {
    auto rng = StepRng(config.seed, step);
    const Tuple tuple =
        builder.Build(rng, ScheduledPositive(step), ScheduledKeyword(step));
    StepResult r;
    try {
      r = TrainStep(model, tuple, opt);
    } catch (const NumericError &e) {
      log.flush();
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(step) +
                         "; last good checkpoint kept at " + ckpt);
    }
    log << step << "," << KeywordName(tuple.keyword) << ","
        << (tuple.positive ? 1 : 0) << "," << r.loss << "," << r.grad_norm << "\n";
    recent.push_back(r.loss);
    if (recent.size() > kRecentLossWindow) recent.pop_front();
    if ((step + 1) % static_cast<uint64_t>(config.checkpoint_every) == 0) {
      SaveModel(ckpt, model, step + 1);
      const double mean =
          std::accumulate(recent.begin(), recent.end(), 0.0) / recent.size();
      progress << "step " << step + 1 << " mean loss " << mean << "\n";
    }
  }
  SaveModel(ckpt, model, step);
  TrainSummary summary;
  summary.steps_done = step;
  if (!recent.empty())
    summary.mean_recent_loss =
        std::accumulate(recent.begin(), recent.end(), 0.0) / recent.size();
  log << "# mean_loss_last_100 = " << summary.mean_recent_loss << "\n";
  progress << "done: " << step << " steps, mean loss over last "
           << recent.size() << " steps " << summary.mean_recent_loss << "\n";
  return summary;
}

MatrixEvalResult CmdEval(const RunConfig &config) {
  config.Validate();
  const Model model = LoadModel(config.CheckpointPath(), config.ToModelConfig());
  const Corpus corpus = LoadCorpus(config.corpus, Split::kTest);
  const TrialSet trials = TrialSet::FromCorpus(corpus, config.eval_enroll);
  const MatrixEvalResult result = RunMatrixEval(model, trials);
  EnsureDir(config.out);
  WriteText(fs::path(config.out) / "results.csv", FormatResultsCsv(result));
  for (int e = 0; e < 2; ++e) {
    for (int v = 0; v < 2; ++v) {
      const auto det = DetCurve(result.targets[e][v], result.impostors[e][v]);
      WriteText(fs::path(config.out) / ("det_" + std::string(KeywordName(Keyword(e))) +
                                        "_" + KeywordName(Keyword(v)) + ".csv"),
                FormatDetCsv(det));
    }
  }
  return result;
}

HeatmapImage RenderHeatmap(const std::vector<Eigen::VectorXd> &rows) {
  HeatmapImage image;
  image.rows = static_cast<int>(rows.size());
  image.cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  double peak = 0.0;
  for (const auto &r : rows) peak = std::max(peak, r.maxCoeff());
  for (const auto &r : rows) {
    if (r.size() != image.cols) throw std::invalid_argument("heatmap rows differ in length");
    for (Eigen::Index t = 0; t < r.size(); ++t) {
      uint8_t px = 0;
      if (r(t) > 0.0 && peak > 0.0)
        px = static_cast<uint8_t>(std::clamp(std::lround(255.0 * r(t) / peak), 1L, 255L));
      image.pixels.push_back(px);
    }
  }
  return image;
}

std::vector<HeatmapImage> CmdVizWeights(const RunConfig &config) {
  config.Validate();
  const ModelConfig model_config = config.ToModelConfig();
  if (model_config.dvector.mode == AttentionMode::kLastFrame)
    throw ConfigError("no attention weights: mode 'baseline' takes the last frame");
  const Model model = LoadModel(config.CheckpointPath(), model_config);
  const Corpus corpus = LoadCorpus(config.corpus, Split::kTest);
  const auto &utts = corpus.utterances();
  const size_t batch = std::min<size_t>(config.viz_batch, utts.size());
  EnsureDir(config.out);

  std::vector<HeatmapImage> images;
  for (PoolingKind kind :
       {PoolingKind::kNone, PoolingKind::kSlidingWindow, PoolingKind::kTopK}) {
    PoolingConfig pooling = model_config.dvector.pooling;
    pooling.kind = kind;
    std::vector<Eigen::VectorXd> rows;
    std::ostringstream csv;
    csv.precision(10);
    csv << "utterance";
    for (int t = 0; t < kSegmentFrames; ++t) csv << ",t" << t;
    csv << "\n";
    for (size_t i = 0; i < batch; ++i) {
      const Embedding e = Embed(model, utts[i], pooling);
      rows.push_back(e.attention->weights);
      csv << utts[i].utterance_id;
      for (Eigen::Index t = 0; t < rows.back().size(); ++t) csv << "," << rows.back()(t);
      csv << "\n";
    }
    HeatmapImage image = RenderHeatmap(rows);
    image.pooling = PoolingKindName(kind);
    const fs::path stem = fs::path(config.out) / ("weights_" + image.pooling);
    std::string pgm = "P5\n" + std::to_string(image.cols) + " " +
                      std::to_string(image.rows) + "\n255\n";
    pgm.append(image.pixels.begin(), image.pixels.end());
    WriteText(stem.string() + ".pgm", pgm);
    WriteText(stem.string() + ".csv", csv.str());
    images.push_back(std::move(image));
  }
  return images;
}

namespace {

constexpr int kCheckFrames = 8;
constexpr int kCheckInputDim = 3;
constexpr int kCheckEnroll = 2;

ModelConfig GradcheckModel(ScoringKind kind, AttentionMode mode, PoolingKind pooling) {
  NetworkConfig net;
  net.input_dim = kCheckInputDim;
  net.num_layers = 2;
  net.cell_dim = 8;
  net.projection_dim = 4;
  net.last_projection_dim = 4;
  net.final_linear_dim = 4;
  net.init_scale = 0.5;
  DVectorConfig head;
  head.mode = mode;
  head.scoring = {kind, 4};
  head.pooling = {pooling, 3, 2, 3, true};
  head.num_frames = kCheckFrames;
  return ModelConfig::Resolve(net, head);
}

FeatureMatrix RandomUtterance(std::mt19937_64 &rng, int speaker) {
  std::normal_distribution<double> normal;
  FeatureMatrix u;
  u.frames.resize(kCheckFrames, kCheckInputDim);
  for (Eigen::Index i = 0; i < u.frames.size(); ++i)
    u.frames.data()[i] = static_cast<float>(normal(rng));
  u.speaker = speaker;
  return u;
}

}  // namespace

std::vector<GradcheckRow> CmdGradcheck(const RunConfig &config, std::ostream &report) {
  if (config.gradcheck_seeds < 1) throw ConfigError("gradcheck_seeds must be >= 1");
  std::vector<GradcheckRow> rows;
  GradCheckOptions options;
  options.corrupt_analytic = config.corrupt_gradient;
  const ScoringKind kinds[] = {ScoringKind::kBiasOnly, ScoringKind::kLinear,
                               ScoringKind::kSharedLinear, ScoringKind::kNonLinear,
                               ScoringKind::kSharedNonLinear};
  const AttentionMode modes[] = {AttentionMode::kBasic, AttentionMode::kCrossLayer,
                                 AttentionMode::kDividedLayer};
  const PoolingKind poolings[] = {PoolingKind::kNone, PoolingKind::kSlidingWindow,
                                  PoolingKind::kTopK};
  report << "scoring,mode,pooling,max_rel_error,status\n";
  for (ScoringKind kind : kinds) {
    for (AttentionMode mode : modes) {
      for (PoolingKind pooling : poolings) {
        const ModelConfig mc = GradcheckModel(kind, mode, pooling);
        GradcheckRow row{ScoringKindName(kind), AttentionModeName(mode),
                         PoolingKindName(pooling), 0.0};
        for (int s = 0; s < config.gradcheck_seeds; ++s) {
          const uint64_t seed = config.seed + static_cast<uint64_t>(s);
          Model model = InitModel(mc, seed);
          std::mt19937_64 rng(seed);
          std::uniform_real_distribution<double> scale(0.5, 3.0), offset(-1.0, 1.0);
          model.params[kSimilarityW](0, 0) = scale(rng);
          model.params[kSimilarityB](0, 0) = offset(rng);
          Tuple tuple;
          tuple.positive = s % 2 == 0;
          for (int n = 0; n < kCheckEnroll; ++n)
            tuple.enrollment.push_back(RandomUtterance(rng, 0));
          tuple.evaluation = RandomUtterance(rng, tuple.positive ? 0 : 1);
          const auto fn = [&](Tape &tape, const Bindings &params) {
            return BuildTupleLoss(tape, params, mc, tuple, LossForm::kCorrected);
          };
          const GradCheckResult r = GradCheck(fn, model.params, options);
          row.max_relative_error = std::max(row.max_relative_error, r.max_relative_error);
        }
        report << row.scoring << "," << row.mode << "," << row.pooling << ","
               << row.max_relative_error << ","
               << (row.max_relative_error < kGradcheckTolerance ? "pass" : "FAIL")
               << "\n";
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace attnsv
