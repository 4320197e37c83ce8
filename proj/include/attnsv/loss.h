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

#ifndef ATTNSV_LOSS_H_
#define ATTNSV_LOSS_H_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attnsv/model.h"

namespace attnsv {

// Mean of the L2-normalized vectors. Throws NumericError on a zero vector.
Eigen::VectorXd Centroid(std::span<const Eigen::VectorXd> dvectors);
double CosineSimilarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b);
// scale * cos(a, b) + offset.
double Similarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                  double scale, double offset);

// kCorrected is minimized by large s on positive tuples and small s on
// negative ones. kPaper keeps the printed form delta*sigma(s) +
// (1 - delta)*(1 - sigma(s)), which rewards the opposite.
enum class LossForm { kCorrected, kPaper };
const char *LossFormName(LossForm form);  // corrected | paper
LossForm ParseLossForm(const std::string &name);

double Te2eLoss(double similarity, bool positive,
                LossForm form = LossForm::kCorrected);

NodeId CentroidNodes(Tape &tape, std::span<const NodeId> dvectors);
NodeId SimilarityNodes(Tape &tape, NodeId dvector, NodeId centroid,
                       NodeId scale, NodeId offset);
NodeId Te2eLossNodes(Tape &tape, NodeId similarity, bool positive,
                     LossForm form);

// In-memory utterances indexed by keyword and speaker.
class Corpus {
 public:
  void Add(FeatureMatrix utterance);
  const std::vector<FeatureMatrix> &utterances() const { return utterances_; }
  // Utterance indices for (keyword, speaker), in insertion order.
  const std::vector<size_t> &Of(Keyword keyword, int speaker) const;
  // Speakers with at least `min_count` utterances of `keyword`, ascending.
  std::vector<int> Speakers(Keyword keyword, size_t min_count = 1) const;

 private:
  std::vector<FeatureMatrix> utterances_;
  std::map<int, std::vector<size_t>> index_[2];
};

struct Tuple {
  FeatureMatrix evaluation;
  std::vector<FeatureMatrix> enrollment;
  bool positive = true;
  Keyword keyword = Keyword::kA;
};

// Draws tuples of one evaluation and N enrollment utterances from a single
// keyword. Next() alternates the keyword A, B, A, B, ...
class TupleBuilder {
 public:
  TupleBuilder(const Corpus &corpus, int num_enroll);

  Tuple Build(std::mt19937_64 &rng, bool want_positive, Keyword keyword) const;
  Tuple Next(std::mt19937_64 &rng, bool want_positive);

 private:
  const Corpus &corpus_;
  int num_enroll_;
  Keyword next_keyword_ = Keyword::kA;
};

struct OptimizerConfig {
  double learning_rate = 0.01;
  double clip_norm = 3.0;
  int steps = 5000;
  int num_enroll = 4;
  uint64_t seed = 1;
  LossForm loss_form = LossForm::kCorrected;

  void Validate() const;
};

// Scalar loss node for one tuple; all N + 1 utterances share `params`.
NodeId BuildTupleLoss(Tape &tape, const Bindings &params,
                      const ModelConfig &config, const Tuple &tuple,
                      LossForm form);

struct StepResult {
  double loss = 0.0;       // before the update
  double grad_norm = 0.0;  // before clipping
};

inline constexpr double kMinSimilarityScale = 1e-6;

// Forward, backward, global-norm clipping, SGD update, scale clamp.
// Throws NumericError if the loss or gradient is not finite; the model is
// left untouched in that case.
StepResult TrainStep(Model &model, const Tuple &tuple,
                     const OptimizerConfig &config);

// Schedule used by training: the keyword flips every step and the tuple
// label every two steps, so each keyword sees both labels.
Keyword ScheduledKeyword(uint64_t step);
bool ScheduledPositive(uint64_t step);
// Tuple-sampling stream for one step, independent of earlier steps so a
// resumed run replays the same tuples.
std::mt19937_64 StepRng(uint64_t seed, uint64_t step);

}  // namespace attnsv

#endif  // ATTNSV_LOSS_H_
