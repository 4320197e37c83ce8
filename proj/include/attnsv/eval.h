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

#ifndef ATTNSV_EVAL_H_
#define ATTNSV_EVAL_H_

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attnsv/loss.h"

namespace attnsv {

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  size_t num_target = 0;
  size_t num_impostor = 0;
};

// Sweeps thresholds at -inf, +inf and every midpoint between consecutive
// distinct scores. FRR counts targets below the threshold, FAR impostors at
// or above it. Picks the threshold minimizing |FAR - FRR| (lowest on ties)
// and reports (FAR + FRR) / 2 there.
EerResult ComputeEer(std::span<const double> targets,
                     std::span<const double> impostors);

struct DetPoint {
  double threshold, far, frr;
};
// Operating points at the same candidate thresholds, ascending.
std::vector<DetPoint> DetCurve(std::span<const double> targets,
                               std::span<const double> impostors);

using Embedder = std::function<Eigen::VectorXd(const FeatureMatrix &)>;
Embedder ModelEmbedder(const Model &model);

Eigen::VectorXd Enroll(const Embedder &embed, std::span<const FeatureMatrix> utterances);
// Raw cosine between the utterance's d-vector and the centroid.
double TrialScore(const Embedder &embed, const Eigen::VectorXd &centroid,
                  const FeatureMatrix &utterance);

// Per keyword: disjoint enrollment and verification utterances.
struct TrialSet {
  std::map<int, std::vector<FeatureMatrix>> enrollment[2];
  std::vector<FeatureMatrix> verification[2];

  // The first `num_enroll` utterances of every speaker and keyword enroll,
  // the rest verify.
  static TrialSet FromCorpus(const Corpus &corpus, int num_enroll);
  void Validate() const;
};

struct MatrixEvalResult {
  EerResult cells[2][2];  // [enroll keyword][verify keyword]
  double average = 0.0;
  // Raw trial scores per cell, kept for DET export.
  std::vector<double> targets[2][2], impostors[2][2];
};

// Every verification utterance is scored against every enrolled speaker.
MatrixEvalResult RunMatrixEval(const Embedder &embed, const TrialSet &trials);
MatrixEvalResult RunMatrixEval(const Model &model, const TrialSet &trials);

// enroll_keyword,verify_keyword,eer,threshold,n_target,n_impostor rows for
// A->A, A->B, B->A, B->B and a final "average" row.
std::string FormatResultsCsv(const MatrixEvalResult &result);
std::string FormatDetCsv(std::span<const DetPoint> points);

}  // namespace attnsv

#endif  // ATTNSV_EVAL_H_
