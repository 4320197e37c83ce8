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

#include "attnsv/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace attnsv {

namespace {

std::vector<double> CandidateThresholds(const std::vector<double> &t,
                                        const std::vector<double> &i) {
  std::vector<double> all;
  all.reserve(t.size() + i.size());
  all.insert(all.end(), t.begin(), t.end());
  all.insert(all.end(), i.begin(), i.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> out;
  out.reserve(all.size() + 1);
  out.push_back(-std::numeric_limits<double>::infinity());
  for (size_t k = 1; k < all.size(); ++k) out.push_back(0.5 * (all[k - 1] + all[k]));
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

struct Sorted {
  std::vector<double> targets, impostors;
  Sorted(std::span<const double> t, std::span<const double> i)
      : targets(t.begin(), t.end()), impostors(i.begin(), i.end()) {
    if (targets.empty() || impostors.empty())
      throw std::invalid_argument("EER needs target and impostor scores");
    std::sort(targets.begin(), targets.end());
    std::sort(impostors.begin(), impostors.end());
  }
  DetPoint At(double threshold) const {
    const auto below_t =
        std::lower_bound(targets.begin(), targets.end(), threshold) - targets.begin();
    const auto below_i =
        std::lower_bound(impostors.begin(), impostors.end(), threshold) -
        impostors.begin();
    return {threshold,
            static_cast<double>(impostors.size() - below_i) / impostors.size(),
            static_cast<double>(below_t) / targets.size()};
  }
};

}  // namespace

std::vector<DetPoint> DetCurve(std::span<const double> targets,
                               std::span<const double> impostors) {
  const Sorted s(targets, impostors);
  std::vector<DetPoint> out;
  for (double th : CandidateThresholds(s.targets, s.impostors)) out.push_back(s.At(th));
  return out;
}

EerResult ComputeEer(std::span<const double> targets,
                     std::span<const double> impostors) {
  const Sorted s(targets, impostors);
  EerResult best;
  best.num_target = targets.size();
  best.num_impostor = impostors.size();
  double best_gap = std::numeric_limits<double>::infinity();
  // Candidates ascend, so a strict comparison keeps the lowest threshold.
  for (double th : CandidateThresholds(s.targets, s.impostors)) {
    const DetPoint p = s.At(th);
    const double gap = std::abs(p.far - p.frr);
    if (gap < best_gap) {
      best_gap = gap;
      best.eer = 0.5 * (p.far + p.frr);
      best.threshold = th;
    }
  }
  return best;
}

Embedder ModelEmbedder(const Model &model) {
  return [&model](const FeatureMatrix &u) { return Embed(model, u).dvector; };
}

Eigen::VectorXd Enroll(const Embedder &embed, std::span<const FeatureMatrix> utterances) {
  if (utterances.empty()) throw std::invalid_argument("enroll: no utterances");
  std::vector<Eigen::VectorXd> dvectors;
  for (const FeatureMatrix &u : utterances) dvectors.push_back(embed(u));
  return Centroid(dvectors);
}

double TrialScore(const Embedder &embed, const Eigen::VectorXd &centroid,
                  const FeatureMatrix &utterance) {
  return CosineSimilarity(embed(utterance), centroid);
}

TrialSet TrialSet::FromCorpus(const Corpus &corpus, int num_enroll) {
  if (num_enroll < 1) throw std::invalid_argument("trial set: num_enroll must be >= 1");
  TrialSet set;
  for (Keyword k : {Keyword::kA, Keyword::kB}) {
    const int ki = static_cast<int>(k);
    for (int speaker : corpus.Speakers(k)) {
      const auto &list = corpus.Of(k, speaker);
      if (list.size() <= static_cast<size_t>(num_enroll))
        throw DataError("trial set: speaker " + std::to_string(speaker) +
                        " has too few utterances to enroll and verify");
      for (size_t i = 0; i < list.size(); ++i) {
        const FeatureMatrix &u = corpus.utterances()[list[i]];
        if (i < static_cast<size_t>(num_enroll)) set.enrollment[ki][speaker].push_back(u);
        else set.verification[ki].push_back(u);
      }
    }
  }
  return set;
}

void TrialSet::Validate() const {
  for (int k = 0; k < 2; ++k) {
    if (enrollment[k].size() < 2)
      throw DataError("trial set: keyword " + std::string(KeywordName(Keyword(k))) +
                      " needs at least two enrolled speakers for impostor trials");
    if (verification[k].empty())
      throw DataError("trial set: no verification utterances for keyword " +
                      std::string(KeywordName(Keyword(k))));
  }
}

MatrixEvalResult RunMatrixEval(const Embedder &embed, const TrialSet &trials) {
  trials.Validate();
  std::map<int, Eigen::VectorXd> centroids[2];
  std::vector<Eigen::VectorXd> verify[2];
  for (int k = 0; k < 2; ++k) {
    for (const auto &[speaker, utts] : trials.enrollment[k])
      centroids[k][speaker] = Enroll(embed, utts);
    for (const FeatureMatrix &u : trials.verification[k]) verify[k].push_back(embed(u));
  }
  MatrixEvalResult result;
  double total = 0.0;
  for (int e = 0; e < 2; ++e) {
    for (int v = 0; v < 2; ++v) {
      auto &targets = result.targets[e][v];
      auto &impostors = result.impostors[e][v];
      for (size_t i = 0; i < verify[v].size(); ++i) {
        const int speaker = trials.verification[v][i].speaker;
        for (const auto &[enrolled, centroid] : centroids[e]) {
          const double score = CosineSimilarity(verify[v][i], centroid);
          (enrolled == speaker ? targets : impostors).push_back(score);
        }
      }
      if (targets.empty())
        throw DataError("matrix eval: no target trials (verification speakers not enrolled)");
      result.cells[e][v] = ComputeEer(targets, impostors);
      total += result.cells[e][v].eer;
    }
  }
  result.average = total / 4.0;
  return result;
}

MatrixEvalResult RunMatrixEval(const Model &model, const TrialSet &trials) {
  return RunMatrixEval(ModelEmbedder(model), trials);
}

std::string FormatResultsCsv(const MatrixEvalResult &result) {
  std::ostringstream os;
  os.precision(10);
  os << "enroll_keyword,verify_keyword,eer,threshold,n_target,n_impostor\n";
  size_t nt = 0, ni = 0;
  for (int e = 0; e < 2; ++e) {
    for (int v = 0; v < 2; ++v) {
      const EerResult &r = result.cells[e][v];
      os << KeywordName(Keyword(e)) << "," << KeywordName(Keyword(v)) << ","
         << r.eer << "," << r.threshold << "," << r.num_target << ","
         << r.num_impostor << "\n";
      nt += r.num_target;
      ni += r.num_impostor;
    }
  }
  os << "average,average," << result.average << ",," << nt << "," << ni << "\n";
  return os.str();
}

std::string FormatDetCsv(std::span<const DetPoint> points) {
  std::ostringstream os;
  os.precision(10);
  os << "threshold,far,frr\n";
  for (const DetPoint &p : points)
    os << p.threshold << "," << p.far << "," << p.frr << "\n";
  return os.str();
}

}  // namespace attnsv
