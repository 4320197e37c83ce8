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

#include "attnsv/loss.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace attnsv {

Eigen::VectorXd Centroid(std::span<const Eigen::VectorXd> dvectors) {
  if (dvectors.empty()) throw std::invalid_argument("centroid: no d-vectors");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dvectors.front().size());
  for (const Eigen::VectorXd &d : dvectors) {
    const double norm = d.norm();
    if (!(norm > 0.0)) throw NumericError("centroid: zero-norm d-vector");
    sum += d / norm;
  }
  return sum / static_cast<double>(dvectors.size());
}

double CosineSimilarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw NumericError("cosine similarity of a zero-norm vector");
  return a.dot(b) / (na * nb);
}

double Similarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                  double scale, double offset) {
  return scale * CosineSimilarity(a, b) + offset;
}

const char *LossFormName(LossForm form) {
  return form == LossForm::kPaper ? "paper" : "corrected";
}

LossForm ParseLossForm(const std::string &name) {
  if (name == "corrected") return LossForm::kCorrected;
  if (name == "paper") return LossForm::kPaper;
  throw std::invalid_argument("unknown loss form '" + name +
                              "' (expected corrected|paper)");
}

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// sigma(-x) = 1 - sigma(x), evaluated without cancellation.
bool WantsSigmoidOfS(bool positive, LossForm form) {
  return positive == (form == LossForm::kPaper);
}

}  // namespace

double Te2eLoss(double similarity, bool positive, LossForm form) {
  return WantsSigmoidOfS(positive, form) ? Sigmoid(similarity)
                                         : Sigmoid(-similarity);
}

NodeId CentroidNodes(Tape &tape, std::span<const NodeId> dvectors) {
  if (dvectors.empty()) throw std::invalid_argument("centroid: no d-vectors");
  NodeId sum;
  for (NodeId d : dvectors) {
    if (!(tape.value(d).norm() > 0.0))
      throw NumericError("centroid: zero-norm d-vector");
    NodeId unit = tape.Divide(d, tape.L2Norm(d));
    sum = sum.valid() ? tape.Add(sum, unit) : unit;
  }
  return tape.Scale(sum, 1.0 / static_cast<double>(dvectors.size()));
}

NodeId SimilarityNodes(Tape &tape, NodeId dvector, NodeId centroid,
                       NodeId scale, NodeId offset) {
  if (!(tape.value(dvector).norm() > 0.0) || !(tape.value(centroid).norm() > 0.0))
    throw NumericError("similarity: zero-norm input");
  NodeId cosine = tape.Divide(
      tape.Dot(dvector, centroid),
      tape.Multiply(tape.L2Norm(dvector), tape.L2Norm(centroid)));
  return tape.Add(tape.Multiply(scale, cosine), offset);
}

NodeId Te2eLossNodes(Tape &tape, NodeId similarity, bool positive,
                     LossForm form) {
  if (WantsSigmoidOfS(positive, form)) return tape.Sigmoid(similarity);
  return tape.Sigmoid(tape.Scale(similarity, -1.0));
}

void Corpus::Add(FeatureMatrix utterance) {
  index_[static_cast<int>(utterance.keyword)][utterance.speaker].push_back(
      utterances_.size());
  utterances_.push_back(std::move(utterance));
}

const std::vector<size_t> &Corpus::Of(Keyword keyword, int speaker) const {
  static const std::vector<size_t> kEmpty;
  const auto &m = index_[static_cast<int>(keyword)];
  auto it = m.find(speaker);
  return it == m.end() ? kEmpty : it->second;
}

std::vector<int> Corpus::Speakers(Keyword keyword, size_t min_count) const {
  std::vector<int> out;
  for (const auto &[speaker, list] : index_[static_cast<int>(keyword)])
    if (list.size() >= min_count) out.push_back(speaker);
  return out;
}

TupleBuilder::TupleBuilder(const Corpus &corpus, int num_enroll)
    : corpus_(corpus), num_enroll_(num_enroll) {
  if (num_enroll < 1) throw std::invalid_argument("tuple needs N >= 1");
}

namespace {

// `count` distinct entries of `pool`, in draw order.
std::vector<size_t> Sample(const std::vector<size_t> &pool, size_t count,
                           std::mt19937_64 &rng) {
  std::vector<size_t> v = pool;
  for (size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<size_t> pick(i, v.size() - 1);
    std::swap(v[i], v[pick(rng)]);
  }
  v.resize(count);
  return v;
}

int PickSpeaker(const std::vector<int> &speakers, std::mt19937_64 &rng) {
  std::uniform_int_distribution<size_t> pick(0, speakers.size() - 1);
  return speakers[pick(rng)];
}

}  // namespace

Tuple TupleBuilder::Build(std::mt19937_64 &rng, bool want_positive,
                          Keyword keyword) const {
  const size_t n = static_cast<size_t>(num_enroll_);
  Tuple tuple;
  tuple.positive = want_positive;
  tuple.keyword = keyword;
  const auto &all = corpus_.utterances();
  if (want_positive) {
    const std::vector<int> speakers = corpus_.Speakers(keyword, n + 1);
    if (speakers.empty())
      throw DataError("tuple: no speaker has " + std::to_string(n + 1) +
                      " utterances of keyword " + KeywordName(keyword));
    const int speaker = PickSpeaker(speakers, rng);
    const std::vector<size_t> picks = Sample(corpus_.Of(keyword, speaker), n + 1, rng);
    tuple.evaluation = all[picks[0]];
    for (size_t i = 1; i <= n; ++i) tuple.enrollment.push_back(all[picks[i]]);
    return tuple;
  }
  const std::vector<int> enrollers = corpus_.Speakers(keyword, n);
  const std::vector<int> speakers = corpus_.Speakers(keyword, 1);
  if (enrollers.empty() || speakers.size() < 2)
    throw DataError("tuple: keyword " + std::string(KeywordName(keyword)) +
                    " needs two speakers and one with " + std::to_string(n) +
                    " utterances");
  const int enroller = PickSpeaker(enrollers, rng);
  std::vector<int> others;
  for (int s : speakers)
    if (s != enroller) others.push_back(s);
  const int impostor = PickSpeaker(others, rng);
  for (size_t i : Sample(corpus_.Of(keyword, enroller), n, rng))
    tuple.enrollment.push_back(all[i]);
  tuple.evaluation = all[Sample(corpus_.Of(keyword, impostor), 1, rng)[0]];
  return tuple;
}

Tuple TupleBuilder::Next(std::mt19937_64 &rng, bool want_positive) {
  Tuple t = Build(rng, want_positive, next_keyword_);
  next_keyword_ = next_keyword_ == Keyword::kA ? Keyword::kB : Keyword::kA;
  return t;
}

void OptimizerConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (num_enroll < 1) throw std::invalid_argument("num_enroll must be >= 1");
}

NodeId BuildTupleLoss(Tape &tape, const Bindings &params,
                      const ModelConfig &config, const Tuple &tuple,
                      LossForm form) {
  if (tuple.enrollment.empty()) throw std::invalid_argument("tuple without enrollment");
  std::vector<NodeId> enrolled;
  for (const FeatureMatrix &u : tuple.enrollment)
    enrolled.push_back(BuildEmbedding(tape, params, config, u.AsColumns()).head.dvector);
  NodeId evaluation =
      BuildEmbedding(tape, params, config, tuple.evaluation.AsColumns()).head.dvector;
  NodeId centroid = CentroidNodes(tape, enrolled);
  NodeId s = SimilarityNodes(tape, evaluation, centroid, params[kSimilarityW],
                             params[kSimilarityB]);
  return Te2eLossNodes(tape, s, tuple.positive, form);
}

StepResult TrainStep(Model &model, const Tuple &tuple,
                     const OptimizerConfig &config) {
  Tape tape;
  Bindings bound(&tape, model.params);
  NodeId loss = BuildTupleLoss(tape, bound, model.config, tuple, config.loss_form);
  StepResult result;
  result.loss = tape.scalar(loss);
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss");
  tape.Backward(loss);
  ParameterSet grads = bound.Gradients();
  result.grad_norm = std::sqrt(SquaredNorm(grads));
  if (!std::isfinite(result.grad_norm)) throw NumericError("non-finite gradient");
  const double factor = result.grad_norm > config.clip_norm
                            ? config.clip_norm / result.grad_norm
                            : 1.0;
  for (auto &[name, value] : model.params)
    value -= (config.learning_rate * factor) * grads.at(name);
  double &scale = model.params.at(kSimilarityW)(0, 0);
  scale = std::max(scale, kMinSimilarityScale);
  return result;
}

Keyword ScheduledKeyword(uint64_t step) {
  return step % 2 == 0 ? Keyword::kA : Keyword::kB;
}

bool ScheduledPositive(uint64_t step) { return (step / 2) % 2 == 0; }

std::mt19937_64 StepRng(uint64_t seed, uint64_t step) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    0x7E2Eu, static_cast<uint32_t>(step),
                    static_cast<uint32_t>(step >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace attnsv
