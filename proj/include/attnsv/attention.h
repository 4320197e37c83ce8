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

#ifndef ATTNSV_ATTENTION_H_
#define ATTNSV_ATTENTION_H_

#include <random>
#include <string>

#include "attnsv/autodiff.h"
#include "attnsv/pooling.h"

namespace attnsv {

// Frame scoring functions. The per-frame kinds (bias-only, linear,
// non-linear) own one parameter set per frame index and therefore need a
// fixed sequence length.
enum class ScoringKind {
  kBiasOnly,
  kLinear,
  kSharedLinear,
  kNonLinear,
  kSharedNonLinear,
};

const char *ScoringKindName(ScoringKind kind);  // bo | l | sl | nl | snl
ScoringKind ParseScoringKind(const std::string &name);
bool IsPerFrame(ScoringKind kind);
bool IsNonLinear(ScoringKind kind);

struct ScoringConfig {
  ScoringKind kind = ScoringKind::kSharedNonLinear;
  int hidden_dim = 64;  // m'
};

enum class AttentionMode { kLastFrame, kBasic, kCrossLayer, kDividedLayer };

const char *AttentionModeName(AttentionMode mode);  // baseline|basic|cross|divided
AttentionMode ParseAttentionMode(const std::string &name);

struct DVectorConfig {
  AttentionMode mode = AttentionMode::kBasic;
  ScoringConfig scoring;
  PoolingConfig pooling;
  // Sequence length the per-frame scoring kinds are built for.
  int num_frames = 80;
};

// Parameter names used under the "attention/" prefix.
inline constexpr const char *kAttentionW = "attention/w";
inline constexpr const char *kAttentionB = "attention/b";
inline constexpr const char *kAttentionV = "attention/v";

// Adds the scoring parameters for inputs of dimension `input_dim` to
// `params`, uniform in [-scale, scale].
void InitScoringParams(const ScoringConfig &config, int input_dim,
                       int num_frames, double scale, std::mt19937_64 &rng,
                       ParameterSet *params);

// Scores e (T x 1) for the frames in the columns of `frames` (m x T).
NodeId ScoreNodes(Tape &tape, const Bindings &params,
                  const ScoringConfig &config, NodeId frames);
// Numerically stable softmax of a T x 1 score node.
NodeId NormalizeNodes(Tape &tape, NodeId scores);
// Masked renormalization; the mask is taken from the current weights and
// enters the graph as a constant.
NodeId PoolNodes(Tape &tape, NodeId weights, const PoolingConfig &config);
// frames (m x T) times weights (T x 1).
NodeId SummarizeNodes(Tape &tape, NodeId weights, NodeId frames);

struct DVectorNodes {
  NodeId dvector;
  NodeId scores;   // invalid in last-frame mode
  NodeId weights;  // after pooling; invalid in last-frame mode
};

// `last` is the final encoder output (m x T), `previous` the layer below
// it, used only by cross-layer attention.
DVectorNodes BuildDVector(Tape &tape, const Bindings &params,
                          const DVectorConfig &config, NodeId last,
                          NodeId previous);

// Plain-value entry points.
Eigen::VectorXd Score(const ScoringConfig &config, const ParameterSet &params,
                      const Eigen::MatrixXd &frames);
Eigen::VectorXd Normalize(const Eigen::VectorXd &scores);
Eigen::VectorXd Summarize(const Eigen::VectorXd &weights,
                          const Eigen::MatrixXd &frames);

struct AttentionWeights {
  Eigen::VectorXd scores;
  Eigen::VectorXd weights;
};

}  // namespace attnsv

#endif  // ATTNSV_ATTENTION_H_
