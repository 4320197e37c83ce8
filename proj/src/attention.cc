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

#include "attnsv/attention.h"

#include <stdexcept>

namespace attnsv {

const char *ScoringKindName(ScoringKind kind) {
  switch (kind) {
    case ScoringKind::kBiasOnly: return "bo";
    case ScoringKind::kLinear: return "l";
    case ScoringKind::kSharedLinear: return "sl";
    case ScoringKind::kNonLinear: return "nl";
    case ScoringKind::kSharedNonLinear: return "snl";
  }
  return "snl";
}

ScoringKind ParseScoringKind(const std::string &name) {
  if (name == "bo") return ScoringKind::kBiasOnly;
  if (name == "l") return ScoringKind::kLinear;
  if (name == "sl") return ScoringKind::kSharedLinear;
  if (name == "nl") return ScoringKind::kNonLinear;
  if (name == "snl") return ScoringKind::kSharedNonLinear;
  throw std::invalid_argument("unknown scoring '" + name +
                              "' (expected bo|l|sl|nl|snl)");
}

bool IsPerFrame(ScoringKind kind) {
  return kind == ScoringKind::kBiasOnly || kind == ScoringKind::kLinear ||
         kind == ScoringKind::kNonLinear;
}

bool IsNonLinear(ScoringKind kind) {
  return kind == ScoringKind::kNonLinear ||
         kind == ScoringKind::kSharedNonLinear;
}

const char *AttentionModeName(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::kLastFrame: return "baseline";
    case AttentionMode::kBasic: return "basic";
    case AttentionMode::kCrossLayer: return "cross";
    case AttentionMode::kDividedLayer: return "divided";
  }
  return "basic";
}

AttentionMode ParseAttentionMode(const std::string &name) {
  if (name == "baseline") return AttentionMode::kLastFrame;
  if (name == "basic") return AttentionMode::kBasic;
  if (name == "cross") return AttentionMode::kCrossLayer;
  if (name == "divided") return AttentionMode::kDividedLayer;
  throw std::invalid_argument("unknown mode '" + name +
                              "' (expected baseline|basic|cross|divided)");
}

void InitScoringParams(const ScoringConfig &config, int input_dim,
                       int num_frames, double scale, std::mt19937_64 &rng,
                       ParameterSet *params) {
  if (IsNonLinear(config.kind) && config.hidden_dim <= 0)
    throw std::invalid_argument("non-linear scoring needs hidden_dim > 0");
  if (IsPerFrame(config.kind) && num_frames <= 0)
    throw std::invalid_argument("per-frame scoring needs a fixed frame count");
  std::uniform_real_distribution<double> uniform(-scale, scale);
  auto make = [&](Eigen::Index rows, Eigen::Index cols) {
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = uniform(rng);
    return t;
  };
  const int m = input_dim, h = config.hidden_dim, n = num_frames;
  switch (config.kind) {
    case ScoringKind::kBiasOnly:
      (*params)[kAttentionB] = make(n, 1);
      break;
    case ScoringKind::kLinear:
      (*params)[kAttentionW] = make(m, n);
      (*params)[kAttentionB] = make(n, 1);
      break;
    case ScoringKind::kSharedLinear:
      (*params)[kAttentionW] = make(m, 1);
      (*params)[kAttentionB] = make(1, 1);
      break;
    case ScoringKind::kNonLinear:
      (*params)[kAttentionW] = make(Eigen::Index{n} * h, m);
      (*params)[kAttentionB] = make(h, n);
      (*params)[kAttentionV] = make(h, n);
      break;
    case ScoringKind::kSharedNonLinear:
      (*params)[kAttentionW] = make(h, m);
      (*params)[kAttentionB] = make(h, 1);
      (*params)[kAttentionV] = make(h, 1);
      break;
  }
}

namespace {

void ExpectShape(const Tape &tape, NodeId id, Eigen::Index rows,
                 Eigen::Index cols, const char *what) {
  const Tensor &v = tape.value(id);
  if (v.rows() != rows || v.cols() != cols)
    throw ShapeError(std::string("attention: ") + what + " is " +
                     std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                     ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

}  // namespace

NodeId ScoreNodes(Tape &tape, const Bindings &params,
                  const ScoringConfig &config, NodeId frames) {
  const Eigen::Index m = tape.value(frames).rows();
  const Eigen::Index n = tape.value(frames).cols();
  const Eigen::Index h = config.hidden_dim;
  switch (config.kind) {
    case ScoringKind::kBiasOnly: {
      NodeId b = params[kAttentionB];
      ExpectShape(tape, b, n, 1, "per-frame bias (frame count mismatch)");
      return b;
    }
    case ScoringKind::kLinear: {
      NodeId w = params[kAttentionW], b = params[kAttentionB];
      ExpectShape(tape, w, m, n, "per-frame weights (frame count mismatch)");
      ExpectShape(tape, b, n, 1, "per-frame bias (frame count mismatch)");
      // Column t of (w .* frames) summed down gives w_t . h_t.
      NodeId ones = tape.Constant(Tensor::Ones(m, 1));
      NodeId dots = tape.MatVec(tape.Multiply(w, frames), ones, true);
      return tape.Add(dots, b);
    }
    case ScoringKind::kSharedLinear: {
      NodeId w = params[kAttentionW], b = params[kAttentionB];
      ExpectShape(tape, w, m, 1, "shared weights");
      ExpectShape(tape, b, 1, 1, "shared bias");
      return tape.Add(tape.MatVec(frames, w, true), b);
    }
    case ScoringKind::kNonLinear: {
      NodeId w = params[kAttentionW], b = params[kAttentionB],
             v = params[kAttentionV];
      ExpectShape(tape, w, n * h, m, "per-frame W (frame count mismatch)");
      ExpectShape(tape, b, h, n, "per-frame b (frame count mismatch)");
      ExpectShape(tape, v, h, n, "per-frame v (frame count mismatch)");
      std::vector<NodeId> scores;
      scores.reserve(n);
      for (Eigen::Index t = 0; t < n; ++t) {
        NodeId wt = tape.Slice(w, t * h, h, 0, m);
        NodeId pre = tape.Add(tape.MatVec(wt, tape.Column(frames, t)),
                              tape.Column(b, t));
        scores.push_back(tape.Dot(tape.Column(v, t), tape.Tanh(pre)));
      }
      return tape.ConcatRows(scores);
    }
    case ScoringKind::kSharedNonLinear: {
      NodeId w = params[kAttentionW], b = params[kAttentionB],
             v = params[kAttentionV];
      ExpectShape(tape, w, h, m, "shared W");
      ExpectShape(tape, b, h, 1, "shared b");
      ExpectShape(tape, v, h, 1, "shared v");
      NodeId ones = tape.Constant(Tensor::Ones(1, n));
      NodeId hidden = tape.Tanh(
          tape.Add(tape.MatVec(w, frames), tape.MatVec(b, ones)));
      return tape.MatVec(hidden, v, true);
    }
  }
  throw std::logic_error("unreachable scoring kind");
}

NodeId NormalizeNodes(Tape &tape, NodeId scores) {
  // The shift is a constant; softmax is invariant to it, so the gradient
  // is unaffected.
  const double shift = tape.value(scores).maxCoeff();
  NodeId e = tape.Exp(tape.AddScalar(scores, -shift));
  return tape.Divide(e, tape.Sum(e));
}

NodeId PoolNodes(Tape &tape, NodeId weights, const PoolingConfig &config) {
  if (config.kind == PoolingKind::kNone) return weights;
  const Eigen::VectorXd mask = PoolingMask(tape.value(weights), config);
  NodeId kept = tape.Multiply(weights, tape.Constant(mask));
  if (!config.renormalize) return kept;
  return tape.Divide(kept, tape.Sum(kept));
}

NodeId SummarizeNodes(Tape &tape, NodeId weights, NodeId frames) {
  if (tape.value(weights).rows() != tape.value(frames).cols())
    throw ShapeError("summarize: weight count differs from frame count");
  return tape.MatVec(frames, weights);
}

DVectorNodes BuildDVector(Tape &tape, const Bindings &params,
                          const DVectorConfig &config, NodeId last,
                          NodeId previous) {
  const Eigen::Index m = tape.value(last).rows();
  const Eigen::Index n = tape.value(last).cols();
  DVectorNodes out;
  if (config.mode == AttentionMode::kLastFrame) {
    out.dvector = tape.Column(last, n - 1);
    return out;
  }
  if (IsPerFrame(config.scoring.kind) && n != config.num_frames)
    throw ShapeError("per-frame scoring was built for " +
                     std::to_string(config.num_frames) + " frames, got " +
                     std::to_string(n));
  NodeId scored = last, averaged = last;
  switch (config.mode) {
    case AttentionMode::kBasic:
      break;
    case AttentionMode::kCrossLayer:
      if (!previous.valid())
        throw ShapeError("cross-layer attention needs at least two layers");
      scored = previous;
      break;
    case AttentionMode::kDividedLayer:
      if (m % 2 != 0)
        throw ShapeError("divided-layer attention needs an even output dim, got " +
                         std::to_string(m));
      averaged = tape.Rows(last, 0, m / 2);
      scored = tape.Rows(last, m / 2, m / 2);
      break;
    case AttentionMode::kLastFrame:
      break;
  }
  out.scores = ScoreNodes(tape, params, config.scoring, scored);
  out.weights = PoolNodes(tape, NormalizeNodes(tape, out.scores), config.pooling);
  out.dvector = SummarizeNodes(tape, out.weights, averaged);
  return out;
}

Eigen::VectorXd Score(const ScoringConfig &config, const ParameterSet &params,
                      const Eigen::MatrixXd &frames) {
  Tape tape;
  Bindings bound(&tape, params);
  return tape.value(ScoreNodes(tape, bound, config, tape.Constant(frames)));
}

Eigen::VectorXd Normalize(const Eigen::VectorXd &scores) {
  if (scores.size() == 0) throw std::invalid_argument("normalize: empty scores");
  const Eigen::ArrayXd e = (scores.array() - scores.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd Summarize(const Eigen::VectorXd &weights,
                          const Eigen::MatrixXd &frames) {
  if (weights.size() != frames.cols())
    throw std::invalid_argument("summarize: weight count differs from frame count");
  return frames * weights;
}

}  // namespace attnsv
