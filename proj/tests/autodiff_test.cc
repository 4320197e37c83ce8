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

#include "attnsv/autodiff.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "attnsv/attention.h"
#include "test_util.h"

namespace attnsv {
namespace {

using testing::RandomMatrix;

TEST(TapeForward, ElementaryValues) {
  Tape tape;
  EXPECT_DOUBLE_EQ(tape.scalar(tape.Sigmoid(tape.Scalar(0.0))), 0.5);
  EXPECT_DOUBLE_EQ(tape.scalar(tape.Tanh(tape.Scalar(0.0))), 0.0);
  EXPECT_NEAR(tape.scalar(tape.Exp(tape.Log(tape.Scalar(2.5)))), 2.5, 1e-15);
}

TEST(TapeForward, BroadcastAndShapes) {
  Tape tape;
  Tensor a(2, 2);
  a << 1, 2, 3, 4;
  const NodeId x = tape.Constant(a);
  EXPECT_EQ(tape.value(tape.AddScalar(x, 1.0))(1, 1), 5.0);
  EXPECT_EQ(tape.value(tape.Scale(x, 2.0))(0, 1), 4.0);
  EXPECT_EQ(tape.value(tape.Divide(tape.Scalar(12.0), x))(1, 0), 4.0);
  EXPECT_THROW(tape.Add(x, tape.Constant(Tensor::Ones(3, 1))), ShapeError);
  EXPECT_THROW(tape.MatVec(x, tape.Constant(Tensor::Ones(3, 1))), ShapeError);
  EXPECT_THROW(tape.Slice(x, 1, 2, 0, 1), ShapeError);
  const NodeId t = tape.MatVec(x, tape.Constant(Tensor::Ones(2, 1)), true);
  EXPECT_EQ(tape.value(t)(0, 0), 4.0);
  EXPECT_EQ(tape.value(t)(1, 0), 6.0);
  const NodeId cat = tape.ConcatCols({x, tape.Column(x, 1)});
  EXPECT_EQ(tape.value(cat).cols(), 3);
  EXPECT_EQ(tape.value(cat)(1, 2), 4.0);
}

TEST(TapeBackward, ElementaryGradients) {
  Tape tape;
  const NodeId x = tape.Parameter(Tensor::Zero(1, 1));
  const NodeId s = tape.Sigmoid(x);
  tape.Backward(s);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 0.25);

  Tape tape2;
  const NodeId y = tape2.Parameter(Tensor::Zero(1, 1));
  const NodeId t = tape2.Tanh(y);
  tape2.Backward(t);
  EXPECT_DOUBLE_EQ(tape2.grad(y)(0, 0), 1.0);
}

TEST(TapeBackward, RootMustBeScalar) {
  Tape tape;
  const NodeId x = tape.Parameter(Tensor::Ones(3, 1));
  EXPECT_THROW(tape.Backward(tape.Tanh(x)), ShapeError);
}

TEST(TapeBackward, FanOutAccumulates) {
  // f(x) = x * x + x, f'(3) = 7.
  Tape tape;
  const NodeId x = tape.Parameter(Tensor::Constant(1, 1, 3.0));
  const NodeId f = tape.Add(tape.Multiply(x, x), x);
  tape.Backward(f);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 7.0);
  // A second backward pass starts from zeroed buffers.
  tape.Backward(f);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 7.0);
}

TEST(TapeBackward, GradientOfSumIsSumOfGradients) {
  std::mt19937_64 rng(3);
  const Tensor xv = RandomMatrix(rng, 4, 1);
  auto grad_of = [&](int which) {
    Tape tape;
    const NodeId x = tape.Parameter(xv);
    const NodeId f = tape.Sum(tape.Tanh(x));
    const NodeId g = tape.L2Norm(tape.Exp(x));
    NodeId root = which == 0 ? f : which == 1 ? g : tape.Add(f, g);
    tape.Backward(root);
    return Tensor(tape.grad(x));
  };
  EXPECT_LT((grad_of(2) - grad_of(0) - grad_of(1)).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(TapeForward, ReEvaluationIsBitIdentical) {
  std::mt19937_64 rng(5);
  Tape tape;
  const NodeId w = tape.Parameter(RandomMatrix(rng, 3, 4));
  const NodeId x = tape.Constant(RandomMatrix(rng, 4, 2));
  const NodeId y = tape.Sum(tape.Sigmoid(tape.MatVec(w, x)));
  const double first = tape.scalar(y);
  tape.Forward();
  EXPECT_EQ(tape.scalar(y), first);
  tape.SetLeafValue(w, Tensor::Zero(3, 4));
  tape.Forward();
  EXPECT_DOUBLE_EQ(tape.scalar(y), 3.0);
  EXPECT_THROW(tape.SetLeafValue(w, Tensor::Zero(2, 2)), ShapeError);
  EXPECT_THROW(tape.SetLeafValue(y, Tensor::Zero(1, 1)), std::logic_error);
}

TEST(GradCheck, ExactQuadratic) {
  ParameterSet point{{"x", Tensor::Constant(1, 1, 3.0)}};
  auto fn = [](Tape &t, const Bindings &b) {
    return t.Multiply(b["x"], b["x"]);
  };
  const GradCheckResult r = GradCheck(fn, point);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.entries_checked, 1u);
}

TEST(GradCheck, ConstantFunction) {
  ParameterSet point{{"x", Tensor::Constant(2, 1, 3.0)}};
  auto fn = [](Tape &t, const Bindings &) { return t.Scalar(4.0); };
  Tape tape;
  Bindings bound(&tape, point);
  tape.Backward(fn(tape, bound));
  EXPECT_EQ(bound.Gradients().at("x").squaredNorm(), 0.0);
  EXPECT_EQ(GradCheck(fn, point).max_relative_error, 0.0);
}

TEST(GradCheck, EveryOpAtRandomPoints) {
  auto fn = [](Tape &t, const Bindings &b) {
    const NodeId a = b["a"], m = b["m"], v = b["v"];
    const NodeId h = t.Tanh(t.MatVec(m, a));
    const NodeId g = t.Sigmoid(t.MatVec(m, h, true));
    const NodeId e = t.Exp(t.Slice(g, 1, 2, 0, 1));
    const NodeId q = t.Divide(e, t.AddScalar(t.Multiply(e, e), 1.0));
    const NodeId l = t.Log(t.AddScalar(t.Multiply(v, v), 0.5));
    const NodeId c = t.ConcatRows({q, l, t.Sub(a, v)});
    return t.Add(t.Add(t.Sum(c), t.Dot(c, c)), t.L2Norm(t.Scale(c, 0.3)));
  };
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    ParameterSet point{{"a", RandomMatrix(rng, 3, 1)},
                       {"m", RandomMatrix(rng, 3, 3)},
                       {"v", RandomMatrix(rng, 3, 1)}};
    EXPECT_LT(GradCheck(fn, point).max_relative_error, 1e-4) << seed;
  }
}

TEST(GradCheck, CorruptedGradientIsCaught) {
  ParameterSet point{{"x", Tensor::Constant(1, 1, 3.0)}};
  auto fn = [](Tape &t, const Bindings &b) { return t.Tanh(b["x"]); };
  GradCheckOptions opts;
  opts.corrupt_analytic = 1e-2;
  EXPECT_GT(GradCheck(fn, point, opts).max_relative_error, 1e-3);
}

TEST(GradCheck, NonFiniteNamesParameter) {
  ParameterSet point{{"bad", Tensor::Constant(1, 1, -1.0)}};
  auto fn = [](Tape &t, const Bindings &b) { return t.Log(b["bad"]); };
  try {
    GradCheck(fn, point);
    FAIL() << "expected NumericError";
  } catch (const NumericError &e) {
    SUCCEED() << e.what();
  }
  ParameterSet near_zero{{"bad", Tensor::Constant(1, 1, 0.0)}};
  auto sqrt_like = [](Tape &t, const Bindings &b) {
    return t.L2Norm(t.ConcatRows({b["bad"], t.Scalar(0.0)}));
  };
  try {
    GradCheck(sqrt_like, near_zero);
    FAIL() << "expected NumericError";
  } catch (const NumericError &e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

// Shared non-linear attention over an 8 x 4 input, checked against a
// central-difference loop that only uses plain forward evaluation.
TEST(TapeBackward, AttentionPipelineMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  ScoringConfig cfg;
  cfg.kind = ScoringKind::kSharedNonLinear;
  cfg.hidden_dim = 5;
  ParameterSet params;
  InitScoringParams(cfg, 8, 4, 0.5, rng, &params);
  params["h"] = RandomMatrix(rng, 8, 4);
  const Eigen::VectorXd probe = RandomMatrix(rng, 8, 1);

  auto value_at = [&](const ParameterSet &p) {
    const Eigen::VectorXd alpha = Normalize(Score(cfg, p, p.at("h")));
    return probe.dot(Summarize(alpha, p.at("h")));
  };
  Tape tape;
  Bindings bound(&tape, params);
  const NodeId w = NormalizeNodes(tape, ScoreNodes(tape, bound, cfg, bound["h"]));
  const NodeId root =
      tape.Dot(tape.Constant(probe), SummarizeNodes(tape, w, bound["h"]));
  EXPECT_NEAR(tape.scalar(root), value_at(params), 1e-14);
  tape.Backward(root);
  const ParameterSet analytic = bound.Gradients();

  double worst = 0.0;
  for (auto &[name, tensor] : params) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      ParameterSet plus = params, minus = params;
      plus[name](i) += 1e-5;
      minus[name](i) -= 1e-5;
      const double numeric = (value_at(plus) - value_at(minus)) / 2e-5;
      worst = std::max(worst, std::abs(numeric - analytic.at(name)(i)) /
                                  std::max(1.0, std::abs(numeric)));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

}  // namespace
}  // namespace attnsv
