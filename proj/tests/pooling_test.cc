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

#include "attnsv/pooling.h"

#include <random>

#include <gtest/gtest.h>

#include "attnsv/attention.h"
#include "test_util.h"

namespace attnsv {
namespace {

Eigen::VectorXd V(std::initializer_list<double> values) {
  Eigen::VectorXd v(values.size());
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

PoolingConfig Sliding(int window, int step) {
  PoolingConfig c;
  c.kind = PoolingKind::kSlidingWindow;
  c.window = window;
  c.step = step;
  return c;
}

PoolingConfig TopK(int k) {
  PoolingConfig c;
  c.kind = PoolingKind::kTopK;
  c.k = k;
  return c;
}

void ExpectNear(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a(i), b(i), 1e-15) << i;
}

const Eigen::VectorXd kAlpha = V({0.1, 0.3, 0.2, 0.4});

TEST(SlidingWindows, Ranges) {
  using R = std::vector<std::pair<int, int>>;
  EXPECT_EQ(SlidingWindows(4, 2, 2), (R{{0, 2}, {2, 4}}));
  EXPECT_EQ(SlidingWindows(5, 2, 2), (R{{0, 2}, {2, 4}, {4, 5}}));
  EXPECT_EQ(SlidingWindows(7, 3, 2), (R{{0, 3}, {2, 5}, {4, 7}}));
  EXPECT_EQ(SlidingWindows(80, 10, 5).size(), 15u);
  EXPECT_EQ(SlidingWindows(3, 10, 10), (R{{0, 3}}));
}

TEST(SlidingWindowMaxpool, WorkedValues) {
  ExpectNear(SlidingWindowMaxpool(kAlpha, Sliding(2, 2)), V({0, 3.0 / 7, 0, 4.0 / 7}));
  ExpectNear(SlidingWindowMaxpool(kAlpha, Sliding(1, 1)), kAlpha);
  ExpectNear(SlidingWindowMaxpool(kAlpha, Sliding(4, 4)), V({0, 0, 0, 1}));
  ExpectNear(SlidingWindowMaxpool(kAlpha, Sliding(9, 9)), V({0, 0, 0, 1}));
}

TEST(SlidingWindowMaxpool, TiesGoToTheEarliestFrame) {
  ExpectNear(SlidingWindowMaxpool(V({0.25, 0.25, 0.25, 0.25}), Sliding(2, 2)),
             V({0.5, 0, 0.5, 0}));
}

TEST(SlidingWindowMaxpool, WithoutRenormalization) {
  PoolingConfig c = Sliding(2, 2);
  c.renormalize = false;
  ExpectNear(SlidingWindowMaxpool(kAlpha, c), V({0, 0.3, 0, 0.4}));
}

TEST(TopKMaxpool, WorkedValues) {
  ExpectNear(TopKMaxpool(kAlpha, TopK(1)), V({0, 0, 0, 1}));
  ExpectNear(TopKMaxpool(kAlpha, TopK(2)), V({0, 3.0 / 7, 0, 4.0 / 7}));
  ExpectNear(TopKMaxpool(kAlpha, TopK(4)), kAlpha);
  ExpectNear(TopKMaxpool(kAlpha, TopK(10)), kAlpha);
  ExpectNear(TopKMaxpool(V({0.2, 0.3, 0.3, 0.2}), TopK(3)),
             V({0.25, 0.375, 0.375, 0}));
}

TEST(Pool, NoneIsIdentityAndEmptyIsRejected) {
  EXPECT_EQ(Pool(kAlpha, PoolingConfig{}), kAlpha);
  EXPECT_THROW(Pool(Eigen::VectorXd(), TopK(2)), std::invalid_argument);
  EXPECT_THROW(Pool(Eigen::VectorXd(), Sliding(2, 2)), std::invalid_argument);
}

TEST(PoolingConfig, Validation) {
  EXPECT_THROW(Sliding(0, 1).Validate(), std::invalid_argument);
  EXPECT_THROW(Sliding(1, 0).Validate(), std::invalid_argument);
  EXPECT_THROW(TopK(0).Validate(), std::invalid_argument);
  EXPECT_NO_THROW(PoolingConfig{}.Validate());
  EXPECT_EQ(PoolingConfig{}.window, 10);
  EXPECT_EQ(PoolingConfig{}.step, 5);
  EXPECT_EQ(PoolingConfig{}.k, 5);
}

TEST(Pool, PropertiesOnRandomWeights) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(1, 90), small(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const Eigen::VectorXd a =
        Normalize(testing::RandomMatrix(rng, n, 1, -4.0, 4.0));
    for (const PoolingConfig &c : {Sliding(small(rng), small(rng)), TopK(small(rng))}) {
      const Eigen::VectorXd p = Pool(a, c);
      EXPECT_NEAR(p.sum(), 1.0, 1e-12);
      EXPECT_GE(p.minCoeff(), 0.0);
      for (int i = 0; i < n; ++i) {
        if (a(i) == 0.0) EXPECT_EQ(p(i), 0.0);
        for (int j = 0; j < n; ++j)
          if (p(i) > 0 && p(j) > 0 && a(i) < a(j)) EXPECT_LT(p(i), p(j));
      }
    }
    const PoolingConfig k = TopK(small(rng));
    ExpectNear(TopKMaxpool(TopKMaxpool(a, k), k), TopKMaxpool(a, k));
    ExpectNear(TopKMaxpool(a, TopK(n)), a);
    ExpectNear(SlidingWindowMaxpool(a, Sliding(1, 1)), a);
  }
}

TEST(Pool, SlidingSupportIsBoundedByWindowCount) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd a = Normalize(testing::RandomMatrix(rng, 80, 1, -3.0, 3.0));
    const Eigen::VectorXd p = SlidingWindowMaxpool(a, Sliding(10, 5));
    EXPECT_LE((p.array() > 0.0).count(), 16);
    EXPECT_EQ((TopKMaxpool(a, TopK(5)).array() > 0.0).count(), 5);
  }
}

TEST(Names, RoundTrip) {
  for (const char *name : {"none", "sliding", "topk"})
    EXPECT_STREQ(PoolingKindName(ParsePoolingKind(name)), name);
  EXPECT_ANY_THROW(ParsePoolingKind("avg"));
}

}  // namespace
}  // namespace attnsv
