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

#include "attnsv/config.h"

#include <gtest/gtest.h>

namespace attnsv {
namespace {

TEST(RunConfig, DefaultsFollowTheBaselineGeometry) {
  const RunConfig c;
  const ModelConfig m = c.ToModelConfig();
  EXPECT_EQ(m.network.num_layers, 3);
  EXPECT_EQ(m.network.cell_dim, 128);
  EXPECT_EQ(m.network.output_dim(), 64);
  EXPECT_EQ(m.dvector.scoring.hidden_dim, 64);
  EXPECT_EQ(m.dvector.num_frames, 80);
  const OptimizerConfig o = c.ToOptimizerConfig();
  EXPECT_EQ(o.learning_rate, 0.01);
  EXPECT_EQ(o.clip_norm, 3.0);
  EXPECT_EQ(o.steps, 5000);
  EXPECT_EQ(o.num_enroll, 4);
  EXPECT_EQ(c.NumTestSpeakers(), 16);
  EXPECT_EQ(c.CheckpointPath(), "out/checkpoint.atnw");
}

TEST(RunConfig, DividedModeDoublesTheTopLayer) {
  RunConfig c;
  c.mode = "divided";
  const ModelConfig m = c.ToModelConfig();
  EXPECT_EQ(m.network.last_projection_dim, 128);
  EXPECT_EQ(m.network.final_linear_dim, 128);
  EXPECT_EQ(m.dvector_dim(), 64);
}

TEST(ParseConfig, RoundTripThroughText) {
  RunConfig c;
  c.Set("seed", "42");
  c.Set("mode", "divided");
  c.Set("pooling", "sliding");
  c.Set("learning_rate", "0.0123456789012345");
  c.Set("pool_renormalize", "false");
  c.Set("corpus", "/tmp/some corpus");
  const std::string text = SerializeConfig(c);
  const RunConfig back = ParseConfig(text);
  EXPECT_EQ(back, c);
  EXPECT_TRUE(back.has_seed);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(SerializeConfig(back), text);
  for (const std::string &key : ConfigKeys()) EXPECT_EQ(back.Get(key), c.Get(key)) << key;
}

TEST(ParseConfig, CommentsAndWhitespace) {
  const RunConfig c = ParseConfig("# comment\n\n  steps = 7  \nscoring=bo # trailing\n");
  EXPECT_EQ(c.steps, 7);
  EXPECT_EQ(c.scoring, "bo");
  EXPECT_FALSE(c.has_seed);
}

TEST(ParseConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ParseConfig("stepz = 7\n"), ConfigError);
  EXPECT_THROW(ParseConfig("steps = seven\n"), ConfigError);
  EXPECT_THROW(ParseConfig("steps\n"), ConfigError);
  EXPECT_THROW(ParseConfig("steps = 7x\n"), ConfigError);
  RunConfig c;
  EXPECT_THROW(c.Set("nope", "1"), ConfigError);
  EXPECT_THROW(c.Get("nope"), ConfigError);
}

TEST(RunConfig, ValidateRejectsInconsistentSettings) {
  auto invalid = [](const char *key, const char *value) {
    RunConfig c;
    c.Set(key, value);
    EXPECT_THROW(c.Validate(), ConfigError) << key << "=" << value;
  };
  invalid("mode", "sideways");
  invalid("scoring", "deep");
  invalid("pooling", "average");
  invalid("projection_dim", "256");
  invalid("pool_window", "0");
  invalid("learning_rate", "0");
  invalid("test_fraction", "1");
  invalid("num_layers", "0");
  invalid("loss_form", "other");
  RunConfig cross;
  cross.mode = "cross";
  cross.num_layers = 1;
  EXPECT_THROW(cross.Validate(), ConfigError);
  EXPECT_NO_THROW(RunConfig{}.Validate());
}

TEST(RunConfig, TestSplitUsesTheHighestSpeakerIds) {
  RunConfig c;
  c.num_speakers = 10;
  c.test_fraction = 0.25;
  EXPECT_EQ(c.NumTestSpeakers(), 2);
  c.test_fraction = 0.2;
  EXPECT_EQ(c.NumTestSpeakers(), 2);
}

}  // namespace
}  // namespace attnsv
