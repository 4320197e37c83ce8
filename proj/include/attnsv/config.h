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

#ifndef ATTNSV_CONFIG_H_
#define ATTNSV_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attnsv/features.h"
#include "attnsv/loss.h"
#include "attnsv/model.h"

namespace attnsv {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Every knob of a run. Serialized as flat "key = value" lines; see
// ConfigKeys() for the names.
struct RunConfig {
  uint64_t seed = 0;
  bool has_seed = false;  // "seed" is only serialized when set
  std::string corpus = "corpus";
  std::string out = "out";
  std::string checkpoint;  // empty: <out>/checkpoint.atnw

  // Encoder.
  int num_layers = 3;
  int cell_dim = 128;
  int projection_dim = 64;
  int final_linear_dim = 64;
  double init_scale = 0.2;

  // Head.
  std::string mode = "basic";
  std::string scoring = "snl";
  int attention_hidden = 64;
  std::string pooling = "none";
  int pool_window = 10;
  int pool_step = 5;
  int pool_k = 5;
  bool pool_renormalize = true;

  // Training.
  double learning_rate = 0.01;
  double clip_norm = 3.0;
  int steps = 5000;
  int num_enroll = 4;
  std::string loss_form = "corrected";
  int checkpoint_every = 1000;
  bool resume = false;

  // Synthetic corpus.
  int num_speakers = 80;
  int utterances_per_speaker = 20;
  double test_fraction = 0.2;
  double template_scale = 2.0;
  double speaker_scale = 2.0;
  double noise_level = 1.0;
  double silence_level = -1.0;
  int min_phoneme_frames_a = 9;
  int max_phoneme_frames_a = 15;
  int min_phoneme_frames_b = 12;
  int max_phoneme_frames_b = 20;

  // Evaluation, visualization, gradient checking.
  int eval_enroll = 4;
  int viz_batch = 32;
  int gradcheck_seeds = 10;
  double corrupt_gradient = 0.0;

  bool operator==(const RunConfig &) const = default;

  // Applies one "key = value" assignment. Throws ConfigError on an
  // unknown key or a malformed value.
  void Set(const std::string &key, const std::string &value);
  std::string Get(const std::string &key) const;
  // Rejects inconsistent combinations with an actionable message.
  void Validate() const;

  ModelConfig ToModelConfig() const;
  SynthSpec ToSynthSpec() const;
  OptimizerConfig ToOptimizerConfig() const;
  std::string CheckpointPath() const;
  // floor(num_speakers * test_fraction) speakers, the highest ids.
  int NumTestSpeakers() const;
};

const std::vector<std::string> &ConfigKeys();

// Blank lines and '#' comments are ignored.
RunConfig ParseConfig(const std::string &text);
RunConfig LoadConfig(const std::string &path);
std::string SerializeConfig(const RunConfig &config);

}  // namespace attnsv

#endif  // ATTNSV_CONFIG_H_
