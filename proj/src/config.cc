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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace attnsv {

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

template <typename T>
T ParseNumber(const std::string &key, const std::string &text) {
  T value{};
  const char *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

double ParseDouble(const std::string &key, const std::string &text) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception &) {
  }
  throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool ParseBool(const std::string &key, const std::string &text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + key + "': expected true|false, got '" + text + "'");
}

template <typename T>
Field Int(const char *key, T RunConfig::*member) {
  return {key,
          [=](RunConfig &c, const std::string &v) { c.*member = ParseNumber<T>(key, v); },
          [=](const RunConfig &c) { return std::to_string(c.*member); }};
}

Field Double(const char *key, double RunConfig::*member) {
  return {key,
          [=](RunConfig &c, const std::string &v) { c.*member = ParseDouble(key, v); },
          [=](const RunConfig &c) { return FormatDouble(c.*member); }};
}

Field String(const char *key, std::string RunConfig::*member) {
  return {key, [=](RunConfig &c, const std::string &v) { c.*member = v; },
          [=](const RunConfig &c) { return c.*member; }};
}

Field Bool(const char *key, bool RunConfig::*member) {
  return {key,
          [=](RunConfig &c, const std::string &v) { c.*member = ParseBool(key, v); },
          [=](const RunConfig &c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = {
      {"seed",
       [](RunConfig &c, const std::string &v) {
         c.seed = ParseNumber<uint64_t>("seed", v);
         c.has_seed = true;
       },
       [](const RunConfig &c) { return std::to_string(c.seed); }},
      String("corpus", &RunConfig::corpus),
      String("out", &RunConfig::out),
      String("checkpoint", &RunConfig::checkpoint),
      Int("num_layers", &RunConfig::num_layers),
      Int("cell_dim", &RunConfig::cell_dim),
      Int("projection_dim", &RunConfig::projection_dim),
      Int("final_linear_dim", &RunConfig::final_linear_dim),
      Double("init_scale", &RunConfig::init_scale),
      String("mode", &RunConfig::mode),
      String("scoring", &RunConfig::scoring),
      Int("attention_hidden", &RunConfig::attention_hidden),
      String("pooling", &RunConfig::pooling),
      Int("pool_window", &RunConfig::pool_window),
      Int("pool_step", &RunConfig::pool_step),
      Int("pool_k", &RunConfig::pool_k),
      Bool("pool_renormalize", &RunConfig::pool_renormalize),
      Double("learning_rate", &RunConfig::learning_rate),
      Double("clip_norm", &RunConfig::clip_norm),
      Int("steps", &RunConfig::steps),
      Int("num_enroll", &RunConfig::num_enroll),
      String("loss_form", &RunConfig::loss_form),
      Int("checkpoint_every", &RunConfig::checkpoint_every),
      Bool("resume", &RunConfig::resume),
      Int("num_speakers", &RunConfig::num_speakers),
      Int("utterances_per_speaker", &RunConfig::utterances_per_speaker),
      Double("test_fraction", &RunConfig::test_fraction),
      Double("template_scale", &RunConfig::template_scale),
      Double("speaker_scale", &RunConfig::speaker_scale),
      Double("noise_level", &RunConfig::noise_level),
      Double("silence_level", &RunConfig::silence_level),
      Int("min_phoneme_frames_a", &RunConfig::min_phoneme_frames_a),
      Int("max_phoneme_frames_a", &RunConfig::max_phoneme_frames_a),
      Int("min_phoneme_frames_b", &RunConfig::min_phoneme_frames_b),
      Int("max_phoneme_frames_b", &RunConfig::max_phoneme_frames_b),
      Int("eval_enroll", &RunConfig::eval_enroll),
      Int("viz_batch", &RunConfig::viz_batch),
      Int("gradcheck_seeds", &RunConfig::gradcheck_seeds),
      Double("corrupt_gradient", &RunConfig::corrupt_gradient),
  };
  return fields;
}

const Field &FindField(const std::string &key) {
  for (const Field &f : Fields())
    if (f.key == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string> &ConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field &f : Fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  FindField(key).set(*this, value);
}

std::string RunConfig::Get(const std::string &key) const {
  return FindField(key).get(*this);
}

ModelConfig RunConfig::ToModelConfig() const {
  NetworkConfig net;
  net.input_dim = kNumMelBins;
  net.num_layers = num_layers;
  net.cell_dim = cell_dim;
  net.projection_dim = projection_dim;
  net.last_projection_dim = projection_dim;
  net.final_linear_dim = final_linear_dim;
  net.init_scale = init_scale;
  DVectorConfig head;
  head.mode = ParseAttentionMode(mode);
  head.scoring.kind = ParseScoringKind(scoring);
  head.scoring.hidden_dim = attention_hidden;
  head.pooling.kind = ParsePoolingKind(pooling);
  head.pooling.window = pool_window;
  head.pooling.step = pool_step;
  head.pooling.k = pool_k;
  head.pooling.renormalize = pool_renormalize;
  head.num_frames = kSegmentFrames;
  return ModelConfig::Resolve(net, head);
}

SynthSpec RunConfig::ToSynthSpec() const {
  SynthSpec s;
  s.num_speakers = num_speakers;
  s.utterances_per_speaker = utterances_per_speaker;
  s.template_scale = template_scale;
  s.speaker_scale = speaker_scale;
  s.noise_level = noise_level;
  s.silence_level = silence_level;
  s.min_phoneme_frames_a = min_phoneme_frames_a;
  s.max_phoneme_frames_a = max_phoneme_frames_a;
  s.min_phoneme_frames_b = min_phoneme_frames_b;
  s.max_phoneme_frames_b = max_phoneme_frames_b;
  s.seed = seed;
  return s;
}

OptimizerConfig RunConfig::ToOptimizerConfig() const {
  OptimizerConfig o;
  o.learning_rate = learning_rate;
  o.clip_norm = clip_norm;
  o.steps = steps;
  o.num_enroll = num_enroll;
  o.seed = seed;
  o.loss_form = ParseLossForm(loss_form);
  return o;
}

std::string RunConfig::CheckpointPath() const {
  return checkpoint.empty() ? out + "/checkpoint.atnw" : checkpoint;
}

int RunConfig::NumTestSpeakers() const {
  // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
  return static_cast<int>(std::floor(num_speakers * test_fraction + 1e-9));
}

void RunConfig::Validate() const {
  try {
    ToModelConfig().Validate();
    ToSynthSpec().Validate();
    ToOptimizerConfig().Validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in [0, 1)");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (eval_enroll < 1) throw ConfigError("eval_enroll must be >= 1");
  if (viz_batch < 1) throw ConfigError("viz_batch must be >= 1");
  if (gradcheck_seeds < 1) throw ConfigError("gradcheck_seeds must be >= 1");
}

RunConfig ParseConfig(const std::string &text) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) +
                        ": expected 'key = value'");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    try {
      config.Set(key, value);
    } catch (const ConfigError &e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig LoadConfig(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseConfig(ss.str());
}

std::string SerializeConfig(const RunConfig &config) {
  std::string out;
  for (const Field &f : Fields()) {
    if (f.key == "seed" && !config.has_seed) continue;
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace attnsv
