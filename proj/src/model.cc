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

#include "attnsv/model.h"

#include <stdexcept>

namespace attnsv {

ModelConfig ModelConfig::Resolve(const NetworkConfig &base,
                                 const DVectorConfig &dvector) {
  ModelConfig out{base, dvector};
  if (dvector.mode == AttentionMode::kDividedLayer) {
    out.network.last_projection_dim = 2 * base.last_projection_dim;
    if (base.final_linear_dim > 0)
      out.network.final_linear_dim = 2 * base.final_linear_dim;
  }
  return out;
}

int ModelConfig::dvector_dim() const {
  const int m = network.output_dim();
  return dvector.mode == AttentionMode::kDividedLayer ? m / 2 : m;
}

void ModelConfig::Validate() const {
  network.Validate();
  dvector.pooling.Validate();
  if (dvector.mode == AttentionMode::kCrossLayer && network.num_layers < 2)
    throw std::invalid_argument("cross-layer attention requires at least 2 LSTM layers");
  if (dvector.mode == AttentionMode::kDividedLayer && network.output_dim() % 2 != 0)
    throw std::invalid_argument("divided-layer attention requires an even last-layer dim, got " +
                                std::to_string(network.output_dim()));
  if (dvector.mode != AttentionMode::kLastFrame) {
    if (IsNonLinear(dvector.scoring.kind) && dvector.scoring.hidden_dim <= 0)
      throw std::invalid_argument("non-linear scoring requires hidden_dim > 0");
    if (IsPerFrame(dvector.scoring.kind) && dvector.num_frames <= 0)
      throw std::invalid_argument("per-frame scoring requires a fixed frame count");
  }
}

namespace {

int ScoredDim(const ModelConfig &config) {
  switch (config.dvector.mode) {
    case AttentionMode::kCrossLayer:
      return config.network.layer_projection_dim(config.network.num_layers - 2);
    case AttentionMode::kDividedLayer:
      return config.network.output_dim() / 2;
    default:
      return config.network.output_dim();
  }
}

std::mt19937_64 InitRng(uint64_t seed, uint32_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    0x1417u, stream};
  return std::mt19937_64(seq);
}

}  // namespace

Model InitModel(const ModelConfig &config, uint64_t seed) {
  config.Validate();
  Model model{config, {}};
  auto net_rng = InitRng(seed, 0);
  InitNetworkParams(config.network, net_rng, &model.params);
  if (config.dvector.mode != AttentionMode::kLastFrame) {
    auto att_rng = InitRng(seed, 1);
    InitScoringParams(config.dvector.scoring, ScoredDim(config),
                      config.dvector.num_frames, config.network.init_scale,
                      att_rng, &model.params);
  }
  model.params[kSimilarityW] = Tensor::Constant(1, 1, 10.0);
  model.params[kSimilarityB] = Tensor::Constant(1, 1, -5.0);
  return model;
}

void CheckModelParams(const ModelConfig &config, const ParameterSet &params) {
  const Model reference = InitModel(config, 0);
  for (const auto &[name, t] : reference.params) {
    auto it = params.find(name);
    if (it == params.end())
      throw DataError("checkpoint is missing tensor '" + name + "'");
    if (it->second.rows() != t.rows() || it->second.cols() != t.cols())
      throw DataError("checkpoint tensor '" + name + "' is " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", config expects " +
                      std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
  for (const auto &[name, t] : params)
    if (!reference.params.count(name))
      throw DataError("checkpoint has unexpected tensor '" + name + "'");
}

EmbeddingNodes BuildEmbedding(Tape &tape, const Bindings &params,
                              const ModelConfig &config,
                              const Eigen::MatrixXd &features) {
  EmbeddingNodes out;
  out.sequence = BuildEncoder(tape, params, config.network, tape.Constant(features));
  const auto &layers = out.sequence.layers;
  NodeId previous = layers.size() >= 2 ? layers[layers.size() - 2] : NodeId{};
  out.head = BuildDVector(tape, params, config.dvector, out.sequence.output, previous);
  return out;
}

Embedding Embed(const Model &model, const FeatureMatrix &features) {
  return Embed(model, features, model.config.dvector.pooling);
}

Embedding Embed(const Model &model, const FeatureMatrix &features,
                const PoolingConfig &pooling) {
  ModelConfig config = model.config;
  config.dvector.pooling = pooling;
  Tape tape;
  Bindings bound(&tape, model.params);
  EmbeddingNodes nodes = BuildEmbedding(tape, bound, config, features.AsColumns());
  Embedding out;
  out.dvector = tape.value(nodes.head.dvector);
  if (nodes.head.weights.valid())
    out.attention = AttentionWeights{tape.value(nodes.head.scores),
                                     tape.value(nodes.head.weights)};
  return out;
}

}  // namespace attnsv
