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

#ifndef ATTNSV_MODEL_H_
#define ATTNSV_MODEL_H_

#include <cstdint>
#include <optional>

#include "attnsv/attention.h"
#include "attnsv/features.h"
#include "attnsv/network.h"

namespace attnsv {

inline constexpr const char *kSimilarityW = "similarity/w";
inline constexpr const char *kSimilarityB = "similarity/b";

// Encoder plus d-vector head. `network` is the resolved geometry: for
// divided-layer attention its output dimension is already doubled.
struct ModelConfig {
  NetworkConfig network;
  DVectorConfig dvector;

  // Doubles the top projection and the per-frame linear layer when the
  // mode is divided-layer, so part-a keeps the base output dimension.
  static ModelConfig Resolve(const NetworkConfig &base, const DVectorConfig &dvector);
  int dvector_dim() const;
  void Validate() const;
};

struct Model {
  ModelConfig config;
  ParameterSet params;
};

// Network parameters come from one stream and attention parameters from
// another, so models that differ only in the head share the encoder init.
Model InitModel(const ModelConfig &config, uint64_t seed);
// Throws DataError when `params` does not have exactly the tensors and
// shapes `config` implies.
void CheckModelParams(const ModelConfig &config, const ParameterSet &params);

struct EmbeddingNodes {
  SequenceNodes sequence;
  DVectorNodes head;
};

EmbeddingNodes BuildEmbedding(Tape &tape, const Bindings &params,
                              const ModelConfig &config,
                              const Eigen::MatrixXd &features);

struct Embedding {
  Eigen::VectorXd dvector;
  // Absent in last-frame mode.
  std::optional<AttentionWeights> attention;
};

Embedding Embed(const Model &model, const FeatureMatrix &features);
// Same, with the model's pooling replaced by `pooling`.
Embedding Embed(const Model &model, const FeatureMatrix &features,
                const PoolingConfig &pooling);

}  // namespace attnsv

#endif  // ATTNSV_MODEL_H_
