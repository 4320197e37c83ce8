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

#ifndef ATTNSV_NETWORK_H_
#define ATTNSV_NETWORK_H_

#include <random>
#include <string>
#include <vector>

#include "attnsv/autodiff.h"

namespace attnsv {

// Stack of LSTM layers with a linear recurrent projection (LSTMP), followed
// by an optional per-frame affine layer.
struct NetworkConfig {
  int input_dim = 40;
  int num_layers = 3;
  int cell_dim = 128;
  int projection_dim = 64;
  // Projection of the top LSTM layer; doubled for divided-layer attention.
  int last_projection_dim = 64;
  // 0 disables the per-frame affine layer.
  int final_linear_dim = 64;
  double init_scale = 0.2;

  int layer_input_dim(int layer) const;
  int layer_projection_dim(int layer) const;
  // Dimension of the per-frame outputs h_t handed to attention.
  int output_dim() const;
  void Validate() const;
};

// Names of the tensors owned by layer `layer`.
std::string GateWeightName(int layer);  // 4c x (input + projection), [i f g o]
std::string GateBiasName(int layer);    // 4c x 1
std::string ProjectionName(int layer);  // projection x c
inline constexpr const char *kLinearW = "linear/w";
inline constexpr const char *kLinearB = "linear/b";

// Uniform in [-init_scale, init_scale], forget-gate biases set to 1.
void InitNetworkParams(const NetworkConfig &config, std::mt19937_64 &rng,
                       ParameterSet *params);
size_t NetworkParameterCount(const NetworkConfig &config);

struct SequenceNodes {
  std::vector<NodeId> layers;  // projected outputs per LSTM layer, dim x T
  NodeId output;               // h_t for every frame, output_dim x T
};

// `input` is D x T (one frame per column). Initial states are zero.
SequenceNodes BuildEncoder(Tape &tape, const Bindings &params,
                           const NetworkConfig &config, NodeId input);

struct SequenceOutputs {
  std::vector<Eigen::MatrixXd> layers;
  Eigen::MatrixXd output;

  const Eigen::MatrixXd &last() const { return output; }
  // Second-to-last LSTM layer.
  const Eigen::MatrixXd &previous() const { return layers.at(layers.size() - 2); }
};

SequenceOutputs LstmpForward(const ParameterSet &params,
                             const NetworkConfig &config,
                             const Eigen::MatrixXd &input);

// "ATNW", u32 count, then per tensor: u16 name length, name, u8 rank,
// u32 dims, f64 values in row-major order. Column vectors use rank 1.
void WriteCheckpoint(const std::string &path, const ParameterSet &tensors);
ParameterSet ReadCheckpoint(const std::string &path);
std::string SerializeCheckpoint(const ParameterSet &tensors);

}  // namespace attnsv

#endif  // ATTNSV_NETWORK_H_
