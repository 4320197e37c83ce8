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

#include "attnsv/network.h"

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "attnsv/binary_io.h"
#include "attnsv/features.h"

namespace attnsv {

int NetworkConfig::layer_input_dim(int layer) const {
  return layer == 0 ? input_dim : layer_projection_dim(layer - 1);
}

int NetworkConfig::layer_projection_dim(int layer) const {
  return layer == num_layers - 1 ? last_projection_dim : projection_dim;
}

int NetworkConfig::output_dim() const {
  return final_linear_dim > 0 ? final_linear_dim : last_projection_dim;
}

void NetworkConfig::Validate() const {
  if (input_dim < 1 || num_layers < 1 || cell_dim < 1 || projection_dim < 1 ||
      last_projection_dim < 1 || final_linear_dim < 0)
    throw std::invalid_argument("network: dimensions must be positive");
  if (projection_dim > cell_dim || last_projection_dim > cell_dim)
    throw std::invalid_argument("network: projection dim exceeds cell dim");
  if (!(init_scale > 0.0))
    throw std::invalid_argument("network: init_scale must be positive");
}

std::string GateWeightName(int layer) {
  return "lstm" + std::to_string(layer) + "/w";
}
std::string GateBiasName(int layer) {
  return "lstm" + std::to_string(layer) + "/b";
}
std::string ProjectionName(int layer) {
  return "lstm" + std::to_string(layer) + "/proj";
}

void InitNetworkParams(const NetworkConfig &config, std::mt19937_64 &rng,
                       ParameterSet *params) {
  config.Validate();
  std::uniform_real_distribution<double> uniform(-config.init_scale,
                                                 config.init_scale);
  auto make = [&](Eigen::Index rows, Eigen::Index cols) {
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = uniform(rng);
    return t;
  };
  const int c = config.cell_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = config.layer_input_dim(l), p = config.layer_projection_dim(l);
    (*params)[GateWeightName(l)] = make(4 * c, in + p);
    Tensor bias = make(4 * c, 1);
    bias.middleRows(c, c).setOnes();
    (*params)[GateBiasName(l)] = std::move(bias);
    (*params)[ProjectionName(l)] = make(p, c);
  }
  if (config.final_linear_dim > 0) {
    (*params)[kLinearW] = make(config.final_linear_dim, config.last_projection_dim);
    (*params)[kLinearB] = make(config.final_linear_dim, 1);
  }
}

size_t NetworkParameterCount(const NetworkConfig &config) {
  ParameterSet params;
  std::mt19937_64 rng(0);
  InitNetworkParams(config, rng, &params);
  size_t total = 0;
  for (const auto &[name, t] : params) total += t.size();
  return total;
}

SequenceNodes BuildEncoder(Tape &tape, const Bindings &params,
                           const NetworkConfig &config, NodeId input) {
  const Eigen::Index num_frames = tape.value(input).cols();
  if (tape.value(input).rows() != config.input_dim)
    throw ShapeError("encoder: input dim " +
                     std::to_string(tape.value(input).rows()) + ", expected " +
                     std::to_string(config.input_dim));
  if (num_frames < 1) throw ShapeError("encoder: empty sequence");
  const int c = config.cell_dim;
  NodeId ones = tape.Constant(Tensor::Ones(1, num_frames));
  SequenceNodes out;
  NodeId x = input;
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = config.layer_input_dim(l), p = config.layer_projection_dim(l);
    NodeId w = params[GateWeightName(l)];
    NodeId proj = params[ProjectionName(l)];
    const Tensor &wv = tape.value(w);
    if (wv.rows() != 4 * c || wv.cols() != in + p)
      throw ShapeError("encoder: " + GateWeightName(l) + " has wrong shape");
    NodeId w_in = tape.Slice(w, 0, 4 * c, 0, in);
    NodeId w_rec = tape.Slice(w, 0, 4 * c, in, p);
    // Input contributions and biases for all frames at once: 4c x T.
    NodeId gates_in = tape.Add(tape.MatVec(w_in, x),
                               tape.MatVec(params[GateBiasName(l)], ones));
    std::vector<NodeId> outputs;
    outputs.reserve(num_frames);
    NodeId cell, recurrent;
    for (Eigen::Index t = 0; t < num_frames; ++t) {
      NodeId z = tape.Column(gates_in, t);
      if (t > 0) z = tape.Add(z, tape.MatVec(w_rec, recurrent));
      NodeId i = tape.Sigmoid(tape.Rows(z, 0, c));
      NodeId g = tape.Tanh(tape.Rows(z, 2 * c, c));
      NodeId o = tape.Sigmoid(tape.Rows(z, 3 * c, c));
      NodeId ig = tape.Multiply(i, g);
      if (t > 0) {
        NodeId f = tape.Sigmoid(tape.Rows(z, c, c));
        cell = tape.Add(tape.Multiply(f, cell), ig);
      } else {
        cell = ig;
      }
      NodeId m = tape.Multiply(o, tape.Tanh(cell));
      recurrent = tape.MatVec(proj, m);
      outputs.push_back(recurrent);
    }
    x = tape.ConcatCols(outputs);
    out.layers.push_back(x);
  }
  if (config.final_linear_dim > 0) {
    out.output = tape.Add(tape.MatVec(params[kLinearW], x),
                          tape.MatVec(params[kLinearB], ones));
  } else {
    out.output = x;
  }
  return out;
}

SequenceOutputs LstmpForward(const ParameterSet &params,
                             const NetworkConfig &config,
                             const Eigen::MatrixXd &input) {
  Tape tape;
  Bindings bound(&tape, params);
  SequenceNodes nodes = BuildEncoder(tape, bound, config, tape.Constant(input));
  SequenceOutputs out;
  for (NodeId l : nodes.layers) out.layers.push_back(tape.value(l));
  out.output = tape.value(nodes.output);
  return out;
}

namespace {

constexpr char kCheckpointMagic[4] = {'A', 'T', 'N', 'W'};

}  // namespace

std::string SerializeCheckpoint(const ParameterSet &tensors) {
  ByteWriter w;
  w.Bytes(kCheckpointMagic, 4);
  w.U32(static_cast<uint32_t>(tensors.size()));
  for (const auto &[name, t] : tensors) {
    if (name.size() > 0xFFFF) throw std::invalid_argument("tensor name too long");
    w.U16(static_cast<uint16_t>(name.size()));
    w.Bytes(name.data(), name.size());
    if (t.cols() == 1) {
      w.U8(1);
      w.U32(static_cast<uint32_t>(t.rows()));
    } else {
      w.U8(2);
      w.U32(static_cast<uint32_t>(t.rows()));
      w.U32(static_cast<uint32_t>(t.cols()));
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) w.F64(t(r, c));
  }
  return w.buffer();
}

void WriteCheckpoint(const std::string &path, const ParameterSet &tensors) {
  // Write-then-rename so an interrupted run never leaves a torn file.
  const std::string tmp = path + ".tmp";
  ByteWriter w;
  const std::string bytes = SerializeCheckpoint(tensors);
  w.Bytes(bytes.data(), bytes.size());
  if (!w.WriteFile(tmp)) throw DataError("cannot write checkpoint " + tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move checkpoint into place: " + ec.message());
}

ParameterSet ReadCheckpoint(const std::string &path) {
  std::string bytes;
  if (!ReadFileBytes(path, &bytes)) throw DataError("cannot read checkpoint " + path);
  ByteReader r(bytes);
  auto fail = [&](const std::string &why) {
    return DataError("checkpoint " + path + ": " + why);
  };
  char magic[4];
  if (!r.Bytes(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic))
    throw fail("bad magic");
  uint32_t count = 0;
  if (!r.U32(&count)) throw fail("truncated");
  ParameterSet out;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t len = 0;
    if (!r.U16(&len)) throw fail("truncated");
    std::string name(len, '\0');
    if (!r.Bytes(name.data(), len)) throw fail("truncated");
    uint8_t rank = 0;
    if (!r.U8(&rank) || rank > 2) throw fail("bad rank for " + name);
    uint32_t rows = 1, cols = 1;
    if (rank >= 1 && !r.U32(&rows)) throw fail("truncated");
    if (rank == 2 && !r.U32(&cols)) throw fail("truncated");
    if (r.remaining() / 8 < uint64_t{rows} * cols) throw fail("truncated");
    Tensor t(rows, cols);
    for (Eigen::Index a = 0; a < t.rows(); ++a)
      for (Eigen::Index b = 0; b < t.cols(); ++b) r.F64(&t(a, b));
    out.emplace(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) throw fail("trailing bytes");
  return out;
}

}  // namespace attnsv
