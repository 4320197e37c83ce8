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

#ifndef ATTNSV_AUTODIFF_H_
#define ATTNSV_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attnsv {

// Dense value of rank <= 2. Column vectors are n x 1, scalars are 1 x 1.
using Tensor = Eigen::MatrixXd;

class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpKind : uint8_t {
  kConstant,
  kParameter,
  kAdd,
  kMultiply,
  kMatVec,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSum,
  kConcat,
  kSlice,
  kDivide,
  kDot,
  kL2Norm,
};

const char *OpKindName(OpKind kind);

struct NodeId {
  int32_t index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(NodeId, NodeId) = default;
};

// Node inputs; up to two are stored inline.
class InputList {
 public:
  InputList() = default;
  InputList(std::initializer_list<NodeId> ids) {
    for (NodeId id : ids) push_back(id);
  }
  explicit InputList(const std::vector<NodeId> &ids) {
    for (NodeId id : ids) push_back(id);
  }
  void push_back(NodeId id) {
    if (size_ < 2 && spill_.empty()) {
      inline_[size_++] = id;
      return;
    }
    if (spill_.empty()) spill_.assign(inline_, inline_ + size_);
    spill_.push_back(id);
    ++size_;
  }
  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const NodeId *begin() const {
    return spill_.empty() ? inline_ : spill_.data();
  }
  const NodeId *end() const { return begin() + size_; }
  NodeId operator[](size_t i) const { return begin()[i]; }

 private:
  NodeId inline_[2];
  std::vector<NodeId> spill_;
  size_t size_ = 0;
};

struct Node {
  OpKind op = OpKind::kConstant;
  InputList inputs;
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  // kMatVec: lhs is transposed. kConcat: 0 stacks rows, 1 stacks columns.
  int axis = 0;
  // kSlice block: [row0, row0 + rows) x [col0, col0 + cols).
  Eigen::Index row0 = 0, col0 = 0, rows = 0, cols = 0;
  std::string name;
};

// Define-by-run tape. Nodes are evaluated as they are appended, so the
// insertion order is a topological order. Forward() re-evaluates every
// node from the current leaf values.
//
// Add, Multiply and Divide take same-shape operands, or a 1x1 operand on
// either side that is broadcast over the other one.
class Tape {
 public:
  NodeId Constant(Tensor value);
  NodeId Scalar(double value);
  NodeId Parameter(Tensor value, std::string name = {});

  NodeId Add(NodeId a, NodeId b);
  NodeId Multiply(NodeId a, NodeId b);
  NodeId Divide(NodeId a, NodeId b);
  // lhs * rhs, or lhs^T * rhs when transpose_lhs. rhs may have several
  // columns, each of which is multiplied independently.
  NodeId MatVec(NodeId lhs, NodeId rhs, bool transpose_lhs = false);
  NodeId Tanh(NodeId a);
  NodeId Sigmoid(NodeId a);
  NodeId Exp(NodeId a);
  NodeId Log(NodeId a);
  NodeId Sum(NodeId a);
  NodeId Dot(NodeId a, NodeId b);
  NodeId L2Norm(NodeId a);
  NodeId ConcatRows(const std::vector<NodeId> &parts);
  NodeId ConcatCols(const std::vector<NodeId> &parts);
  NodeId Slice(NodeId a, Eigen::Index row0, Eigen::Index rows,
               Eigen::Index col0, Eigen::Index cols);

  // Conveniences composed from the primitives above.
  NodeId Sub(NodeId a, NodeId b);
  NodeId Scale(NodeId a, double factor);
  NodeId AddScalar(NodeId a, double offset);
  NodeId Column(NodeId a, Eigen::Index col);
  NodeId Rows(NodeId a, Eigen::Index row0, Eigen::Index rows);

  // Recomputes every non-leaf value in insertion order.
  void Forward();
  // Zeroes all gradients, seeds d(root)/d(root) = 1 and propagates.
  // Throws ShapeError unless root is 1x1.
  void Backward(NodeId root);

  const Tensor &value(NodeId id) const { return node(id).value; }
  const Tensor &grad(NodeId id) const { return node(id).grad; }
  double scalar(NodeId id) const;
  // Replaces the value of a constant or parameter leaf.
  void SetLeafValue(NodeId id, Tensor value);

  const Node &node(NodeId id) const;
  size_t size() const { return nodes_.size(); }
  const std::vector<NodeId> &parameters() const { return parameters_; }

 private:
  NodeId Append(Node node);
  Node &mutable_node(NodeId id);
  void Evaluate(Node &node) const;
  void Propagate(const Node &node);

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
};

// Named trainable tensors, iterated in name order.
using ParameterSet = std::map<std::string, Tensor>;

// Parameter nodes bound onto one tape, keyed like the ParameterSet.
class Bindings {
 public:
  Bindings(Tape *tape, const ParameterSet &params);
  NodeId operator[](const std::string &name) const;
  bool contains(const std::string &name) const { return ids_.count(name); }
  // d(root)/d(param) for every bound parameter after Tape::Backward.
  ParameterSet Gradients() const;
  Tape &tape() const { return *tape_; }

 private:
  Tape *tape_;
  std::map<std::string, NodeId> ids_;
};

// Builds a scalar on the supplied tape from bound parameters.
using ScalarGraphFn = std::function<NodeId(Tape &, const Bindings &)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Checks at most this many entries per tensor (0 = all), chosen with a
  // fixed stride so the check stays deterministic.
  size_t max_entries_per_tensor = 0;
  // Adds this amount to every analytic gradient; only for harness tests.
  double corrupt_analytic = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  size_t entries_checked = 0;
};

// Compares reverse-mode gradients with central differences. The error of
// one entry is |analytic - numeric| / max(1, |numeric|). Throws
// NumericError naming the parameter when a non-finite value shows up.
// The graph is recorded once at `point`; perturbed values are pushed
// through that recording, so any structure `fn` derives from values (masks,
// selections) stays fixed.
GradCheckResult GradCheck(const ScalarGraphFn &fn, const ParameterSet &point,
                          const GradCheckOptions &options = {});

// Sum of squared entries over every tensor.
double SquaredNorm(const ParameterSet &params);

}  // namespace attnsv

#endif  // ATTNSV_AUTODIFF_H_
