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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace attnsv {

namespace {

std::string ShapeString(const Tensor &t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

bool IsScalar(const Tensor &t) { return t.rows() == 1 && t.cols() == 1; }

bool SameShape(const Tensor &a, const Tensor &b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

// Output shape of a broadcastable elementwise op, or throws.
void CheckBroadcast(const char *op, const Tensor &a, const Tensor &b) {
  if (SameShape(a, b) || IsScalar(a) || IsScalar(b)) return;
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   ShapeString(a) + " and " + ShapeString(b));
}

// Adds `contribution` (shaped like the op output) into the gradient of an
// input, summing it down when that input was a broadcast scalar.
void Accumulate(Tensor &grad, const Tensor &contribution) {
  if (SameShape(grad, contribution)) {
    grad += contribution;
  } else {
    grad(0, 0) += contribution.sum();
  }
}

}  // namespace

const char *OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kAdd: return "add";
    case OpKind::kMultiply: return "multiply";
    case OpKind::kMatVec: return "matrix-vector-product";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kDivide: return "elementwise-divide";
    case OpKind::kDot: return "dot-product";
    case OpKind::kL2Norm: return "l2-norm";
  }
  return "unknown";
}

const Node &Tape::node(NodeId id) const {
  if (id.index < 0 || static_cast<size_t>(id.index) >= nodes_.size())
    throw std::out_of_range("Tape: invalid node id");
  return nodes_[id.index];
}

Node &Tape::mutable_node(NodeId id) {
  return const_cast<Node &>(static_cast<const Tape &>(*this).node(id));
}

double Tape::scalar(NodeId id) const {
  const Tensor &v = value(id);
  if (!IsScalar(v))
    throw ShapeError("Tape::scalar: node is " + ShapeString(v));
  return v(0, 0);
}

NodeId Tape::Append(Node n) {
  for (NodeId in : n.inputs) {
    if (in.index < 0 || static_cast<size_t>(in.index) >= nodes_.size())
      throw std::out_of_range("Tape: input refers to an unknown node");
    n.requires_grad = n.requires_grad || nodes_[in.index].requires_grad;
  }
  if (n.op != OpKind::kConstant && n.op != OpKind::kParameter) Evaluate(n);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<int32_t>(nodes_.size() - 1)};
}

NodeId Tape::Constant(Tensor value) {
  Node n;
  n.op = OpKind::kConstant;
  n.value = std::move(value);
  return Append(std::move(n));
}

NodeId Tape::Scalar(double value) {
  return Constant(Tensor::Constant(1, 1, value));
}

NodeId Tape::Parameter(Tensor value, std::string name) {
  Node n;
  n.op = OpKind::kParameter;
  n.value = std::move(value);
  n.requires_grad = true;
  n.name = std::move(name);
  NodeId id = Append(std::move(n));
  parameters_.push_back(id);
  return id;
}

void Tape::SetLeafValue(NodeId id, Tensor value) {
  Node &n = mutable_node(id);
  if (n.op != OpKind::kConstant && n.op != OpKind::kParameter)
    throw std::logic_error("SetLeafValue: node is not a leaf");
  if (!SameShape(n.value, value))
    throw ShapeError("SetLeafValue: shape changes from " +
                     ShapeString(n.value) + " to " + ShapeString(value));
  n.value = std::move(value);
}

namespace {

Node MakeNode(OpKind op, InputList inputs) {
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  return n;
}

}  // namespace

NodeId Tape::Add(NodeId a, NodeId b) {
  return Append(MakeNode(OpKind::kAdd, {a, b}));
}
NodeId Tape::Multiply(NodeId a, NodeId b) {
  return Append(MakeNode(OpKind::kMultiply, {a, b}));
}
NodeId Tape::Divide(NodeId a, NodeId b) {
  return Append(MakeNode(OpKind::kDivide, {a, b}));
}
NodeId Tape::MatVec(NodeId lhs, NodeId rhs, bool transpose_lhs) {
  Node n = MakeNode(OpKind::kMatVec, {lhs, rhs});
  n.axis = transpose_lhs ? 1 : 0;
  return Append(std::move(n));
}
NodeId Tape::Tanh(NodeId a) { return Append(MakeNode(OpKind::kTanh, {a})); }
NodeId Tape::Sigmoid(NodeId a) {
  return Append(MakeNode(OpKind::kSigmoid, {a}));
}
NodeId Tape::Exp(NodeId a) { return Append(MakeNode(OpKind::kExp, {a})); }
NodeId Tape::Log(NodeId a) { return Append(MakeNode(OpKind::kLog, {a})); }
NodeId Tape::Sum(NodeId a) { return Append(MakeNode(OpKind::kSum, {a})); }
NodeId Tape::Dot(NodeId a, NodeId b) {
  return Append(MakeNode(OpKind::kDot, {a, b}));
}
NodeId Tape::L2Norm(NodeId a) {
  return Append(MakeNode(OpKind::kL2Norm, {a}));
}

NodeId Tape::ConcatRows(const std::vector<NodeId> &parts) {
  Node n = MakeNode(OpKind::kConcat, InputList(parts));
  n.axis = 0;
  return Append(std::move(n));
}

NodeId Tape::ConcatCols(const std::vector<NodeId> &parts) {
  Node n = MakeNode(OpKind::kConcat, InputList(parts));
  n.axis = 1;
  return Append(std::move(n));
}

NodeId Tape::Slice(NodeId a, Eigen::Index row0, Eigen::Index rows,
                   Eigen::Index col0, Eigen::Index cols) {
  Node n = MakeNode(OpKind::kSlice, {a});
  n.row0 = row0;
  n.rows = rows;
  n.col0 = col0;
  n.cols = cols;
  return Append(std::move(n));
}

NodeId Tape::Sub(NodeId a, NodeId b) { return Add(a, Scale(b, -1.0)); }

NodeId Tape::Scale(NodeId a, double factor) {
  return Multiply(a, Scalar(factor));
}

NodeId Tape::AddScalar(NodeId a, double offset) {
  return Add(a, Scalar(offset));
}

NodeId Tape::Column(NodeId a, Eigen::Index col) {
  return Slice(a, 0, value(a).rows(), col, 1);
}

NodeId Tape::Rows(NodeId a, Eigen::Index row0, Eigen::Index rows) {
  return Slice(a, row0, rows, 0, value(a).cols());
}

void Tape::Evaluate(Node &n) const {
  auto in = [&](size_t i) -> const Tensor & {
    return nodes_[n.inputs[i].index].value;
  };
  const char *name = OpKindName(n.op);
  switch (n.op) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kAdd:
    case OpKind::kMultiply:
    case OpKind::kDivide: {
      const Tensor &a = in(0), &b = in(1);
      CheckBroadcast(name, a, b);
      const bool sa = IsScalar(a) && !IsScalar(b);
      const bool sb = IsScalar(b) && !IsScalar(a);
      if (n.op == OpKind::kAdd) {
        if (sa) n.value = (b.array() + a(0, 0)).matrix();
        else if (sb) n.value = (a.array() + b(0, 0)).matrix();
        else n.value = a + b;
      } else if (n.op == OpKind::kMultiply) {
        if (sa) n.value = b * a(0, 0);
        else if (sb) n.value = a * b(0, 0);
        else n.value = a.cwiseProduct(b);
      } else {
        if (sa) n.value = (a(0, 0) / b.array()).matrix();
        else if (sb) n.value = a / b(0, 0);
        else n.value = a.cwiseQuotient(b);
      }
      return;
    }
    case OpKind::kMatVec: {
      const Tensor &m = in(0), &x = in(1);
      const bool t = n.axis == 1;
      if ((t ? m.rows() : m.cols()) != x.rows())
        throw ShapeError(std::string(name) + ": " + ShapeString(m) +
                         (t ? "^T" : "") + " times " + ShapeString(x));
      if (t) n.value.noalias() = m.transpose() * x;
      else n.value.noalias() = m * x;
      return;
    }
    case OpKind::kTanh:
      n.value = in(0).array().tanh().matrix();
      return;
    case OpKind::kSigmoid:
      n.value = (1.0 / (1.0 + (-in(0).array()).exp())).matrix();
      return;
    case OpKind::kExp:
      n.value = in(0).array().exp().matrix();
      return;
    case OpKind::kLog:
      n.value = in(0).array().log().matrix();
      return;
    case OpKind::kSum:
      n.value = Tensor::Constant(1, 1, in(0).sum());
      return;
    case OpKind::kDot: {
      if (!SameShape(in(0), in(1)))
        throw ShapeError(std::string(name) + ": " + ShapeString(in(0)) +
                         " vs " + ShapeString(in(1)));
      n.value = Tensor::Constant(1, 1, in(0).cwiseProduct(in(1)).sum());
      return;
    }
    case OpKind::kL2Norm:
      n.value = Tensor::Constant(1, 1, in(0).norm());
      return;
    case OpKind::kConcat: {
      if (n.inputs.empty()) throw ShapeError("concat: no inputs");
      Eigen::Index total = 0;
      const Eigen::Index fixed = n.axis == 0 ? in(0).cols() : in(0).rows();
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor &p = in(i);
        if ((n.axis == 0 ? p.cols() : p.rows()) != fixed)
          throw ShapeError("concat: part " + std::to_string(i) + " is " +
                           ShapeString(p));
        total += n.axis == 0 ? p.rows() : p.cols();
      }
      if (n.axis == 0) n.value.resize(total, fixed);
      else n.value.resize(fixed, total);
      Eigen::Index offset = 0;
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        const Tensor &p = in(i);
        if (n.axis == 0) {
          n.value.middleRows(offset, p.rows()) = p;
          offset += p.rows();
        } else {
          n.value.middleCols(offset, p.cols()) = p;
          offset += p.cols();
        }
      }
      return;
    }
    case OpKind::kSlice: {
      const Tensor &a = in(0);
      if (n.row0 < 0 || n.col0 < 0 || n.rows < 1 || n.cols < 1 ||
          n.row0 + n.rows > a.rows() || n.col0 + n.cols > a.cols())
        throw ShapeError("slice: block out of range for " + ShapeString(a));
      n.value = a.block(n.row0, n.col0, n.rows, n.cols);
      return;
    }
  }
}

void Tape::Forward() {
  for (Node &n : nodes_) Evaluate(n);
}

void Tape::Propagate(const Node &n) {
  const Tensor &g = n.grad;
  auto input = [&](size_t i) -> Node & { return nodes_[n.inputs[i].index]; };
  switch (n.op) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kAdd: {
      for (size_t i = 0; i < 2; ++i)
        if (input(i).requires_grad) Accumulate(input(i).grad, g);
      return;
    }
    case OpKind::kMultiply: {
      Node &a = input(0), &b = input(1);
      auto times = [&](const Tensor &other) -> Tensor {
        if (IsScalar(other) && !IsScalar(g)) return g * other(0, 0);
        return g.cwiseProduct(other);
      };
      if (a.requires_grad) Accumulate(a.grad, times(b.value));
      if (b.requires_grad) Accumulate(b.grad, times(a.value));
      return;
    }
    case OpKind::kDivide: {
      Node &a = input(0), &b = input(1);
      // y = a / b: dy/da = 1 / b, dy/db = -y / b.
      Tensor inv_b = IsScalar(b.value) && !IsScalar(n.value)
                         ? Tensor::Constant(n.value.rows(), n.value.cols(),
                                            1.0 / b.value(0, 0))
                         : Tensor(b.value.cwiseInverse());
      if (a.requires_grad) Accumulate(a.grad, g.cwiseProduct(inv_b));
      if (b.requires_grad)
        Accumulate(b.grad, -g.cwiseProduct(n.value).cwiseProduct(inv_b));
      return;
    }
    case OpKind::kMatVec: {
      Node &m = input(0), &x = input(1);
      if (n.axis == 1) {
        if (m.requires_grad) m.grad.noalias() += x.value * g.transpose();
        if (x.requires_grad) x.grad.noalias() += m.value * g;
      } else {
        if (m.requires_grad) m.grad.noalias() += g * x.value.transpose();
        if (x.requires_grad) x.grad.noalias() += m.value.transpose() * g;
      }
      return;
    }
    case OpKind::kTanh: {
      Node &a = input(0);
      if (a.requires_grad)
        a.grad.array() += g.array() * (1.0 - n.value.array().square());
      return;
    }
    case OpKind::kSigmoid: {
      Node &a = input(0);
      if (a.requires_grad)
        a.grad.array() +=
            g.array() * n.value.array() * (1.0 - n.value.array());
      return;
    }
    case OpKind::kExp: {
      Node &a = input(0);
      if (a.requires_grad) a.grad.array() += g.array() * n.value.array();
      return;
    }
    case OpKind::kLog: {
      Node &a = input(0);
      if (a.requires_grad) a.grad.array() += g.array() / a.value.array();
      return;
    }
    case OpKind::kSum: {
      Node &a = input(0);
      if (a.requires_grad) a.grad.array() += g(0, 0);
      return;
    }
    case OpKind::kDot: {
      Node &a = input(0), &b = input(1);
      if (a.requires_grad) a.grad += g(0, 0) * b.value;
      if (b.requires_grad) b.grad += g(0, 0) * a.value;
      return;
    }
    case OpKind::kL2Norm: {
      Node &a = input(0);
      if (a.requires_grad) a.grad += (g(0, 0) / n.value(0, 0)) * a.value;
      return;
    }
    case OpKind::kConcat: {
      Eigen::Index offset = 0;
      for (size_t i = 0; i < n.inputs.size(); ++i) {
        Node &p = input(i);
        const Eigen::Index len = n.axis == 0 ? p.value.rows() : p.value.cols();
        if (p.requires_grad) {
          if (n.axis == 0) p.grad += g.middleRows(offset, len);
          else p.grad += g.middleCols(offset, len);
        }
        offset += len;
      }
      return;
    }
    case OpKind::kSlice: {
      Node &a = input(0);
      if (a.requires_grad) a.grad.block(n.row0, n.col0, n.rows, n.cols) += g;
      return;
    }
  }
}

void Tape::Backward(NodeId root) {
  const Node &r = node(root);
  if (!IsScalar(r.value))
    throw ShapeError("Backward: root must be scalar, got " +
                     ShapeString(r.value));
  for (Node &n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
  nodes_[root.index].grad(0, 0) = 1.0;
  for (int32_t i = root.index; i >= 0; --i) {
    const Node &n = nodes_[i];
    if (n.requires_grad) Propagate(n);
  }
}

Bindings::Bindings(Tape *tape, const ParameterSet &params) : tape_(tape) {
  for (const auto &[name, value] : params)
    ids_.emplace(name, tape->Parameter(value, name));
}

NodeId Bindings::operator[](const std::string &name) const {
  auto it = ids_.find(name);
  if (it == ids_.end())
    throw std::out_of_range("no bound parameter named '" + name + "'");
  return it->second;
}

ParameterSet Bindings::Gradients() const {
  ParameterSet grads;
  for (const auto &[name, id] : ids_) grads.emplace(name, tape_->grad(id));
  return grads;
}

double SquaredNorm(const ParameterSet &params) {
  double total = 0.0;
  for (const auto &[name, t] : params) total += t.squaredNorm();
  return total;
}

GradCheckResult GradCheck(const ScalarGraphFn &fn, const ParameterSet &point,
                          const GradCheckOptions &options) {
  if (!(options.step > 0.0))
    throw std::invalid_argument("GradCheck: step must be positive");
  Tape tape;
  Bindings bound(&tape, point);
  const NodeId root = fn(tape, bound);
  if (!std::isfinite(tape.scalar(root)))
    throw NumericError("GradCheck: non-finite function value at the base point");
  tape.Backward(root);
  const ParameterSet analytic = bound.Gradients();

  // Perturbed points reuse the recorded graph: leaves are overwritten and
  // the tape is re-evaluated in place.
  Tape work_tape;
  Bindings work_bound(&work_tape, point);
  const NodeId work_root = fn(work_tape, work_bound);
  auto evaluate = [&](const std::string &name, const Tensor &value) {
    work_tape.SetLeafValue(work_bound[name], value);
    work_tape.Forward();
    return work_tape.scalar(work_root);
  };

  GradCheckResult result;
  ParameterSet work = point;
  for (const auto &[name, base] : point) {
    const Eigen::Index size = base.size();
    Eigen::Index stride = 1;
    if (options.max_entries_per_tensor > 0 &&
        static_cast<size_t>(size) > options.max_entries_per_tensor)
      stride = (size + options.max_entries_per_tensor - 1) /
               options.max_entries_per_tensor;
    Tensor &entry = work.at(name);
    for (Eigen::Index i = 0; i < size; i += stride) {
      const double original = entry(i);
      entry(i) = original + options.step;
      const double plus = evaluate(name, entry);
      entry(i) = original - options.step;
      const double minus = evaluate(name, entry);
      entry(i) = original;
      work_tape.SetLeafValue(work_bound[name], entry);
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double grad = analytic.at(name)(i) + options.corrupt_analytic;
      if (!std::isfinite(numeric) || !std::isfinite(grad))
        throw NumericError("GradCheck: non-finite value for parameter '" +
                           name + "' entry " + std::to_string(i));
      const double err =
          std::abs(grad - numeric) / std::max(1.0, std::abs(numeric));
      ++result.entries_checked;
      if (err > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace attnsv
