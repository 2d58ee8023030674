// Copyright 2026 The RADE Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records one forward computation; Backward() walks it in
// reverse and accumulates gradients into the leaves (and into bound
// Parameters). Tapes are single-use and cheap to construct.

#ifndef RADE_AUTODIFF_H_
#define RADE_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace rade::ad {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Handle to a node on a tape.
struct Var {
  int id = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a parameter: its gradient is added to `p.grad`. Repeated
  // calls for the same parameter return the same node.
  Var Param(Parameter& p);
  // Leaf whose gradient can be read back with Grad().
  Var Input(Matrix value);
  // Leaf that never receives a gradient.
  Var Constant(Matrix value);

  const Matrix& Value(Var v) const { return nodes_[v.id].value; }
  const Matrix& Grad(Var v) const { return nodes_[v.id].grad; }
  double Scalar(Var v) const { return nodes_[v.id].value(0, 0); }

  Var MatMul(Var a, Var b);
  // a * b^T.
  Var MatMulTransposed(Var a, Var b);
  // x * w + b, with b a 1 x cols row broadcast over rows.
  Var Linear(Var x, Var w, Var b);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Scale(Var a, double factor);
  Var AddConstant(Var a, double c);
  Var Tanh(Var a);
  // Tanh-approximated GELU.
  Var Gelu(Var a);
  Var Square(Var a);
  // log(1 + exp(a)), elementwise.
  Var Softplus(Var a);
  // Row-wise layer normalization with learned gain and bias (1 x cols).
  Var LayerNorm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var GatherRows(Var table, std::span<const int> rows);
  Var SliceRows(Var a, int start, int count);
  // 1 x 1 view of one element.
  Var Element(Var a, int row, int col);
  // Mean over the rows whose mask entry is true; result is 1 x cols.
  Var MaskedMeanRows(Var a, const std::vector<bool>& mask);
  // Multi-head scaled dot-product attention: queries n x d, keys and values
  // m x d, split into `heads` column blocks. With `causal`, query i only sees
  // keys 0..i.
  Var Attention(Var queries, Var keys, Var values, int heads, bool causal);
  // Inverted dropout; identity when rate == 0.
  Var Dropout(Var a, double rate, std::mt19937_64& rng);
  // Sum over rows of log softmax(logits[r])[targets[r]]; 1 x 1.
  Var SumTargetLogProbs(Var logits, std::span<const int> targets);
  Var Sum(std::span<const Var> scalars);

  // Seeds d(loss)/d(loss) = 1 and back-propagates. `loss` must be 1 x 1.
  void Backward(Var loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var Push(Matrix value, bool needs_grad,
           std::function<void(Tape&)> backward = nullptr);
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }
  // Gradient buffer of `v`, zero-initialized on first use.
  Matrix& GradRef(Var v);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// Row-wise log softmax of a plain matrix.
Matrix LogSoftmaxRows(const Matrix& logits);

}  // namespace rade::ad

#endif  // RADE_AUTODIFF_H_
