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

#include "rade/autodiff.h"

#include <cmath>
#include <utility>

#include "rade/error.h"
#include "rade/random.h"

namespace rade::ad {
namespace {

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    const double log_norm =
        peak + std::log((logits.row(r).array() - peak).exp().sum());
    out.row(r) = logits.row(r).array() - log_norm;
  }
  return out;
}

Var Tape::Push(Matrix value, bool needs_grad,
               std::function<void(Tape&)> backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::GradRef(Var v) {
  Node& node = nodes_[v.id];
  if (node.grad.size() == 0) {
    node.grad.setZero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

Var Tape::Param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var{it->second};
  }
  Var v = Push(p.value, true);
  nodes_[v.id].param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Tape::Input(Matrix value) { return Push(std::move(value), true); }

Var Tape::Constant(Matrix value) { return Push(std::move(value), false); }

Var Tape::MatMul(Var a, Var b) {
  const Matrix& va = Value(a);
  const Matrix& vb = Value(b);
  if (va.cols() != vb.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "MatMul: inner dimension mismatch");
  }
  Matrix out = va * vb;
  const bool needs = NeedsGrad(a) || NeedsGrad(b);
  Var r{size()};
  return Push(std::move(out), needs, [a, b, r](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    if (t.NeedsGrad(a)) t.GradRef(a).noalias() += g * t.Value(b).transpose();
    if (t.NeedsGrad(b)) t.GradRef(b).noalias() += t.Value(a).transpose() * g;
  });
}

Var Tape::MatMulTransposed(Var a, Var b) {
  const Matrix& va = Value(a);
  const Matrix& vb = Value(b);
  if (va.cols() != vb.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "MatMulTransposed: inner dimension mismatch");
  }
  Matrix out = va * vb.transpose();
  const bool needs = NeedsGrad(a) || NeedsGrad(b);
  Var r{size()};
  return Push(std::move(out), needs, [a, b, r](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    if (t.NeedsGrad(a)) t.GradRef(a).noalias() += g * t.Value(b);
    if (t.NeedsGrad(b)) t.GradRef(b).noalias() += g.transpose() * t.Value(a);
  });
}

Var Tape::Linear(Var x, Var w, Var b) {
  const Matrix& vx = Value(x);
  const Matrix& vw = Value(w);
  const Matrix& vb = Value(b);
  if (vx.cols() != vw.rows() || vb.rows() != 1 || vb.cols() != vw.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "Linear: shape mismatch");
  }
  Matrix out = vx * vw;
  out.rowwise() += vb.row(0);
  const bool needs = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(b);
  Var r{size()};
  return Push(std::move(out), needs, [x, w, b, r](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    if (t.NeedsGrad(x)) t.GradRef(x).noalias() += g * t.Value(w).transpose();
    if (t.NeedsGrad(w)) t.GradRef(w).noalias() += t.Value(x).transpose() * g;
    if (t.NeedsGrad(b)) t.GradRef(b) += g.colwise().sum();
  });
}

Var Tape::Add(Var a, Var b) {
  CheckSameShape(Value(a), Value(b), "Add");
  Matrix out = Value(a) + Value(b);
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(b), [a, b, r](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    if (t.NeedsGrad(a)) t.GradRef(a) += g;
    if (t.NeedsGrad(b)) t.GradRef(b) += g;
  });
}

Var Tape::Sub(Var a, Var b) {
  CheckSameShape(Value(a), Value(b), "Sub");
  Matrix out = Value(a) - Value(b);
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(b), [a, b, r](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    if (t.NeedsGrad(a)) t.GradRef(a) += g;
    if (t.NeedsGrad(b)) t.GradRef(b) -= g;
  });
}

Var Tape::Scale(Var a, double factor) {
  Matrix out = Value(a) * factor;
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r, factor](Tape& t) {
    t.GradRef(a) += t.nodes_[r.id].grad * factor;
  });
}

Var Tape::AddConstant(Var a, double c) {
  Matrix out = Value(a).array() + c;
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r](Tape& t) {
    t.GradRef(a) += t.nodes_[r.id].grad;
  });
}

Var Tape::Tanh(Var a) {
  Matrix out = Value(a).array().tanh();
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r](Tape& t) {
    const Matrix& y = t.nodes_[r.id].value;
    t.GradRef(a).array() +=
        t.nodes_[r.id].grad.array() * (1.0 - y.array().square());
  });
}

Var Tape::Gelu(Var a) {
  const Matrix& x = Value(a);
  Matrix inner = kGeluScale * (x.array() + kGeluCubic * x.array().cube());
  Matrix th = inner.array().tanh();
  Matrix out = 0.5 * x.array() * (1.0 + th.array());
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r, th = std::move(th)](Tape& t) {
    const auto x = t.Value(a).array();
    const auto tha = th.array();
    const auto dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x.square());
    const auto local =
        0.5 * (1.0 + tha) + 0.5 * x * (1.0 - tha.square()) * dinner;
    t.GradRef(a).array() += t.nodes_[r.id].grad.array() * local;
  });
}

Var Tape::Square(Var a) {
  Matrix out = Value(a).array().square();
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r](Tape& t) {
    t.GradRef(a).array() +=
        2.0 * t.Value(a).array() * t.nodes_[r.id].grad.array();
  });
}

Var Tape::Softplus(Var a) {
  const Matrix& x = Value(a);
  Matrix out = x.unaryExpr([](double v) {
    return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  });
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r](Tape& t) {
    const Matrix sigmoid = t.Value(a).unaryExpr([](double v) {
      return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
    });
    t.GradRef(a).array() += t.nodes_[r.id].grad.array() * sigmoid.array();
  });
}

Var Tape::LayerNorm(Var x, Var gain, Var bias, double eps) {
  const Matrix& vx = Value(x);
  const Eigen::Index rows = vx.rows();
  const Eigen::Index cols = vx.cols();
  if (Value(gain).cols() != cols || Value(bias).cols() != cols) {
    throw Error(ErrorCode::kInvalidArgument, "LayerNorm: width mismatch");
  }
  Matrix normalized(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mean = vx.row(i).mean();
    const double var =
        (vx.row(i).array() - mean).square().sum() / static_cast<double>(cols);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    normalized.row(i) = (vx.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = normalized.array().rowwise() * Value(gain).row(0).array();
  out.rowwise() += Value(bias).row(0);
  const bool needs = NeedsGrad(x) || NeedsGrad(gain) || NeedsGrad(bias);
  Var r{size()};
  return Push(
      std::move(out), needs,
      [x, gain, bias, r, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Tape& t) {
        const Matrix& g = t.nodes_[r.id].grad;
        if (t.NeedsGrad(gain)) {
          t.GradRef(gain) += (g.array() * normalized.array()).colwise().sum().matrix();
        }
        if (t.NeedsGrad(bias)) t.GradRef(bias) += g.colwise().sum();
        if (!t.NeedsGrad(x)) return;
        Matrix dnorm = g.array().rowwise() * t.Value(gain).row(0).array();
        Matrix& dx = t.GradRef(x);
        const double width = static_cast<double>(g.cols());
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
          const double mean_d = dnorm.row(i).sum() / width;
          const double mean_dn =
              (dnorm.row(i).array() * normalized.row(i).array()).sum() / width;
          dx.row(i).array() += inv_std(i) * (dnorm.row(i).array() - mean_d -
                                             normalized.row(i).array() * mean_dn);
        }
      });
}

Var Tape::GatherRows(Var table, std::span<const int> rows) {
  const Matrix& vt = Value(table);
  Matrix out(static_cast<Eigen::Index>(rows.size()), vt.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= vt.rows()) {
      throw Error(ErrorCode::kInvalidArgument, "GatherRows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = vt.row(rows[i]);
  }
  Var r{size()};
  std::vector<int> ids(rows.begin(), rows.end());
  return Push(std::move(out), NeedsGrad(table),
              [table, r, ids = std::move(ids)](Tape& t) {
                const Matrix& g = t.nodes_[r.id].grad;
                Matrix& dt = t.GradRef(table);
                for (std::size_t i = 0; i < ids.size(); ++i) {
                  dt.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
                }
              });
}

Var Tape::SliceRows(Var a, int start, int count) {
  const Matrix& va = Value(a);
  if (start < 0 || count < 0 || start + count > va.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "SliceRows: out of range");
  }
  Matrix out = va.middleRows(start, count);
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r, start, count](Tape& t) {
    t.GradRef(a).middleRows(start, count) += t.nodes_[r.id].grad;
  });
}

Var Tape::Element(Var a, int row, int col) {
  const Matrix& va = Value(a);
  if (row < 0 || col < 0 || row >= va.rows() || col >= va.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "Element: out of range");
  }
  Matrix out(1, 1);
  out(0, 0) = va(row, col);
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r, row, col](Tape& t) {
    t.GradRef(a)(row, col) += t.nodes_[r.id].grad(0, 0);
  });
}

Var Tape::MaskedMeanRows(Var a, const std::vector<bool>& mask) {
  const Matrix& va = Value(a);
  if (static_cast<Eigen::Index>(mask.size()) != va.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "MaskedMeanRows: mask length");
  }
  int kept = 0;
  Matrix out = Matrix::Zero(1, va.cols());
  for (Eigen::Index i = 0; i < va.rows(); ++i) {
    if (!mask[i]) continue;
    out += va.row(i);
    ++kept;
  }
  if (kept == 0) {
    throw Error(ErrorCode::kFullyMasked, "pooling over a fully masked input");
  }
  out /= static_cast<double>(kept);
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a), [a, r, mask, kept](Tape& t) {
    const Matrix& g = t.nodes_[r.id].grad;
    Matrix& da = t.GradRef(a);
    for (Eigen::Index i = 0; i < da.rows(); ++i) {
      if (mask[i]) da.row(i) += g.row(0) / static_cast<double>(kept);
    }
  });
}

Var Tape::Attention(Var queries, Var keys, Var values, int heads,
                    bool causal) {
  const Matrix& q = Value(queries);
  const Matrix& k = Value(keys);
  const Matrix& v = Value(values);
  const Eigen::Index n = q.rows();
  const Eigen::Index m = k.rows();
  const Eigen::Index d = q.cols();
  if (k.cols() != d || v.cols() != d || v.rows() != m || heads <= 0 ||
      d % heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "Attention: shape mismatch");
  }
  if (m == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Attention: no keys to attend to");
  }
  if (causal && n > m) {
    throw Error(ErrorCode::kInvalidArgument,
                "Attention: causal attention needs n <= m");
  }
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(n, d);
  for (int h = 0; h < heads; ++h) {
    Matrix scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose();
    scores *= scale;
    if (causal) {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
          scores(i, j) = -std::numeric_limits<double>::infinity();
        }
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double peak = scores.row(i).maxCoeff();
      scores.row(i) = (scores.row(i).array() - peak).exp();
      scores.row(i) /= scores.row(i).sum();
    }
    out.middleCols(h * dh, dh).noalias() = scores * v.middleCols(h * dh, dh);
    probs[static_cast<std::size_t>(h)] = std::move(scores);
  }
  const bool needs =
      NeedsGrad(queries) || NeedsGrad(keys) || NeedsGrad(values);
  Var r{size()};
  return Push(
      std::move(out), needs,
      [queries, keys, values, r, heads, dh, scale,
       probs = std::move(probs)](Tape& t) {
        const Matrix& g = t.nodes_[r.id].grad;
        const Matrix& q = t.Value(queries);
        const Matrix& k = t.Value(keys);
        const Matrix& v = t.Value(values);
        for (int h = 0; h < heads; ++h) {
          const Matrix& p = probs[static_cast<std::size_t>(h)];
          const auto g_h = g.middleCols(h * dh, dh);
          if (t.NeedsGrad(values)) {
            t.GradRef(values).middleCols(h * dh, dh).noalias() +=
                p.transpose() * g_h;
          }
          if (!t.NeedsGrad(queries) && !t.NeedsGrad(keys)) continue;
          Matrix dp = g_h * v.middleCols(h * dh, dh).transpose();
          const Eigen::VectorXd row_dot =
              (dp.array() * p.array()).rowwise().sum();
          Matrix ds = p.array() * (dp.colwise() - row_dot).array();
          ds *= scale;
          if (t.NeedsGrad(queries)) {
            t.GradRef(queries).middleCols(h * dh, dh).noalias() +=
                ds * k.middleCols(h * dh, dh);
          }
          if (t.NeedsGrad(keys)) {
            t.GradRef(keys).middleCols(h * dh, dh).noalias() +=
                ds.transpose() * q.middleCols(h * dh, dh);
          }
        }
      });
}

Var Tape::Dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  const Matrix& va = Value(a);
  Matrix mask(va.rows(), va.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = UniformReal(rng) < rate ? 0.0 : keep_scale;
  }
  Matrix out = va.array() * mask.array();
  Var r{size()};
  return Push(std::move(out), NeedsGrad(a),
              [a, r, mask = std::move(mask)](Tape& t) {
                t.GradRef(a).array() += t.nodes_[r.id].grad.array() * mask.array();
              });
}

Var Tape::SumTargetLogProbs(Var logits, std::span<const int> targets) {
  const Matrix& vl = Value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != vl.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "SumTargetLogProbs: one target per row required");
  }
  Matrix log_probs = LogSoftmaxRows(vl);
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= vl.cols()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "SumTargetLogProbs: target out of range");
    }
    total += log_probs(static_cast<Eigen::Index>(i), targets[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Var r{size()};
  std::vector<int> ids(targets.begin(), targets.end());
  return Push(std::move(out), NeedsGrad(logits),
              [logits, r, ids = std::move(ids),
               log_probs = std::move(log_probs)](Tape& t) {
                const double g = t.nodes_[r.id].grad(0, 0);
                Matrix& dl = t.GradRef(logits);
                dl.array() -= g * log_probs.array().exp();
                for (std::size_t i = 0; i < ids.size(); ++i) {
                  dl(static_cast<Eigen::Index>(i), ids[i]) += g;
                }
              });
}

Var Tape::Sum(std::span<const Var> scalars) {
  Matrix out = Matrix::Zero(1, 1);
  bool needs = false;
  for (Var s : scalars) {
    if (Value(s).size() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "Sum: operands must be 1 x 1");
    }
    out(0, 0) += Value(s)(0, 0);
    needs = needs || NeedsGrad(s);
  }
  Var r{size()};
  std::vector<Var> parts(scalars.begin(), scalars.end());
  return Push(std::move(out), needs, [r, parts = std::move(parts)](Tape& t) {
    const double g = t.nodes_[r.id].grad(0, 0);
    for (Var s : parts) {
      if (t.NeedsGrad(s)) t.GradRef(s)(0, 0) += g;
    }
  });
}

void Tape::Backward(Var loss) {
  if (Value(loss).size() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "Backward: loss must be 1 x 1");
  }
  if (!NeedsGrad(loss)) return;
  GradRef(loss)(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.grad.size() == 0) continue;
    if (node.backward) node.backward(*this);
    if (node.param != nullptr) {
      if (node.param->grad.size() == 0) node.param->ZeroGrad();
      node.param->grad += node.grad;
    }
  }
}

}  // namespace rade::ad
