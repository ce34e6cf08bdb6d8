// Copyright 2026 The Sentigraph Authors.
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

#include "sentigraph/nn/tensor.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace sentigraph::nn {

struct Tensor::Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward;

  void Accumulate(const Matrix &g) {
    if (!requires_grad) return;
    if (!has_grad) {
      grad = g;
      has_grad = true;
    } else {
      grad += g;
    }
  }
};

namespace {

thread_local bool grad_enabled = true;

using Node = Tensor::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor MakeResult(Matrix value, std::vector<NodePtr> parents,
                  std::function<void(Node &)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->is_leaf = false;
  bool needs = false;
  if (grad_enabled) {
    for (const auto &p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void CheckSameShape(const Matrix &a, const Matrix &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Tensor Tensor::Constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::Parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

const Matrix &Tensor::value() const { return node_->value; }
Matrix &Tensor::mutable_value() { return node_->value; }

Matrix Tensor::grad() const {
  if (node_->has_grad) return node_->grad;
  return Matrix::Zero(node_->value.rows(), node_->value.cols());
}

bool Tensor::has_grad() const { return node_->has_grad; }

void Tensor::ZeroGrad() {
  node_->has_grad = false;
  node_->grad.resize(0, 0);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::Backward() const {
  if (value().size() != 1) {
    throw std::invalid_argument("Backward requires a 1x1 tensor");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      Node *p = n->parents[next++].get();
      if (p->requires_grad && !p->is_leaf && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->Accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->has_grad && n->backward) n->backward(*n);
    // Interior gradients are consumed; a second Backward starts clean.
    n->has_grad = false;
    n->grad.resize(0, 0);
  }
}

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }
bool GradEnabled() { return grad_enabled; }

Tensor MatMul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("MatMul: shape mismatch");
  auto pa = a.shared_node(), pb = b.shared_node();
  return MakeResult(a.value() * b.value(), {pa, pb}, [pa, pb](Node &self) {
    if (pa->requires_grad) pa->Accumulate(self.grad * pb->value.transpose());
    if (pb->requires_grad) pb->Accumulate(pa->value.transpose() * self.grad);
  });
}

Tensor Add(const Tensor &a, const Tensor &b) {
  CheckSameShape(a.value(), b.value(), "Add");
  auto pa = a.shared_node(), pb = b.shared_node();
  return MakeResult(a.value() + b.value(), {pa, pb}, [pa, pb](Node &self) {
    pa->Accumulate(self.grad);
    pb->Accumulate(self.grad);
  });
}

Tensor Sub(const Tensor &a, const Tensor &b) {
  CheckSameShape(a.value(), b.value(), "Sub");
  auto pa = a.shared_node(), pb = b.shared_node();
  return MakeResult(a.value() - b.value(), {pa, pb}, [pa, pb](Node &self) {
    pa->Accumulate(self.grad);
    if (pb->requires_grad) pb->Accumulate(-self.grad);
  });
}

Tensor AddRow(const Tensor &a, const Tensor &row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("AddRow: shape mismatch");
  }
  auto pa = a.shared_node(), pr = row.shared_node();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return MakeResult(std::move(out), {pa, pr}, [pa, pr](Node &self) {
    pa->Accumulate(self.grad);
    if (pr->requires_grad) pr->Accumulate(self.grad.colwise().sum());
  });
}

Tensor Scale(const Tensor &a, double factor) {
  auto pa = a.shared_node();
  return MakeResult(a.value() * factor, {pa}, [pa, factor](Node &self) {
    pa->Accumulate(self.grad * factor);
  });
}

Tensor Hadamard(const Tensor &a, const Tensor &b) {
  CheckSameShape(a.value(), b.value(), "Hadamard");
  auto pa = a.shared_node(), pb = b.shared_node();
  return MakeResult(a.value().cwiseProduct(b.value()), {pa, pb},
                    [pa, pb](Node &self) {
                      if (pa->requires_grad) pa->Accumulate(self.grad.cwiseProduct(pb->value));
                      if (pb->requires_grad) pb->Accumulate(self.grad.cwiseProduct(pa->value));
                    });
}

Tensor Transpose(const Tensor &a) {
  auto pa = a.shared_node();
  return MakeResult(a.value().transpose(), {pa}, [pa](Node &self) {
    pa->Accumulate(self.grad.transpose());
  });
}

Tensor OuterSum(const Tensor &col, const Tensor &row) {
  if (col.cols() != 1 || row.rows() != 1) {
    throw std::invalid_argument("OuterSum: expects column and row vectors");
  }
  auto pc = col.shared_node(), pr = row.shared_node();
  Matrix out = col.value().replicate(1, row.cols()).rowwise() +
               row.value().row(0);
  return MakeResult(std::move(out), {pc, pr}, [pc, pr](Node &self) {
    if (pc->requires_grad) pc->Accumulate(self.grad.rowwise().sum());
    if (pr->requires_grad) pr->Accumulate(self.grad.colwise().sum());
  });
}

Tensor SoftmaxRows(const Tensor &a, const BoolMatrix *mask) {
  const Matrix &x = a.value();
  if (mask && (mask->rows() != x.rows() || mask->cols() != x.cols())) {
    throw std::invalid_argument("SoftmaxRows: mask shape mismatch");
  }
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!mask || (*mask)(i, j)) max = std::max(max, x(i, j));
    }
    if (!std::isfinite(max)) {
      throw std::invalid_argument("SoftmaxRows: row has no admissible entry");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!mask || (*mask)(i, j)) {
        y(i, j) = std::exp(x(i, j) - max);
        total += y(i, j);
      }
    }
    y.row(i) /= total;
  }
  auto pa = a.shared_node();
  Matrix saved = y;
  return MakeResult(std::move(y), {pa}, [pa, saved](Node &self) {
    Matrix inner = self.grad.cwiseProduct(saved).rowwise().sum();
    Matrix dx = saved.cwiseProduct(self.grad - inner.replicate(1, saved.cols()));
    pa->Accumulate(dx);
  });
}

Tensor LeakyRelu(const Tensor &a, double slope) {
  const Matrix &x = a.value();
  Matrix y = x.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
  auto pa = a.shared_node();
  return MakeResult(std::move(y), {pa}, [pa, slope](Node &self) {
    Matrix d = pa->value.unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
    pa->Accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor Elu(const Tensor &a) {
  Matrix y = a.value().unaryExpr(
      [](double v) { return v > 0 ? v : std::expm1(v); });
  auto pa = a.shared_node();
  return MakeResult(std::move(y), {pa}, [pa](Node &self) {
    Matrix d = pa->value.unaryExpr(
        [](double v) { return v > 0 ? 1.0 : std::exp(v); });
    pa->Accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor Gelu(const Tensor &a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  Matrix y = a.value().unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  });
  auto pa = a.shared_node();
  return MakeResult(std::move(y), {pa}, [pa](Node &self) {
    Matrix d = pa->value.unaryExpr([](double v) {
      const double t = std::tanh(kC * (v + kA * v * v * v));
      return 0.5 * (1.0 + t) +
             0.5 * v * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
    });
    pa->Accumulate(self.grad.cwiseProduct(d));
  });
}

Tensor LayerNormRows(const Tensor &x, const Tensor &gain, const Tensor &bias,
                     double eps) {
  const Matrix &in = x.value();
  const Eigen::Index n = in.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 ||
      bias.cols() != n) {
    throw std::invalid_argument("LayerNormRows: shape mismatch");
  }
  Matrix xhat(in.rows(), n);
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    const double mean = in.row(i).mean();
    const double var = (in.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (in.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out = out.rowwise() + bias.value().row(0);
  auto px = x.shared_node(), pg = gain.shared_node(), pb = bias.shared_node();
  return MakeResult(
      std::move(out), {px, pg, pb}, [px, pg, pb, xhat, inv_std](Node &self) {
        const Matrix &g = self.grad;
        if (pg->requires_grad) pg->Accumulate(g.cwiseProduct(xhat).colwise().sum());
        if (pb->requires_grad) pb->Accumulate(g.colwise().sum());
        if (px->requires_grad) {
          const double n = static_cast<double>(xhat.cols());
          Matrix dxhat = (g.array().rowwise() * pg->value.row(0).array()).matrix();
          Matrix dx(xhat.rows(), xhat.cols());
          for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
            const double m1 = dxhat.row(i).sum() / n;
            const double m2 = dxhat.row(i).dot(xhat.row(i)) / n;
            dx.row(i) = inv_std(i) *
                        (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
          }
          px->Accumulate(dx);
        }
      });
}

Tensor SliceRows(const Tensor &a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("SliceRows");
  }
  auto pa = a.shared_node();
  return MakeResult(a.value().middleRows(start, count), {pa},
                    [pa, start, count](Node &self) {
                      Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
                      g.middleRows(start, count) = self.grad;
                      pa->Accumulate(g);
                    });
}

Tensor SliceCols(const Tensor &a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("SliceCols");
  }
  auto pa = a.shared_node();
  return MakeResult(a.value().middleCols(start, count), {pa},
                    [pa, start, count](Node &self) {
                      Matrix g = Matrix::Zero(pa->value.rows(), pa->value.cols());
                      g.middleCols(start, count) = self.grad;
                      pa->Accumulate(g);
                    });
}

Tensor ConcatRows(const std::vector<Tensor> &parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const auto &p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("ConcatRows: width mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto &p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    parents.push_back(p.shared_node());
    offsets.push_back(at);
    at += p.rows();
  }
  auto captured = parents;
  return MakeResult(std::move(out), std::move(parents),
                    [captured, offsets](Node &self) {
                      for (size_t i = 0; i < captured.size(); ++i) {
                        auto &p = captured[i];
                        if (p->requires_grad) {
                          p->Accumulate(self.grad.middleRows(offsets[i], p->value.rows()));
                        }
                      }
                    });
}

Tensor ConcatCols(const std::vector<Tensor> &parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no parts");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto &p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("ConcatCols: height mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto &p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    parents.push_back(p.shared_node());
    offsets.push_back(at);
    at += p.cols();
  }
  auto captured = parents;
  return MakeResult(std::move(out), std::move(parents),
                    [captured, offsets](Node &self) {
                      for (size_t i = 0; i < captured.size(); ++i) {
                        auto &p = captured[i];
                        if (p->requires_grad) {
                          p->Accumulate(self.grad.middleCols(offsets[i], p->value.cols()));
                        }
                      }
                    });
}

Tensor Gather(const Tensor &table, const std::vector<int> &ids) {
  const Matrix &t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw std::out_of_range("Gather: id");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  auto pt = table.shared_node();
  return MakeResult(std::move(out), {pt}, [pt, ids](Node &self) {
    Matrix g = Matrix::Zero(pt->value.rows(), pt->value.cols());
    for (size_t i = 0; i < ids.size(); ++i) {
      g.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
    pt->Accumulate(g);
  });
}

Tensor Sum(const Tensor &a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  auto pa = a.shared_node();
  return MakeResult(std::move(out), {pa}, [pa](Node &self) {
    pa->Accumulate(Matrix::Constant(pa->value.rows(), pa->value.cols(),
                                    self.grad(0, 0)));
  });
}

Tensor MeanRows(const Tensor &a) {
  if (a.rows() == 0) throw std::invalid_argument("MeanRows: no rows");
  const double n = static_cast<double>(a.rows());
  auto pa = a.shared_node();
  return MakeResult(a.value().colwise().mean(), {pa}, [pa, n](Node &self) {
    pa->Accumulate(self.grad.replicate(pa->value.rows(), 1) / n);
  });
}

Tensor CrossEntropy(const Tensor &logits, const std::vector<int> &targets) {
  const Matrix &x = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) {
    throw std::invalid_argument("CrossEntropy: one target per row");
  }
  Matrix probs = Matrix::Zero(x.rows(), x.cols());
  double total = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0) continue;
    if (t >= x.cols()) throw std::out_of_range("CrossEntropy: target");
    const double max = x.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (x.row(i).array() - max).exp();
    const double z = e.sum();
    probs.row(i) = e / z;
    total += (max + std::log(z)) - x(i, t);
    ++count;
  }
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? total / count : 0.0;
  auto pl = logits.shared_node();
  return MakeResult(std::move(out), {pl},
                    [pl, probs, targets, count](Node &self) {
                      if (count == 0) return;
                      Matrix g = probs;
                      for (Eigen::Index i = 0; i < g.rows(); ++i) {
                        const int t = targets[static_cast<size_t>(i)];
                        if (t >= 0) g(i, t) -= 1.0;
                      }
                      pl->Accumulate(g * (self.grad(0, 0) / count));
                    });
}

Tensor BinaryCrossEntropyWithLogit(const Tensor &logit, double target) {
  if (logit.value().size() != 1) {
    throw std::invalid_argument("BinaryCrossEntropyWithLogit: expects 1x1");
  }
  const double z = logit.value()(0, 0);
  Matrix out(1, 1);
  out(0, 0) = std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
  auto pl = logit.shared_node();
  return MakeResult(std::move(out), {pl}, [pl, z, target](Node &self) {
    const double sigmoid = 1.0 / (1.0 + std::exp(-z));
    pl->Accumulate(Matrix::Constant(1, 1, (sigmoid - target) * self.grad(0, 0)));
  });
}

Tensor GatedResidual(const Tensor &residual, const Tensor &payload,
                     const Tensor &gate) {
  CheckSameShape(residual.value(), payload.value(), "GatedResidual");
  if (gate.value().size() != 1) {
    throw std::invalid_argument("GatedResidual: gate must be 1x1");
  }
  const double g = gate.value()(0, 0);
  Matrix out = g == 0.0 ? residual.value()
                        : Matrix(residual.value() + g * payload.value());
  auto pr = residual.shared_node(), pp = payload.shared_node(),
       pg = gate.shared_node();
  return MakeResult(std::move(out), {pr, pp, pg}, [pr, pp, pg](Node &self) {
    const double gv = pg->value(0, 0);
    pr->Accumulate(self.grad);
    if (pp->requires_grad) pp->Accumulate(self.grad * gv);
    if (pg->requires_grad) {
      pg->Accumulate(Matrix::Constant(1, 1, self.grad.cwiseProduct(pp->value).sum()));
    }
  });
}

}  // namespace sentigraph::nn
