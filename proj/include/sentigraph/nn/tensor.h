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

#ifndef SENTIGRAPH_NN_TENSOR_H_
#define SENTIGRAPH_NN_TENSOR_H_

// Minimal reverse-mode automatic differentiation over dense double matrices.
// Every value is a 2-D Eigen matrix; row vectors are 1 x n. A Tensor is a
// cheap handle onto a shared node; operations record a backward closure only
// when at least one input requires a gradient and recording is enabled.

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace sentigraph::nn {

using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

class Tensor {
 public:
  Tensor() = default;

  static Tensor Constant(Matrix value);
  static Tensor Parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix &value() const;
  // Only meaningful for parameters; used by optimizers and tests.
  Matrix &mutable_value();
  // Zero matrix of the value's shape when no gradient has been accumulated.
  Matrix grad() const;
  bool has_grad() const;
  void ZeroGrad();
  bool requires_grad() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  // Seeds d(self)/d(self) = 1 for a 1x1 tensor and accumulates gradients
  // into every reachable parameter.
  void Backward() const;

  struct Node;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<Node> &shared_node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables gradient recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

Tensor MatMul(const Tensor &a, const Tensor &b);
Tensor Add(const Tensor &a, const Tensor &b);
Tensor Sub(const Tensor &a, const Tensor &b);
// a (n x m) + row (1 x m) broadcast over rows.
Tensor AddRow(const Tensor &a, const Tensor &row);
Tensor Scale(const Tensor &a, double factor);
Tensor Hadamard(const Tensor &a, const Tensor &b);
Tensor Transpose(const Tensor &a);
// out(i, j) = col(i, 0) + row(0, j).
Tensor OuterSum(const Tensor &col, const Tensor &row);
// Row-wise softmax. Entries where `mask` is false get probability 0; every
// row must keep at least one entry.
Tensor SoftmaxRows(const Tensor &a, const BoolMatrix *mask = nullptr);
Tensor LeakyRelu(const Tensor &a, double slope);
Tensor Elu(const Tensor &a);
// Tanh approximation of GELU.
Tensor Gelu(const Tensor &a);
Tensor LayerNormRows(const Tensor &x, const Tensor &gain, const Tensor &bias,
                     double eps = 1e-5);
Tensor SliceRows(const Tensor &a, Eigen::Index start, Eigen::Index count);
Tensor SliceCols(const Tensor &a, Eigen::Index start, Eigen::Index count);
Tensor ConcatRows(const std::vector<Tensor> &parts, Eigen::Index cols);
Tensor ConcatCols(const std::vector<Tensor> &parts);
// Rows of `table` selected by `ids`.
Tensor Gather(const Tensor &table, const std::vector<int> &ids);
Tensor Sum(const Tensor &a);
Tensor MeanRows(const Tensor &a);
// Mean token cross-entropy of row-wise logits; targets < 0 are ignored.
// Returns 0 when every target is ignored.
Tensor CrossEntropy(const Tensor &logits, const std::vector<int> &targets);
// Binary cross-entropy on a 1x1 logit.
Tensor BinaryCrossEntropyWithLogit(const Tensor &logit, double target);
// residual + gate * payload, with gate a 1x1 tensor. When gate is exactly
// zero the forward value is a copy of residual.
Tensor GatedResidual(const Tensor &residual, const Tensor &payload,
                     const Tensor &gate);

}  // namespace sentigraph::nn

#endif  // SENTIGRAPH_NN_TENSOR_H_
