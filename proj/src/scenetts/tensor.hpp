// Copyright 2026 scenetts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace scenetts {

// Reverse-mode automatic differentiation over dense double tensors.
//
// Graphs are built define-by-run: every op returns a fresh Tensor holding the
// result plus a closure that routes gradients back to its parents. Parameters
// are long-lived leaf tensors; per-step graphs are released when the loss
// tensor goes out of scope. Everything is single-threaded and deterministic.

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
  std::vector<double> value;
  std::vector<double> grad;  // lazily sized on first accumulation
  Shape shape;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backward_fn;

  void accumulate(const double* g, std::size_t n);
  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(const Shape& shape, bool requires_grad = false);
  static Tensor from_values(std::vector<double> values, const Shape& shape,
                            bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor zeros(const Shape& shape);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::vector<double>& value() { return node_->value; }
  const std::vector<double>& value() const { return node_->value; }

  /// Gradient accumulated by the last backward() pass (zeros if untouched).
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  double item() const;

  std::shared_ptr<TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Runs reverse-mode accumulation from a scalar loss.
void backward(const Tensor& loss);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.1);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs_t(const Tensor& a);
/// log(max(x, floor)); zero gradient where clamped.
Tensor log_clamp(const Tensor& a, double floor);
/// sqrt(re^2 + im^2) elementwise; zero gradient at exact zeros.
Tensor magnitude(const Tensor& re, const Tensor& im);

// ---- shape ----
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor transpose(const Tensor& a);                        // [m,n] -> [n,m]
Tensor slice_rows(const Tensor& a, int r0, int r1);       // [m,n] -> [r1-r0,n]
Tensor slice_cols(const Tensor& a, int c0, int c1);       // [m,n] -> [m,c1-c0]
Tensor concat_rows(const Tensor& a, const Tensor& b);     // stack along rows
Tensor concat_cols(const Tensor& a, const Tensor& b);     // stack along columns
Tensor concat_vec(const Tensor& a, const Tensor& b);      // 1-D concat
/// Reorders rows of a [m,n] tensor: out row i = a row perm[i].
Tensor permute_rows(const Tensor& a, const std::vector<int>& perm);
/// out[i,:] = table[ids[i],:]; gradients scatter-add into table rows.
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
/// out[i] = x[idx[i]] over flat storage; gradients scatter-add.
Tensor gather_flat(const Tensor& x, const std::vector<std::int64_t>& idx);
Tensor detach(const Tensor& a);

// ---- broadcast helpers (x is [m,n]) ----
Tensor add_rowwise(const Tensor& x, const Tensor& v);  // x[i,j] + v[j]
Tensor add_colwise(const Tensor& x, const Tensor& v);  // x[i,j] + v[i]
Tensor mul_rowwise(const Tensor& x, const Tensor& v);  // x[i,j] * v[j]

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mean_over_rows(const Tensor& a);  // [m,n] -> [n]

// ---- linear algebra / nn ----
Tensor matmul(const Tensor& a, const Tensor& b);
/// x [m,k] @ w [k,n] (+ bias [n] if defined)
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor row_softmax(const Tensor& a);  // softmax over the last dim of [m,n]
/// Scalar cross-entropy of softmax(logits) against target index.
Tensor softmax_cross_entropy(const Tensor& logits, int target);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor l2_normalize(const Tensor& x);

/// x [Cin,T], w [Cout,Cin,k] (+ bias [Cout]); zero padding.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad, int dilation = 1);
/// x [Cin,T], w [Cin,Cout,k] (+ bias [Cout]); out length = (T-1)*stride + k - 2*pad.
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad);
/// x [Cin,H,W], w [Cout,Cin,kh,kw] (+ bias [Cout]); zero padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
Tensor avg_pool2d(const Tensor& x);         // 2x2, stride 2, floor
Tensor global_avg_pool2d(const Tensor& x);  // [C,H,W] -> [C]

// ---- losses ----
Tensor l1_loss(const Tensor& a, const Tensor& b);   // mean |a-b|
Tensor mse_loss(const Tensor& a, const Tensor& b);  // mean (a-b)^2

}  // namespace scenetts
