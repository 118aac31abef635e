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

#include "scenetts/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "scenetts/errors.hpp"

namespace scenetts {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ValidationError("shape with non-positive dim: " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void TensorNode::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

void TensorNode::accumulate(const double* g, std::size_t n) {
  ensure_grad();
  for (std::size_t i = 0; i < n; ++i) grad[i] += g[i];
}

Tensor Tensor::leaf(const Shape& shape, bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->shape = shape;
  node->value.assign(shape_numel(shape), 0.0);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::from_values(std::vector<double> values, const Shape& shape,
                           bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw ValidationError("from_values: " + std::to_string(values.size()) +
                          " values for shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::scalar(double v) { return from_values({v}, {1}); }

Tensor Tensor::zeros(const Shape& shape) { return leaf(shape, false); }

std::vector<double> Tensor::grad() const {
  if (node_->grad.size() == node_->value.size()) return node_->grad;
  return std::vector<double>(node_->value.size(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw RuntimeFault("item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw RuntimeFault("backward() expects a scalar loss, got " + shape_str(loss.shape()));
  }
  // Topological order by iterative DFS.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      TensorNode* parent = node->parents[idx].get();
      ++idx;
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward_fn && node->grad.size() == node->value.size()) {
      node->backward_fn();
    }
  }
}

namespace {

Tensor make_node(const Shape& shape, std::vector<std::shared_ptr<TensorNode>> parents) {
  auto node = std::make_shared<TensorNode>();
  node->shape = shape;
  node->value.resize(shape_numel(shape));
  for (const auto& p : parents) {
    if (p->requires_grad) node->requires_grad = true;
  }
  node->parents = std::move(parents);
  return Tensor(node);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw RuntimeFault(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                       " vs " + shape_str(b.shape()));
  }
}

void check_2d(const Tensor& a, const char* op) {
  if (a.shape().size() != 2) {
    throw RuntimeFault(std::string(op) + ": expected 2-D tensor, got " + shape_str(a.shape()));
  }
}

// Unary elementwise: y = f(x); dx += dy * dfdx(x, y).
template <class F, class G>
Tensor unary(const Tensor& a, F f, G dfdx) {
  Tensor out = make_node(a.shape(), {a.node()});
  const auto& x = a.value();
  auto& y = out.value();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, dfdx]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < an->value.size(); ++i) {
        an->grad[i] += on->grad[i] * dfdx(an->value[i], on->value[i]);
      }
    };
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = make_node(a.shape(), {a.node(), b.node()});
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.value()[i] = a.value()[i] + b.value()[i];
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on]() {
      if (an->requires_grad) an->accumulate(on->grad.data(), on->grad.size());
      if (bn->requires_grad) bn->accumulate(on->grad.data(), on->grad.size());
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = make_node(a.shape(), {a.node(), b.node()});
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.value()[i] = a.value()[i] - b.value()[i];
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on]() {
      if (an->requires_grad) an->accumulate(on->grad.data(), on->grad.size());
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] -= on->grad[i];
      }
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = make_node(a.shape(), {a.node(), b.node()});
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.value()[i] = a.value()[i] * b.value()[i];
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          an->grad[i] += on->grad[i] * bn->value[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i)
          bn->grad[i] += on->grad[i] * an->value[i];
      }
    };
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
               [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor tanh_t(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Tensor exp_t(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Tensor log_t(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Tensor abs_t(const Tensor& a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor log_clamp(const Tensor& a, double floor) {
  return unary(a, [floor](double x) { return std::log(std::max(x, floor)); },
               [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Tensor magnitude(const Tensor& re, const Tensor& im) {
  check_same_shape(re, im, "magnitude");
  Tensor out = make_node(re.shape(), {re.node(), im.node()});
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.value()[i] = std::hypot(re.value()[i], im.value()[i]);
  }
  if (out.requires_grad()) {
    auto rn = re.node(), in = im.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [rn, in, on]() {
      if (rn->requires_grad) rn->ensure_grad();
      if (in->requires_grad) in->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        const double y = on->value[i];
        if (y <= 0.0) continue;
        const double g = on->grad[i] / y;
        if (rn->requires_grad) rn->grad[i] += g * rn->value[i];
        if (in->requires_grad) in->grad[i] += g * in->value[i];
      }
    };
  }
  return out;
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_numel(shape) != a.numel()) {
    throw RuntimeFault("reshape: numel mismatch " + shape_str(a.shape()) + " -> " +
                       shape_str(shape));
  }
  Tensor out = make_node(shape, {a.node()});
  out.value() = a.value();
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on]() { an->accumulate(on->grad.data(), on->grad.size()); };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  check_2d(a, "transpose");
  const int m = a.shape()[0], n = a.shape()[1];
  Tensor out = make_node({n, m}, {a.node()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.value()[static_cast<std::size_t>(j) * m + i] =
          a.value()[static_cast<std::size_t>(i) * n + j];
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, m, n]() {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          an->grad[static_cast<std::size_t>(i) * n + j] +=
              on->grad[static_cast<std::size_t>(j) * m + i];
    };
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  check_2d(a, "slice_rows");
  const int m = a.shape()[0], n = a.shape()[1];
  if (r0 < 0 || r1 > m || r0 >= r1) throw RuntimeFault("slice_rows: bad range");
  Tensor out = make_node({r1 - r0, n}, {a.node()});
  std::copy(a.value().begin() + static_cast<std::size_t>(r0) * n,
            a.value().begin() + static_cast<std::size_t>(r1) * n, out.value().begin());
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, r0, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i) {
        an->grad[static_cast<std::size_t>(r0) * n + i] += on->grad[i];
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  check_2d(a, "slice_cols");
  const int m = a.shape()[0], n = a.shape()[1];
  if (c0 < 0 || c1 > n || c0 >= c1) throw RuntimeFault("slice_cols: bad range");
  const int w = c1 - c0;
  Tensor out = make_node({m, w}, {a.node()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j)
      out.value()[static_cast<std::size_t>(i) * w + j] =
          a.value()[static_cast<std::size_t>(i) * n + c0 + j];
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, m, n, c0, w]() {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          an->grad[static_cast<std::size_t>(i) * n + c0 + j] +=
              on->grad[static_cast<std::size_t>(i) * w + j];
    };
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  check_2d(a, "concat_rows");
  check_2d(b, "concat_rows");
  if (a.shape()[1] != b.shape()[1]) throw RuntimeFault("concat_rows: column mismatch");
  const int ma = a.shape()[0], mb = b.shape()[0], n = a.shape()[1];
  Tensor out = make_node({ma + mb, n}, {a.node(), b.node()});
  std::copy(a.value().begin(), a.value().end(), out.value().begin());
  std::copy(b.value().begin(), b.value().end(),
            out.value().begin() + static_cast<std::size_t>(ma) * n);
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on, ma, n]() {
      const std::size_t na = static_cast<std::size_t>(ma) * n;
      if (an->requires_grad) an->accumulate(on->grad.data(), na);
      if (bn->requires_grad) bn->accumulate(on->grad.data() + na, on->grad.size() - na);
    };
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_2d(a, "concat_cols");
  check_2d(b, "concat_cols");
  if (a.shape()[0] != b.shape()[0]) throw RuntimeFault("concat_cols: row mismatch");
  const int m = a.shape()[0], na = a.shape()[1], nb = b.shape()[1];
  const int n = na + nb;
  Tensor out = make_node({m, n}, {a.node(), b.node()});
  for (int i = 0; i < m; ++i) {
    std::copy(a.value().begin() + static_cast<std::size_t>(i) * na,
              a.value().begin() + static_cast<std::size_t>(i + 1) * na,
              out.value().begin() + static_cast<std::size_t>(i) * n);
    std::copy(b.value().begin() + static_cast<std::size_t>(i) * nb,
              b.value().begin() + static_cast<std::size_t>(i + 1) * nb,
              out.value().begin() + static_cast<std::size_t>(i) * n + na);
  }
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on, m, na, nb, n]() {
      if (an->requires_grad) an->ensure_grad();
      if (bn->requires_grad) bn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        if (an->requires_grad) {
          for (int j = 0; j < na; ++j)
            an->grad[static_cast<std::size_t>(i) * na + j] +=
                on->grad[static_cast<std::size_t>(i) * n + j];
        }
        if (bn->requires_grad) {
          for (int j = 0; j < nb; ++j)
            bn->grad[static_cast<std::size_t>(i) * nb + j] +=
                on->grad[static_cast<std::size_t>(i) * n + na + j];
        }
      }
    };
  }
  return out;
}

Tensor concat_vec(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1) {
    throw RuntimeFault("concat_vec: expected 1-D tensors");
  }
  const int na = a.shape()[0], nb = b.shape()[0];
  Tensor out = make_node({na + nb}, {a.node(), b.node()});
  std::copy(a.value().begin(), a.value().end(), out.value().begin());
  std::copy(b.value().begin(), b.value().end(), out.value().begin() + na);
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on, na]() {
      if (an->requires_grad) an->accumulate(on->grad.data(), static_cast<std::size_t>(na));
      if (bn->requires_grad)
        bn->accumulate(on->grad.data() + na, on->grad.size() - static_cast<std::size_t>(na));
    };
  }
  return out;
}

Tensor permute_rows(const Tensor& a, const std::vector<int>& perm) {
  check_2d(a, "permute_rows");
  const int m = a.shape()[0], n = a.shape()[1];
  if (static_cast<int>(perm.size()) != m) throw RuntimeFault("permute_rows: size mismatch");
  Tensor out = make_node(a.shape(), {a.node()});
  for (int i = 0; i < m; ++i) {
    std::copy(a.value().begin() + static_cast<std::size_t>(perm[i]) * n,
              a.value().begin() + static_cast<std::size_t>(perm[i] + 1) * n,
              out.value().begin() + static_cast<std::size_t>(i) * n);
  }
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    auto p = perm;
    out.node()->backward_fn = [an, on, p, n]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < p.size(); ++i)
        for (int j = 0; j < n; ++j)
          an->grad[static_cast<std::size_t>(p[i]) * n + j] +=
              on->grad[i * static_cast<std::size_t>(n) + j];
    };
  }
  return out;
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  check_2d(table, "gather_rows");
  const int v = table.shape()[0], c = table.shape()[1];
  for (int id : ids) {
    if (id < 0 || id >= v) throw RuntimeFault("gather_rows: index out of range");
  }
  Tensor out = make_node({static_cast<int>(ids.size()), c}, {table.node()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy(table.value().begin() + static_cast<std::size_t>(ids[i]) * c,
              table.value().begin() + static_cast<std::size_t>(ids[i] + 1) * c,
              out.value().begin() + i * c);
  }
  if (out.requires_grad()) {
    auto tn = table.node();
    TensorNode* on = out.node().get();
    auto idx = ids;
    out.node()->backward_fn = [tn, on, idx, c]() {
      tn->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < c; ++j)
          tn->grad[static_cast<std::size_t>(idx[i]) * c + j] +=
              on->grad[i * static_cast<std::size_t>(c) + j];
    };
  }
  return out;
}

Tensor gather_flat(const Tensor& x, const std::vector<std::int64_t>& idx) {
  const std::int64_t n = static_cast<std::int64_t>(x.numel());
  for (std::int64_t i : idx) {
    if (i < 0 || i >= n) throw RuntimeFault("gather_flat: index out of range");
  }
  Tensor out = make_node({static_cast<int>(idx.size())}, {x.node()});
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.value()[i] = x.value()[static_cast<std::size_t>(idx[i])];
  if (out.requires_grad()) {
    auto xn = x.node();
    TensorNode* on = out.node().get();
    auto ix = idx;
    out.node()->backward_fn = [xn, on, ix]() {
      xn->ensure_grad();
      for (std::size_t i = 0; i < ix.size(); ++i)
        xn->grad[static_cast<std::size_t>(ix[i])] += on->grad[i];
    };
  }
  return out;
}

Tensor detach(const Tensor& a) {
  auto node = std::make_shared<TensorNode>();
  node->shape = a.shape();
  node->value = a.value();
  node->requires_grad = false;
  return Tensor(node);
}

Tensor add_rowwise(const Tensor& x, const Tensor& v) {
  check_2d(x, "add_rowwise");
  const int m = x.shape()[0], n = x.shape()[1];
  if (v.shape() != Shape{n}) throw RuntimeFault("add_rowwise: vector size mismatch");
  Tensor out = make_node(x.shape(), {x.node(), v.node()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.value()[static_cast<std::size_t>(i) * n + j] =
          x.value()[static_cast<std::size_t>(i) * n + j] + v.value()[j];
  if (out.requires_grad()) {
    auto xn = x.node(), vn = v.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, vn, on, m, n]() {
      if (xn->requires_grad) xn->accumulate(on->grad.data(), on->grad.size());
      if (vn->requires_grad) {
        vn->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            vn->grad[j] += on->grad[static_cast<std::size_t>(i) * n + j];
      }
    };
  }
  return out;
}

Tensor add_colwise(const Tensor& x, const Tensor& v) {
  check_2d(x, "add_colwise");
  const int m = x.shape()[0], n = x.shape()[1];
  if (v.shape() != Shape{m}) throw RuntimeFault("add_colwise: vector size mismatch");
  Tensor out = make_node(x.shape(), {x.node(), v.node()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.value()[static_cast<std::size_t>(i) * n + j] =
          x.value()[static_cast<std::size_t>(i) * n + j] + v.value()[i];
  if (out.requires_grad()) {
    auto xn = x.node(), vn = v.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, vn, on, m, n]() {
      if (xn->requires_grad) xn->accumulate(on->grad.data(), on->grad.size());
      if (vn->requires_grad) {
        vn->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            vn->grad[i] += on->grad[static_cast<std::size_t>(i) * n + j];
      }
    };
  }
  return out;
}

Tensor mul_rowwise(const Tensor& x, const Tensor& v) {
  check_2d(x, "mul_rowwise");
  const int m = x.shape()[0], n = x.shape()[1];
  if (v.shape() != Shape{n}) throw RuntimeFault("mul_rowwise: vector size mismatch");
  Tensor out = make_node(x.shape(), {x.node(), v.node()});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.value()[static_cast<std::size_t>(i) * n + j] =
          x.value()[static_cast<std::size_t>(i) * n + j] * v.value()[j];
  if (out.requires_grad()) {
    auto xn = x.node(), vn = v.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, vn, on, m, n]() {
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            xn->grad[static_cast<std::size_t>(i) * n + j] +=
                on->grad[static_cast<std::size_t>(i) * n + j] * vn->value[j];
      }
      if (vn->requires_grad) {
        vn->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            vn->grad[j] += on->grad[static_cast<std::size_t>(i) * n + j] *
                           xn->value[static_cast<std::size_t>(i) * n + j];
      }
    };
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_node({1}, {a.node()});
  double acc = 0.0;
  for (double v : a.value()) acc += v;
  out.value()[0] = acc;
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on]() {
      an->ensure_grad();
      const double g = on->grad[0];
      for (double& d : an->grad) d += g;
    };
  }
  return out;
}

Tensor mean(const Tensor& a) { return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean_over_rows(const Tensor& a) {
  check_2d(a, "mean_over_rows");
  const int m = a.shape()[0], n = a.shape()[1];
  Tensor out = make_node({n}, {a.node()});
  std::fill(out.value().begin(), out.value().end(), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.value()[j] += a.value()[static_cast<std::size_t>(i) * n + j];
  for (int j = 0; j < n; ++j) out.value()[j] /= m;
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, m, n]() {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          an->grad[static_cast<std::size_t>(i) * n + j] += on->grad[j] / m;
    };
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const int m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw RuntimeFault("matmul: inner dim mismatch " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
  }
  Tensor out = make_node({m, n}, {a.node(), b.node()});
  MutMap(out.value().data(), m, n).noalias() =
      ConstMap(a.value().data(), m, k) * ConstMap(b.value().data(), k, n);
  if (out.requires_grad()) {
    auto an = a.node(), bn = b.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, bn, on, m, n, k]() {
      ConstMap dy(on->grad.data(), m, n);
      if (an->requires_grad) {
        an->ensure_grad();
        MutMap(an->grad.data(), m, k).noalias() += dy * ConstMap(bn->value.data(), k, n).transpose();
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        MutMap(bn->grad.data(), k, n).noalias() += ConstMap(an->value.data(), m, k).transpose() * dy;
      }
    };
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out = matmul(x, w);
  if (b.defined()) out = add_rowwise(out, b);
  return out;
}

Tensor row_softmax(const Tensor& a) {
  check_2d(a, "row_softmax");
  const int m = a.shape()[0], n = a.shape()[1];
  Tensor out = make_node(a.shape(), {a.node()});
  for (int i = 0; i < m; ++i) {
    const double* row = a.value().data() + static_cast<std::size_t>(i) * n;
    double* orow = out.value().data() + static_cast<std::size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      z += orow[j];
    }
    for (int j = 0; j < n; ++j) orow[j] /= z;
  }
  if (out.requires_grad()) {
    auto an = a.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [an, on, m, n]() {
      an->ensure_grad();
      for (int i = 0; i < m; ++i) {
        const double* y = on->value.data() + static_cast<std::size_t>(i) * n;
        const double* dy = on->grad.data() + static_cast<std::size_t>(i) * n;
        double* dx = an->grad.data() + static_cast<std::size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += y[j] * dy[j];
        for (int j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
      }
    };
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, int target) {
  if (logits.shape().size() != 1) {
    throw RuntimeFault("softmax_cross_entropy: expected 1-D logits");
  }
  const int k = logits.shape()[0];
  if (target < 0 || target >= k) {
    throw ValidationError("softmax_cross_entropy: target " + std::to_string(target) +
                          " out of range for K=" + std::to_string(k));
  }
  Tensor out = make_node({1}, {logits.node()});
  const auto& l = logits.value();
  double mx = l[0];
  for (int j = 1; j < k; ++j) mx = std::max(mx, l[j]);
  double z = 0.0;
  for (int j = 0; j < k; ++j) z += std::exp(l[j] - mx);
  const double lse = mx + std::log(z);
  out.value()[0] = lse - l[target];
  if (out.requires_grad()) {
    auto ln = logits.node();
    TensorNode* on = out.node().get();
    std::vector<double> probs(k);
    for (int j = 0; j < k; ++j) probs[j] = std::exp(l[j] - lse);
    out.node()->backward_fn = [ln, on, probs, target]() {
      ln->ensure_grad();
      const double g = on->grad[0];
      for (std::size_t j = 0; j < probs.size(); ++j) {
        ln->grad[j] += g * (probs[j] - (static_cast<int>(j) == target ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  check_2d(x, "layer_norm");
  const int m = x.shape()[0], n = x.shape()[1];
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n}) {
    throw RuntimeFault("layer_norm: gain/bias size mismatch");
  }
  Tensor out = make_node(x.shape(), {x.node(), gain.node(), bias.node()});
  std::vector<double> inv_std(m), norm(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* row = x.value().data() + static_cast<std::size_t>(i) * n;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += row[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= n;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) {
      const double y = (row[j] - mu) * inv_std[i];
      norm[static_cast<std::size_t>(i) * n + j] = y;
      out.value()[static_cast<std::size_t>(i) * n + j] = y * gain.value()[j] + bias.value()[j];
    }
  }
  if (out.requires_grad()) {
    auto xn = x.node(), gn = gain.node(), bn = bias.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, gn, bn, on, inv_std, norm, m, n]() {
      for (int i = 0; i < m; ++i) {
        const double* dy = on->grad.data() + static_cast<std::size_t>(i) * n;
        const double* y = norm.data() + static_cast<std::size_t>(i) * n;
        if (gn->requires_grad) {
          gn->ensure_grad();
          for (int j = 0; j < n; ++j) gn->grad[j] += dy[j] * y[j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int j = 0; j < n; ++j) bn->grad[j] += dy[j];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          double mean_dg = 0.0, mean_dgy = 0.0;
          for (int j = 0; j < n; ++j) {
            const double dg = dy[j] * gn->value[j];
            mean_dg += dg;
            mean_dgy += dg * y[j];
          }
          mean_dg /= n;
          mean_dgy /= n;
          double* dx = xn->grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            const double dg = dy[j] * gn->value[j];
            dx[j] += inv_std[i] * (dg - mean_dg - y[j] * mean_dgy);
          }
        }
      }
    };
  }
  return out;
}

Tensor l2_normalize(const Tensor& x) {
  if (x.shape().size() != 1) throw RuntimeFault("l2_normalize: expected 1-D tensor");
  const int n = x.shape()[0];
  double r2 = 0.0;
  for (double v : x.value()) r2 += v * v;
  const double r = std::max(std::sqrt(r2), 1e-12);
  Tensor out = make_node(x.shape(), {x.node()});
  for (int j = 0; j < n; ++j) out.value()[j] = x.value()[j] / r;
  if (out.requires_grad()) {
    auto xn = x.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, on, r, n]() {
      xn->ensure_grad();
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += on->value[j] * on->grad[j];
      for (int j = 0; j < n; ++j) {
        xn->grad[j] += (on->grad[j] - on->value[j] * dot) / r;
      }
    };
  }
  return out;
}

namespace {

struct ConvDims {
  int c_in, t_in, c_out, k, stride, pad, dilation, t_out;
};

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad,
              int dilation) {
  if (x.shape().size() != 2 || w.shape().size() != 3) {
    throw RuntimeFault("conv1d: expected x [C,T], w [Cout,Cin,k]");
  }
  ConvDims d;
  d.c_in = x.shape()[0];
  d.t_in = x.shape()[1];
  d.c_out = w.shape()[0];
  d.k = w.shape()[2];
  d.stride = stride;
  d.pad = pad;
  d.dilation = dilation;
  if (w.shape()[1] != d.c_in) throw RuntimeFault("conv1d: channel mismatch");
  d.t_out = (d.t_in + 2 * pad - dilation * (d.k - 1) - 1) / stride + 1;
  if (d.t_out <= 0) throw RuntimeFault("conv1d: output length <= 0");
  if (b.defined() && b.shape() != Shape{d.c_out}) throw RuntimeFault("conv1d: bias size");

  const int cols = d.c_in * d.k;
  auto im2col = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(d.t_out) * cols, 0.0);
  for (int t = 0; t < d.t_out; ++t) {
    for (int c = 0; c < d.c_in; ++c) {
      for (int j = 0; j < d.k; ++j) {
        const int src = t * stride + j * dilation - pad;
        if (src >= 0 && src < d.t_in) {
          (*im2col)[static_cast<std::size_t>(t) * cols + c * d.k + j] =
              x.value()[static_cast<std::size_t>(c) * d.t_in + src];
        }
      }
    }
  }

  std::vector<std::shared_ptr<TensorNode>> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  Tensor out = make_node({d.c_out, d.t_out}, std::move(parents));

  // [t_out, c_out] = im2col [t_out, cols] * w^T [cols, c_out]
  RowMat om = ConstMap(im2col->data(), d.t_out, cols) *
              ConstMap(w.value().data(), d.c_out, cols).transpose();
  for (int co = 0; co < d.c_out; ++co) {
    const double bias = b.defined() ? b.value()[co] : 0.0;
    for (int t = 0; t < d.t_out; ++t) {
      out.value()[static_cast<std::size_t>(co) * d.t_out + t] = om(t, co) + bias;
    }
  }

  if (out.requires_grad()) {
    auto xn = x.node(), wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, wn, bn, on, im2col, d, cols]() {
      RowMat dy(d.t_out, d.c_out);
      for (int co = 0; co < d.c_out; ++co)
        for (int t = 0; t < d.t_out; ++t)
          dy(t, co) = on->grad[static_cast<std::size_t>(co) * d.t_out + t];
      if (bn && bn->requires_grad) {
        bn->ensure_grad();
        for (int co = 0; co < d.c_out; ++co) bn->grad[co] += dy.col(co).sum();
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        MutMap(wn->grad.data(), d.c_out, cols).noalias() +=
            dy.transpose() * ConstMap(im2col->data(), d.t_out, cols);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        RowMat dcol = dy * ConstMap(wn->value.data(), d.c_out, cols);
        for (int t = 0; t < d.t_out; ++t) {
          for (int c = 0; c < d.c_in; ++c) {
            for (int j = 0; j < d.k; ++j) {
              const int src = t * d.stride + j * d.dilation - d.pad;
              if (src >= 0 && src < d.t_in) {
                xn->grad[static_cast<std::size_t>(c) * d.t_in + src] += dcol(t, c * d.k + j);
              }
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad) {
  if (x.shape().size() != 2 || w.shape().size() != 3) {
    throw RuntimeFault("conv_transpose1d: expected x [Cin,T], w [Cin,Cout,k]");
  }
  const int c_in = x.shape()[0], t_in = x.shape()[1];
  const int c_out = w.shape()[1], k = w.shape()[2];
  if (w.shape()[0] != c_in) throw RuntimeFault("conv_transpose1d: channel mismatch");
  const int t_out = (t_in - 1) * stride + k - 2 * pad;
  if (t_out <= 0) throw RuntimeFault("conv_transpose1d: output length <= 0");
  if (b.defined() && b.shape() != Shape{c_out}) throw RuntimeFault("conv_transpose1d: bias size");

  std::vector<std::shared_ptr<TensorNode>> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  Tensor out = make_node({c_out, t_out}, std::move(parents));

  const int cok = c_out * k;
  // M [t_in, c_out*k] = x^T [t_in, c_in] * w [c_in, c_out*k], then scatter.
  RowMat xt(t_in, c_in);
  for (int c = 0; c < c_in; ++c)
    for (int t = 0; t < t_in; ++t) xt(t, c) = x.value()[static_cast<std::size_t>(c) * t_in + t];
  RowMat m = xt * ConstMap(w.value().data(), c_in, cok);

  std::fill(out.value().begin(), out.value().end(), 0.0);
  for (int t = 0; t < t_in; ++t) {
    for (int co = 0; co < c_out; ++co) {
      for (int j = 0; j < k; ++j) {
        const int dst = t * stride + j - pad;
        if (dst >= 0 && dst < t_out) {
          out.value()[static_cast<std::size_t>(co) * t_out + dst] += m(t, co * k + j);
        }
      }
    }
  }
  if (b.defined()) {
    for (int co = 0; co < c_out; ++co)
      for (int t = 0; t < t_out; ++t)
        out.value()[static_cast<std::size_t>(co) * t_out + t] += b.value()[co];
  }

  if (out.requires_grad()) {
    auto xn = x.node(), wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, wn, bn, on, c_in, t_in, c_out, k, stride, pad, t_out,
                               cok]() {
      if (bn && bn->requires_grad) {
        bn->ensure_grad();
        for (int co = 0; co < c_out; ++co)
          for (int t = 0; t < t_out; ++t)
            bn->grad[co] += on->grad[static_cast<std::size_t>(co) * t_out + t];
      }
      RowMat dm = RowMat::Zero(t_in, cok);
      for (int t = 0; t < t_in; ++t)
        for (int co = 0; co < c_out; ++co)
          for (int j = 0; j < k; ++j) {
            const int dst = t * stride + j - pad;
            if (dst >= 0 && dst < t_out)
              dm(t, co * k + j) = on->grad[static_cast<std::size_t>(co) * t_out + dst];
          }
      if (wn->requires_grad) {
        wn->ensure_grad();
        RowMat xt(t_in, c_in);
        for (int c = 0; c < c_in; ++c)
          for (int t = 0; t < t_in; ++t)
            xt(t, c) = xn->value[static_cast<std::size_t>(c) * t_in + t];
        MutMap(wn->grad.data(), c_in, cok).noalias() += xt.transpose() * dm;
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        RowMat dxt = dm * ConstMap(wn->value.data(), c_in, cok).transpose();
        for (int c = 0; c < c_in; ++c)
          for (int t = 0; t < t_in; ++t)
            xn->grad[static_cast<std::size_t>(c) * t_in + t] += dxt(t, c);
      }
    };
  }
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.shape().size() != 3 || w.shape().size() != 4) {
    throw RuntimeFault("conv2d: expected x [C,H,W], w [Cout,Cin,kh,kw]");
  }
  const int c_in = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int c_out = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  if (w.shape()[1] != c_in) throw RuntimeFault("conv2d: channel mismatch");
  const int h_out = (h + 2 * pad - kh) / stride + 1;
  const int w_out = (wd + 2 * pad - kw) / stride + 1;
  if (h_out <= 0 || w_out <= 0) throw RuntimeFault("conv2d: output dims <= 0");
  if (b.defined() && b.shape() != Shape{c_out}) throw RuntimeFault("conv2d: bias size");

  const int cols = c_in * kh * kw;
  const int pix = h_out * w_out;
  auto im2col = std::make_shared<std::vector<double>>(static_cast<std::size_t>(pix) * cols, 0.0);
  for (int oy = 0; oy < h_out; ++oy) {
    for (int ox = 0; ox < w_out; ++ox) {
      const std::size_t row = static_cast<std::size_t>(oy) * w_out + ox;
      for (int c = 0; c < c_in; ++c) {
        for (int jy = 0; jy < kh; ++jy) {
          const int sy = oy * stride + jy - pad;
          if (sy < 0 || sy >= h) continue;
          for (int jx = 0; jx < kw; ++jx) {
            const int sx = ox * stride + jx - pad;
            if (sx < 0 || sx >= wd) continue;
            (*im2col)[row * cols + (c * kh + jy) * kw + jx] =
                x.value()[(static_cast<std::size_t>(c) * h + sy) * wd + sx];
          }
        }
      }
    }
  }

  std::vector<std::shared_ptr<TensorNode>> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  Tensor out = make_node({c_out, h_out, w_out}, std::move(parents));

  RowMat om = ConstMap(im2col->data(), pix, cols) *
              ConstMap(w.value().data(), c_out, cols).transpose();
  for (int co = 0; co < c_out; ++co) {
    const double bias = b.defined() ? b.value()[co] : 0.0;
    for (int p = 0; p < pix; ++p)
      out.value()[static_cast<std::size_t>(co) * pix + p] = om(p, co) + bias;
  }

  if (out.requires_grad()) {
    auto xn = x.node(), wn = w.node();
    auto bn = b.defined() ? b.node() : nullptr;
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, wn, bn, on, im2col, c_in, h, wd, c_out, kh, kw, stride,
                               pad, h_out, w_out, cols, pix]() {
      RowMat dy(pix, c_out);
      for (int co = 0; co < c_out; ++co)
        for (int p = 0; p < pix; ++p)
          dy(p, co) = on->grad[static_cast<std::size_t>(co) * pix + p];
      if (bn && bn->requires_grad) {
        bn->ensure_grad();
        for (int co = 0; co < c_out; ++co) bn->grad[co] += dy.col(co).sum();
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        MutMap(wn->grad.data(), c_out, cols).noalias() +=
            dy.transpose() * ConstMap(im2col->data(), pix, cols);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        RowMat dcol = dy * ConstMap(wn->value.data(), c_out, cols);
        for (int oy = 0; oy < h_out; ++oy) {
          for (int ox = 0; ox < w_out; ++ox) {
            const std::size_t row = static_cast<std::size_t>(oy) * w_out + ox;
            for (int c = 0; c < c_in; ++c) {
              for (int jy = 0; jy < kh; ++jy) {
                const int sy = oy * stride + jy - pad;
                if (sy < 0 || sy >= h) continue;
                for (int jx = 0; jx < kw; ++jx) {
                  const int sx = ox * stride + jx - pad;
                  if (sx < 0 || sx >= wd) continue;
                  xn->grad[(static_cast<std::size_t>(c) * h + sy) * wd + sx] +=
                      dcol(row, (c * kh + jy) * kw + jx);
                }
              }
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor avg_pool2d(const Tensor& x) {
  if (x.shape().size() != 3) throw RuntimeFault("avg_pool2d: expected [C,H,W]");
  const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int ho = h / 2, wo = w / 2;
  if (ho == 0 || wo == 0) throw RuntimeFault("avg_pool2d: input too small");
  Tensor out = make_node({c, ho, wo}, {x.node()});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ho; ++y)
      for (int xx = 0; xx < wo; ++xx) {
        double acc = 0.0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            acc += x.value()[(static_cast<std::size_t>(ch) * h + 2 * y + dy) * w + 2 * xx + dx];
        out.value()[(static_cast<std::size_t>(ch) * ho + y) * wo + xx] = acc * 0.25;
      }
  if (out.requires_grad()) {
    auto xn = x.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, on, c, h, w, ho, wo]() {
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < ho; ++y)
          for (int xx = 0; xx < wo; ++xx) {
            const double g = 0.25 * on->grad[(static_cast<std::size_t>(ch) * ho + y) * wo + xx];
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx)
                xn->grad[(static_cast<std::size_t>(ch) * h + 2 * y + dy) * w + 2 * xx + dx] += g;
          }
    };
  }
  return out;
}

Tensor global_avg_pool2d(const Tensor& x) {
  if (x.shape().size() != 3) throw RuntimeFault("global_avg_pool2d: expected [C,H,W]");
  const int c = x.shape()[0];
  const int hw = x.shape()[1] * x.shape()[2];
  Tensor out = make_node({c}, {x.node()});
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (int i = 0; i < hw; ++i) acc += x.value()[static_cast<std::size_t>(ch) * hw + i];
    out.value()[ch] = acc / hw;
  }
  if (out.requires_grad()) {
    auto xn = x.node();
    TensorNode* on = out.node().get();
    out.node()->backward_fn = [xn, on, c, hw]() {
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch) {
        const double g = on->grad[ch] / hw;
        for (int i = 0; i < hw; ++i) xn->grad[static_cast<std::size_t>(ch) * hw + i] += g;
      }
    };
  }
  return out;
}

Tensor l1_loss(const Tensor& a, const Tensor& b) { return mean(abs_t(sub(a, b))); }

Tensor mse_loss(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

}  // namespace scenetts
