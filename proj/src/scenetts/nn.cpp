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

#include "scenetts/nn.hpp"

#include <cmath>
#include <cstring>

#include "scenetts/errors.hpp"

namespace scenetts {

std::vector<Parameter*> Module::parameters() const {
  std::vector<Parameter*> out;
  named_parameters("", out);
  return out;
}

void Module::named_parameters(const std::string& prefix, std::vector<Parameter*>& out) const {
  for (const auto& p : params_) {
    if (!prefix.empty() && p->name.rfind(prefix, 0) != 0) {
      // Names are fully qualified at creation; prefix argument is only used
      // by register_child to namespace children.
    }
    out.push_back(p.get());
  }
  for (const auto& [name, child] : children_) {
    (void)name;
    child->named_parameters(prefix, out);
  }
}

void Module::zero_grads() {
  for (Parameter* p : parameters()) p->tensor.zero_grad();
}

void Module::freeze() {
  for (Parameter* p : parameters()) {
    p->frozen = true;
    p->tensor.node()->requires_grad = false;
  }
}

bool Module::all_frozen() const {
  const auto params = parameters();
  if (params.empty()) return false;
  for (const Parameter* p : params) {
    if (!p->frozen) return false;
  }
  return true;
}

std::uint64_t Module::param_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Parameter* p : parameters()) {
    for (double v : p->tensor.value()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

Tensor Module::make_param(const std::string& name, const Shape& shape) {
  auto p = std::make_shared<Parameter>();
  p->name = name;
  p->tensor = Tensor::leaf(shape, /*requires_grad=*/true);
  params_.push_back(p);
  return p->tensor;
}

void Module::register_child(const std::string& name, Module& m) {
  children_.emplace_back(name, &m);
}

void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (double& v : t.value()) v = rng.uniform(-a, a);
}

void init_zero(Tensor& t) {
  std::fill(t.value().begin(), t.value().end(), 0.0);
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng, bool bias,
               bool zero_init)
    : in_dim(in), out_dim(out) {
  weight = make_param(name + ".weight", {in, out});
  if (zero_init) {
    init_zero(weight);
  } else {
    init_uniform_fan_in(weight, in, rng);
  }
  if (bias) {
    bias_ = make_param(name + ".bias", {out});
    init_zero(bias_);
  }
}

Tensor Linear::forward(const Tensor& x) const { return linear(x, weight, bias_); }

Tensor Linear::forward_vec(const Tensor& x) const {
  return reshape(forward(reshape(x, {1, in_dim})), {out_dim});
}

Conv1d::Conv1d(const std::string& name, int in, int out, int kernel, Rng& rng, int stride_,
               int pad_, int dilation_, bool bias, bool zero_init)
    : stride(stride_), pad(pad_ >= 0 ? pad_ : dilation_ * (kernel - 1) / 2),
      dilation(dilation_) {
  weight = make_param(name + ".weight", {out, in, kernel});
  if (zero_init) {
    init_zero(weight);
  } else {
    init_uniform_fan_in(weight, in * kernel, rng);
  }
  if (bias) {
    bias_ = make_param(name + ".bias", {out});
    init_zero(bias_);
  }
}

Tensor Conv1d::forward(const Tensor& x) const {
  return conv1d(x, weight, bias_, stride, pad, dilation);
}

ConvTranspose1d::ConvTranspose1d(const std::string& name, int in, int out, int kernel,
                                 int stride_, Rng& rng)
    : stride(stride_), pad((kernel - stride_) / 2) {
  if ((kernel - stride_) % 2 != 0 || kernel < stride_) {
    throw ValidationError("ConvTranspose1d: kernel - stride must be even and >= 0 so the "
                          "output length is exactly T*stride");
  }
  weight = make_param(name + ".weight", {in, out, kernel});
  init_uniform_fan_in(weight, in * kernel, rng);
  bias_ = make_param(name + ".bias", {out});
  init_zero(bias_);
}

Tensor ConvTranspose1d::forward(const Tensor& x) const {
  return conv_transpose1d(x, weight, bias_, stride, pad);
}

Conv2d::Conv2d(const std::string& name, int in, int out, int kernel, int stride_, int pad_,
               Rng& rng)
    : stride(stride_), pad(pad_) {
  weight = make_param(name + ".weight", {out, in, kernel, kernel});
  init_uniform_fan_in(weight, in * kernel * kernel, rng);
  bias_ = make_param(name + ".bias", {out});
  init_zero(bias_);
}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias_, stride, pad); }

LayerNorm::LayerNorm(const std::string& name, int dim) {
  gain = make_param(name + ".gain", {dim});
  std::fill(gain.value().begin(), gain.value().end(), 1.0);
  bias_ = make_param(name + ".bias", {dim});
  init_zero(bias_);
}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm(x, gain, bias_); }

Embedding::Embedding(const std::string& name, int vocab_, int dim_, Rng& rng)
    : vocab(vocab_), dim(dim_) {
  table = make_param(name + ".table", {vocab, dim});
  for (double& v : table.value()) v = rng.normal(0.0, 0.1);
}

Tensor Embedding::forward(const std::vector<int>& ids) const {
  return gather_rows(table, ids);
}

TransformerBlock::TransformerBlock(const std::string& name, int dim, int heads, int ff_dim,
                                   Rng& rng)
    : dim_(dim), heads_(heads), head_dim_(dim / heads),
      ln1_(name + ".ln1", dim), ln2_(name + ".ln2", dim),
      wq_(name + ".wq", dim, dim, rng), wk_(name + ".wk", dim, dim, rng),
      wv_(name + ".wv", dim, dim, rng), wo_(name + ".wo", dim, dim, rng),
      ff1_(name + ".ff1", dim, ff_dim, rng), ff2_(name + ".ff2", ff_dim, dim, rng) {
  if (dim % heads != 0) throw ValidationError("TransformerBlock: dim must divide by heads");
  register_child("ln1", ln1_);
  register_child("ln2", ln2_);
  register_child("wq", wq_);
  register_child("wk", wk_);
  register_child("wv", wv_);
  register_child("wo", wo_);
  register_child("ff1", ff1_);
  register_child("ff2", ff2_);
}

Tensor TransformerBlock::forward(const Tensor& x) const {
  Tensor h = ln1_.forward(x);
  Tensor q = wq_.forward(h), k = wk_.forward(h), v = wv_.forward(h);
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  Tensor heads_out;
  for (int hd = 0; hd < heads_; ++hd) {
    const int c0 = hd * head_dim_, c1 = (hd + 1) * head_dim_;
    Tensor qh = slice_cols(q, c0, c1);
    Tensor kh = slice_cols(k, c0, c1);
    Tensor vh = slice_cols(v, c0, c1);
    Tensor attn = row_softmax(mul_scalar(matmul(qh, transpose(kh)), scale));
    Tensor oh = matmul(attn, vh);
    heads_out = hd == 0 ? oh : concat_cols(heads_out, oh);
  }
  Tensor y = add(x, wo_.forward(heads_out));
  Tensor f = ff2_.forward(relu(ff1_.forward(ln2_.forward(y))));
  return add(y, f);
}

Tensor sinusoidal_encoding(int len, int dim) {
  std::vector<double> pe(static_cast<std::size_t>(len) * dim, 0.0);
  for (int t = 0; t < len; ++t) {
    for (int i = 0; 2 * i < dim; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / dim);
      pe[static_cast<std::size_t>(t) * dim + 2 * i] = std::sin(t * freq);
      if (2 * i + 1 < dim) pe[static_cast<std::size_t>(t) * dim + 2 * i + 1] = std::cos(t * freq);
    }
  }
  return Tensor::from_values(std::move(pe), {len, dim});
}

AdamW::AdamW(std::vector<Parameter*> params, const AdamWConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (const Parameter* p : params_) {
    if (p->frozen) {
      throw RuntimeFault("AdamW: refusing to optimize frozen parameter " + p->name);
    }
  }
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i]->tensor.numel(), 0.0);
    v_[i].assign(params_[i]->tensor.numel(), 0.0);
  }
}

void AdamW::zero_grad() {
  for (Parameter* p : params_) p->tensor.zero_grad();
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    if (p->frozen) {
      throw RuntimeFault("AdamW: attempt to update frozen parameter " + p->name);
    }
    const std::vector<double> g = p->tensor.grad();
    auto& val = p->tensor.value();
    for (std::size_t j = 0; j < val.size(); ++j) {
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      val[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * val[j]);
    }
  }
}

}  // namespace scenetts
