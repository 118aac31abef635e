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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "scenetts/rng.hpp"
#include "scenetts/tensor.hpp"

namespace scenetts {

struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;
};

/// Base for everything with learnable parameters. Owns its parameters,
/// tracks children for recursive collection, checkpointing and freezing.
class Module {
 public:
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  virtual ~Module() = default;

  /// All parameters including children, prefixed "child.name".
  std::vector<Parameter*> parameters() const;
  void named_parameters(const std::string& prefix, std::vector<Parameter*>& out) const;

  void zero_grads();

  /// Marks every parameter (including children's) frozen and drops their
  /// gradient tracking. Inputs keep receiving gradients. Idempotent.
  void freeze();
  bool all_frozen() const;

  /// FNV-1a hash over the raw bytes of all parameter values, in registry order.
  std::uint64_t param_hash() const;

 protected:
  Tensor make_param(const std::string& name, const Shape& shape);
  void register_child(const std::string& name, Module& m);

 private:
  std::vector<std::shared_ptr<Parameter>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

// ---- initialization ----
void init_uniform_fan_in(Tensor& t, int fan_in, Rng& rng);
void init_zero(Tensor& t);

// ---- layers ----

class Linear : public Module {
 public:
  Linear(const std::string& name, int in, int out, Rng& rng, bool bias = true,
         bool zero_init = false);
  Tensor forward(const Tensor& x) const;      // [m,in] -> [m,out]
  Tensor forward_vec(const Tensor& x) const;  // [in] -> [out]
  Tensor weight, bias_;
  int in_dim, out_dim;
};

class Conv1d : public Module {
 public:
  Conv1d(const std::string& name, int in, int out, int kernel, Rng& rng, int stride = 1,
         int pad = -1, int dilation = 1, bool bias = true, bool zero_init = false);
  Tensor forward(const Tensor& x) const;  // [Cin,T] -> [Cout,T']
  Tensor weight, bias_;
  int stride, pad, dilation;
};

class ConvTranspose1d : public Module {
 public:
  ConvTranspose1d(const std::string& name, int in, int out, int kernel, int stride,
                  Rng& rng);
  Tensor forward(const Tensor& x) const;  // [Cin,T] -> [Cout,T*stride]
  Tensor weight, bias_;
  int stride, pad;
};

class Conv2d : public Module {
 public:
  Conv2d(const std::string& name, int in, int out, int kernel, int stride, int pad,
         Rng& rng);
  Tensor forward(const Tensor& x) const;  // [Cin,H,W] -> [Cout,H',W']
  Tensor weight, bias_;
  int stride, pad;
};

class LayerNorm : public Module {
 public:
  LayerNorm(const std::string& name, int dim);
  Tensor forward(const Tensor& x) const;  // [m,dim]
  Tensor gain, bias_;
};

class Embedding : public Module {
 public:
  Embedding(const std::string& name, int vocab, int dim, Rng& rng);
  Tensor forward(const std::vector<int>& ids) const;  // -> [len,dim]
  Tensor table;
  int vocab, dim;
};

/// Pre-norm transformer encoder block with full (non-causal) self-attention.
class TransformerBlock : public Module {
 public:
  TransformerBlock(const std::string& name, int dim, int heads, int ff_dim, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [T,dim]

 private:
  int dim_, heads_, head_dim_;
  LayerNorm ln1_, ln2_;
  Linear wq_, wk_, wv_, wo_, ff1_, ff2_;
};

/// Sinusoidal positional encoding, shape [len, dim]; constant (no grad).
Tensor sinusoidal_encoding(int len, int dim);

// ---- optimizer ----

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay. Refuses frozen parameters outright.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, const AdamWConfig& cfg);
  void zero_grad();
  void step();

 private:
  std::vector<Parameter*> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace scenetts
