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

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scenetts/image.hpp"
#include "scenetts/nn.hpp"
#include "scenetts/tensor.hpp"

namespace scenetts {

/// Frozen feature provider for scene images. Implementations must be
/// deterministic with a fixed output dimension.
class VisionBackbone {
 public:
  virtual ~VisionBackbone() = default;
  virtual std::vector<double> encode(const SceneImage& image) const = 0;
  virtual int feature_dim() const = 0;
  virtual std::string name() const = 0;
};

/// Precomputed features keyed by image path, loaded from a JSON-lines file of
/// {"image_path": ..., "feature": [...]}. This is how an external frozen
/// encoder (e.g. a large pretrained image model) is consumed offline.
class FileBackbone : public VisionBackbone {
 public:
  static FileBackbone load(const std::string& path);

  std::vector<double> encode(const SceneImage& image) const override;
  const std::vector<double>& lookup(const std::string& image_path) const;
  int feature_dim() const override { return feature_dim_; }
  std::string name() const override { return "file"; }

 private:
  std::map<std::string, std::vector<double>> features_;
  int feature_dim_ = 0;
};

struct SceneEncoderConfig {
  std::string backbone = "file";  // "file" or "builtin"
  int feature_dim = 512;
  int adapter_hidden = 256;
  int d_scene = 192;
  int num_classes = 4;
  int resolution = 224;  // builtin input resolution

  void validate() const;
};

/// Trainable strided conv stack + global average pooling. The ablation arm
/// that replaces the frozen image encoder.
class BuiltinConvBackbone : public Module {
 public:
  BuiltinConvBackbone(const SceneEncoderConfig& cfg, Rng& rng);

  /// Returns the pooled feature [feature_dim]. If last_conv is non-null it
  /// receives the pre-pooling activation [feature_dim, H', W'] for Grad-CAM.
  Tensor forward(const SceneImage& image, Tensor* last_conv = nullptr) const;

  int feature_dim() const { return cfg_.feature_dim; }
  int resolution() const { return cfg_.resolution; }

 private:
  SceneEncoderConfig cfg_;
  Conv2d c1_, c2_, c3_, c4_;
};

/// Adapter MLP + classification head over backbone features. Produces the
/// scene embedding that conditions the synthesizer and the class logits used
/// for the cross-entropy guidance.
class SceneEncoder : public Module {
 public:
  SceneEncoder(const SceneEncoderConfig& cfg, Rng& rng);

  /// Adapter: backbone feature [F] -> scene embedding [d_scene].
  Tensor encode_feature(const Tensor& feature) const;

  /// Full image path for the builtin backbone; throws for "file".
  Tensor encode_image(const SceneImage& image, Tensor* last_conv = nullptr) const;

  Tensor class_logits(const Tensor& scene_embedding) const;
  Tensor class_loss(const Tensor& scene_embedding, int target_class) const;

  bool has_builtin() const { return builtin_ != nullptr; }
  BuiltinConvBackbone& builtin() const;

  const SceneEncoderConfig& config() const { return cfg_; }

 private:
  SceneEncoderConfig cfg_;
  std::unique_ptr<BuiltinConvBackbone> builtin_;
  Linear adapter1_, adapter2_, head_;
};

}  // namespace scenetts
