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

#include "scenetts/scene.hpp"

#include <fstream>

#include <json.hpp>

#include "scenetts/errors.hpp"

namespace scenetts {

FileBackbone FileBackbone::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open scene features file: " + path);
  FileBackbone backbone;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
    }
    if (!j.contains("image_path") || !j.contains("feature")) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected {image_path, feature}");
    }
    std::vector<double> feat = j["feature"].get<std::vector<double>>();
    if (backbone.feature_dim_ == 0) {
      backbone.feature_dim_ = static_cast<int>(feat.size());
    } else if (static_cast<int>(feat.size()) != backbone.feature_dim_) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": inconsistent feature dimension");
    }
    backbone.features_[j["image_path"].get<std::string>()] = std::move(feat);
  }
  if (backbone.features_.empty()) {
    throw ValidationError("scene features file is empty: " + path);
  }
  return backbone;
}

const std::vector<double>& FileBackbone::lookup(const std::string& image_path) const {
  auto it = features_.find(image_path);
  if (it == features_.end()) {
    throw ValidationError("no precomputed scene feature for image: " + image_path);
  }
  return it->second;
}

std::vector<double> FileBackbone::encode(const SceneImage& image) const {
  return lookup(image.source_path);
}

void SceneEncoderConfig::validate() const {
  if (backbone != "file" && backbone != "builtin") {
    throw ValidationError("scene.backbone must be 'file' or 'builtin', got " + backbone);
  }
  if (feature_dim < 1) throw ValidationError("scene.feature_dim must be positive");
  if (adapter_hidden < 1) throw ValidationError("scene.adapter_hidden must be positive");
  if (d_scene < 1) throw ValidationError("scene.d_scene must be positive");
  if (num_classes < 2) throw ValidationError("scene: need at least 2 reverb classes");
  if (resolution < 16) throw ValidationError("scene.resolution must be >= 16");
}

BuiltinConvBackbone::BuiltinConvBackbone(const SceneEncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      c1_("scene.backbone.c1", 3, 16, 3, 2, 1, rng),
      c2_("scene.backbone.c2", 16, 32, 3, 2, 1, rng),
      c3_("scene.backbone.c3", 32, 64, 3, 2, 1, rng),
      c4_("scene.backbone.c4", 64, cfg.feature_dim, 3, 2, 1, rng) {
  register_child("c1", c1_);
  register_child("c2", c2_);
  register_child("c3", c3_);
  register_child("c4", c4_);
}

Tensor BuiltinConvBackbone::forward(const SceneImage& image, Tensor* last_conv) const {
  image.validate("builtin backbone input");
  const SceneImage sized = (image.height == cfg_.resolution && image.width == cfg_.resolution)
                               ? image
                               : resize_bilinear(image, cfg_.resolution, cfg_.resolution);
  // [H,W,3] interleaved -> [3,H,W]
  std::vector<double> chw(sized.pixels.size());
  const int hw = sized.height * sized.width;
  for (int y = 0; y < sized.height; ++y)
    for (int x = 0; x < sized.width; ++x)
      for (int c = 0; c < 3; ++c)
        chw[static_cast<std::size_t>(c) * hw + y * sized.width + x] = sized.at(y, x, c);
  Tensor x = Tensor::from_values(std::move(chw), {3, sized.height, sized.width});
  x = relu(c1_.forward(x));
  x = relu(c2_.forward(x));
  x = relu(c3_.forward(x));
  x = relu(c4_.forward(x));
  if (last_conv != nullptr) *last_conv = x;
  return global_avg_pool2d(x);
}

SceneEncoder::SceneEncoder(const SceneEncoderConfig& cfg, Rng& rng)
    : cfg_(cfg),
      builtin_(cfg.backbone == "builtin" ? std::make_unique<BuiltinConvBackbone>(cfg, rng)
                                         : nullptr),
      adapter1_("scene.adapter1", cfg.feature_dim, cfg.adapter_hidden, rng),
      adapter2_("scene.adapter2", cfg.adapter_hidden, cfg.d_scene, rng),
      head_("scene.head", cfg.d_scene, cfg.num_classes, rng) {
  cfg_.validate();
  if (builtin_) register_child("backbone", *builtin_);
  register_child("adapter1", adapter1_);
  register_child("adapter2", adapter2_);
  register_child("head", head_);
}

Tensor SceneEncoder::encode_feature(const Tensor& feature) const {
  if (feature.shape() != Shape{cfg_.feature_dim}) {
    throw ValidationError("scene adapter: feature dim " + shape_str(feature.shape()) +
                          " != backbone dim " + std::to_string(cfg_.feature_dim));
  }
  return adapter2_.forward_vec(relu(adapter1_.forward_vec(feature)));
}

Tensor SceneEncoder::encode_image(const SceneImage& image, Tensor* last_conv) const {
  if (!builtin_) {
    throw ValidationError(
        "scene encoder is configured with the file backbone; pixel input requires "
        "scene.backbone = builtin");
  }
  return encode_feature(builtin_->forward(image, last_conv));
}

Tensor SceneEncoder::class_logits(const Tensor& scene_embedding) const {
  return head_.forward_vec(scene_embedding);
}

Tensor SceneEncoder::class_loss(const Tensor& scene_embedding, int target_class) const {
  return softmax_cross_entropy(class_logits(scene_embedding), target_class);
}

BuiltinConvBackbone& SceneEncoder::builtin() const {
  if (!builtin_) throw ValidationError("no builtin backbone in this scene encoder");
  return *builtin_;
}

}  // namespace scenetts
