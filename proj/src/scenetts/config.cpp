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

#include "scenetts/config.hpp"

#include <fstream>
#include <sstream>

#include "scenetts/dataset.hpp"
#include "scenetts/errors.hpp"

namespace scenetts {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected unsigned integer, got '" + v + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ValidationError(key + ": expected comma-separated numbers");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (double d : parse_double_list(key, v)) out.push_back(static_cast<int>(d));
  return out;
}

}  // namespace

void TrainOptions::validate() const {
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (lr <= 0.0) throw ValidationError("train.lr must be positive");
  if (lambda_recon < 0 || lambda_kl < 0 || lambda_dur < 0 || lambda_scene < 0 ||
      lambda_src < 0 || lambda_adv < 0) {
    throw ValidationError("train: loss weights must be >= 0");
  }
  if (max_steps < 1) throw ValidationError("train.max_steps must be >= 1");
  if (checkpoint_every < 1) throw ValidationError("train.checkpoint_every must be >= 1");
  if (validate_every < 1) throw ValidationError("train.validate_every must be >= 1");
}

void SrcTrainOptions::validate() const {
  if (epochs < 0) throw ValidationError("src_train.epochs must be >= 0");
  if (lr <= 0.0) throw ValidationError("src_train.lr must be positive");
  if (batch_size < 1) throw ValidationError("src_train.batch_size must be >= 1");
}

void EvalOptions::validate() const {
  if (mcd_coeffs < 1) throw ValidationError("eval.mcd_coeffs must be >= 1");
  if (!asr_provider.empty() && asr_provider != "echo") {
    throw ValidationError("eval.asr_provider must be empty or 'echo'");
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file: " + path);
  RunConfig cfg;
  bool saw_schema = false;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "schema_version") {
      if (parse_int(key, value) != kSchemaVersion) {
        throw ValidationError(path + ": unsupported schema_version " + value);
      }
      saw_schema = true;
      continue;
    }
    try {
      cfg.set(key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!saw_schema) {
    throw ValidationError(path + ": missing required schema_version key");
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "features.sample_rate") features.sample_rate = parse_int(key, value);
  else if (key == "features.n_fft") features.n_fft = parse_int(key, value);
  else if (key == "features.hop_length") features.hop_length = parse_int(key, value);
  else if (key == "features.win_length") features.win_length = parse_int(key, value);
  else if (key == "features.n_mels") features.n_mels = parse_int(key, value);
  else if (key == "features.fmin") features.fmin = parse_double(key, value);
  else if (key == "features.fmax") features.fmax = parse_double(key, value);
  else if (key == "features.log_floor") features.log_floor = parse_double(key, value);
  else if (key == "dataset.bins") bins = parse_double_list(key, value);
  else if (key == "dataset.ratio_train") ratio_train = parse_double(key, value);
  else if (key == "dataset.ratio_val") ratio_val = parse_double(key, value);
  else if (key == "dataset.ratio_test") ratio_test = parse_double(key, value);
  else if (key == "model.vocab") backbone.vocab = parse_int(key, value);
  else if (key == "model.hidden") backbone.hidden = parse_int(key, value);
  else if (key == "model.text_layers") backbone.text_layers = parse_int(key, value);
  else if (key == "model.text_heads") backbone.text_heads = parse_int(key, value);
  else if (key == "model.latent_channels") backbone.latent_channels = parse_int(key, value);
  else if (key == "model.flow_blocks") backbone.flow_blocks = parse_int(key, value);
  else if (key == "model.decoder_channels") backbone.decoder_channels = parse_int(key, value);
  else if (key == "model.upsample") backbone.upsample = parse_int_list(key, value);
  else if (key == "model.d_cond") backbone.d_cond = parse_int(key, value);
  else if (key == "model.temperature") backbone.temperature = parse_double(key, value);
  else if (key == "model.segment_frames") backbone.segment_frames = parse_int(key, value);
  else if (key == "scene.backbone") scene.backbone = value;
  else if (key == "scene.feature_dim") scene.feature_dim = parse_int(key, value);
  else if (key == "scene.adapter_hidden") scene.adapter_hidden = parse_int(key, value);
  else if (key == "scene.d_scene") scene.d_scene = parse_int(key, value);
  else if (key == "scene.resolution") scene.resolution = parse_int(key, value);
  else if (key == "scene.features_file") scene_features_file = value;
  else if (key == "speaker.channels") speaker.channels = parse_int(key, value);
  else if (key == "speaker.attn_heads") speaker.attn_heads = parse_int(key, value);
  else if (key == "speaker.d_spk") speaker.d_spk = parse_int(key, value);
  else if (key == "speaker.min_frames") speaker.min_frames = parse_int(key, value);
  else if (key == "src.conv_channels") {
    const std::vector<int> ch = parse_int_list(key, value);
    if (ch.size() != 4) throw ValidationError(key + ": expected exactly 4 channel sizes");
    for (int i = 0; i < 4; ++i) src.conv_channels[i] = ch[static_cast<std::size_t>(i)];
  }
  else if (key == "src.transformer_dim") src.transformer_dim = parse_int(key, value);
  else if (key == "src.transformer_heads") src.transformer_heads = parse_int(key, value);
  else if (key == "src.min_frames") src.min_frames = parse_int(key, value);
  else if (key == "train.batch_size") train.batch_size = parse_int(key, value);
  else if (key == "train.lr") train.lr = parse_double(key, value);
  else if (key == "train.beta1") train.beta1 = parse_double(key, value);
  else if (key == "train.beta2") train.beta2 = parse_double(key, value);
  else if (key == "train.weight_decay") train.weight_decay = parse_double(key, value);
  else if (key == "train.lambda_recon") train.lambda_recon = parse_double(key, value);
  else if (key == "train.lambda_kl") train.lambda_kl = parse_double(key, value);
  else if (key == "train.lambda_dur") train.lambda_dur = parse_double(key, value);
  else if (key == "train.lambda_scene") train.lambda_scene = parse_double(key, value);
  else if (key == "train.lambda_src") train.lambda_src = parse_double(key, value);
  else if (key == "train.lambda_adv") train.lambda_adv = parse_double(key, value);
  else if (key == "train.max_steps") train.max_steps = parse_int(key, value);
  else if (key == "train.checkpoint_every") train.checkpoint_every = parse_int(key, value);
  else if (key == "train.validate_every") train.validate_every = parse_int(key, value);
  else if (key == "src_train.epochs") src_train.epochs = parse_int(key, value);
  else if (key == "src_train.lr") src_train.lr = parse_double(key, value);
  else if (key == "src_train.batch_size") src_train.batch_size = parse_int(key, value);
  else if (key == "src_train.weight_decay") src_train.weight_decay = parse_double(key, value);
  else if (key == "eval.mcd_coeffs") eval.mcd_coeffs = parse_int(key, value);
  else if (key == "eval.asr_provider") eval.asr_provider = value;
  else throw ValidationError("unknown config key: " + key);
}

void RunConfig::apply_overrides(
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) set(key, value);
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.features = features;
  cfg.backbone = backbone;
  cfg.scene = scene;
  cfg.speaker = speaker;
  cfg.bins = bins;
  cfg.init_seed = seed;
  cfg.finalize();
  return cfg;
}

void RunConfig::validate() const {
  features.validate();
  validate_bins(bins);
  if (std::abs(ratio_train + ratio_val + ratio_test - 1.0) > 1e-9) {
    throw ValidationError("dataset split ratios must sum to 1");
  }
  model_config();  // validates backbone/scene/speaker consistency
  SrcClassifierConfig s = src;
  s.n_mels = features.n_mels;
  s.num_classes = static_cast<int>(bins.size()) + 1;
  s.validate();
  train.validate();
  src_train.validate();
  eval.validate();
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"features", cfg.features.to_json()},
      {"backbone",
       {{"vocab", cfg.backbone.vocab},
        {"hidden", cfg.backbone.hidden},
        {"text_layers", cfg.backbone.text_layers},
        {"text_heads", cfg.backbone.text_heads},
        {"latent_channels", cfg.backbone.latent_channels},
        {"flow_blocks", cfg.backbone.flow_blocks},
        {"decoder_channels", cfg.backbone.decoder_channels},
        {"upsample", cfg.backbone.upsample},
        {"d_cond", cfg.backbone.d_cond},
        {"temperature", cfg.backbone.temperature},
        {"segment_frames", cfg.backbone.segment_frames}}},
      {"scene",
       {{"backbone", cfg.scene.backbone},
        {"feature_dim", cfg.scene.feature_dim},
        {"adapter_hidden", cfg.scene.adapter_hidden},
        {"d_scene", cfg.scene.d_scene},
        {"num_classes", cfg.scene.num_classes},
        {"resolution", cfg.scene.resolution}}},
      {"speaker",
       {{"n_mels", cfg.speaker.n_mels},
        {"channels", cfg.speaker.channels},
        {"attn_heads", cfg.speaker.attn_heads},
        {"d_spk", cfg.speaker.d_spk},
        {"min_frames", cfg.speaker.min_frames}}},
      {"bins", cfg.bins},
      {"init_seed", cfg.init_seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.features = FeatureParams::from_json(j.at("features"));
  const auto& b = j.at("backbone");
  cfg.backbone.vocab = b.at("vocab").get<int>();
  cfg.backbone.hidden = b.at("hidden").get<int>();
  cfg.backbone.text_layers = b.at("text_layers").get<int>();
  cfg.backbone.text_heads = b.at("text_heads").get<int>();
  cfg.backbone.latent_channels = b.at("latent_channels").get<int>();
  cfg.backbone.flow_blocks = b.at("flow_blocks").get<int>();
  cfg.backbone.decoder_channels = b.at("decoder_channels").get<int>();
  cfg.backbone.upsample = b.at("upsample").get<std::vector<int>>();
  cfg.backbone.d_cond = b.at("d_cond").get<int>();
  cfg.backbone.temperature = b.at("temperature").get<double>();
  cfg.backbone.segment_frames = b.at("segment_frames").get<int>();
  const auto& s = j.at("scene");
  cfg.scene.backbone = s.at("backbone").get<std::string>();
  cfg.scene.feature_dim = s.at("feature_dim").get<int>();
  cfg.scene.adapter_hidden = s.at("adapter_hidden").get<int>();
  cfg.scene.d_scene = s.at("d_scene").get<int>();
  cfg.scene.num_classes = s.at("num_classes").get<int>();
  cfg.scene.resolution = s.at("resolution").get<int>();
  const auto& k = j.at("speaker");
  cfg.speaker.n_mels = k.at("n_mels").get<int>();
  cfg.speaker.channels = k.at("channels").get<int>();
  cfg.speaker.attn_heads = k.at("attn_heads").get<int>();
  cfg.speaker.d_spk = k.at("d_spk").get<int>();
  cfg.speaker.min_frames = k.at("min_frames").get<int>();
  cfg.bins = j.at("bins").get<std::vector<double>>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  cfg.finalize();
  return cfg;
}

nlohmann::json src_snapshot_to_json(const SrcSnapshot& snap) {
  return nlohmann::json{
      {"src",
       {{"n_mels", snap.src.n_mels},
        {"num_classes", snap.src.num_classes},
        {"conv_channels",
         {snap.src.conv_channels[0], snap.src.conv_channels[1], snap.src.conv_channels[2],
          snap.src.conv_channels[3]}},
        {"transformer_dim", snap.src.transformer_dim},
        {"transformer_heads", snap.src.transformer_heads},
        {"min_frames", snap.src.min_frames}}},
      {"features", snap.features.to_json()},
      {"bins", snap.bins},
      {"init_seed", snap.init_seed}};
}

SrcSnapshot src_snapshot_from_json(const nlohmann::json& j) {
  SrcSnapshot snap;
  const auto& s = j.at("src");
  snap.src.n_mels = s.at("n_mels").get<int>();
  snap.src.num_classes = s.at("num_classes").get<int>();
  const auto ch = s.at("conv_channels").get<std::vector<int>>();
  if (ch.size() != 4) throw ValidationError("src snapshot: expected 4 conv channels");
  for (int i = 0; i < 4; ++i) snap.src.conv_channels[i] = ch[static_cast<std::size_t>(i)];
  snap.src.transformer_dim = s.at("transformer_dim").get<int>();
  snap.src.transformer_heads = s.at("transformer_heads").get<int>();
  snap.src.min_frames = s.at("min_frames").get<int>();
  snap.features = FeatureParams::from_json(j.at("features"));
  snap.bins = j.at("bins").get<std::vector<double>>();
  snap.init_seed = j.at("init_seed").get<std::uint64_t>();
  snap.src.validate();
  return snap;
}

}  // namespace scenetts
