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

#include "scenetts/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "scenetts/errors.hpp"
#include "scenetts/rng.hpp"

namespace scenetts {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_bins(const std::vector<double>& bins) {
  if (bins.empty()) throw ValidationError("reverb bins: need at least one boundary");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (!std::isfinite(bins[i]) || bins[i] <= 0.0) {
      throw ValidationError("reverb bins: boundaries must be positive finite seconds");
    }
    if (i > 0 && bins[i] <= bins[i - 1]) {
      throw ValidationError("reverb bins: boundaries must be strictly ascending");
    }
  }
}

int assign_reverb_class(double rt60_seconds, const std::vector<double>& bins) {
  validate_bins(bins);
  if (!(rt60_seconds >= 0.0)) {
    throw ValidationError("assign_reverb_class: rt60 must be >= 0");
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (rt60_seconds < bins[i]) return static_cast<int>(i);
  }
  return static_cast<int>(bins.size());
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw RuntimeFault("bad split");
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ValidationError("unknown split name: " + name);
}

std::vector<const ManifestEntry*> Manifest::split_entries(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

int Manifest::classes_present(Split s) const {
  std::set<int> seen;
  for (const auto& e : entries) {
    if (e.split == s) seen.insert(e.reverb_class);
  }
  return static_cast<int>(seen.size());
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw RuntimeFault("cannot write manifest: " + path);
  json header{{"schema_version", Manifest::kSchemaVersion},
              {"kind", "manifest_header"},
              {"features", manifest.features.to_json()},
              {"bins", manifest.bins},
              {"num_classes", manifest.num_classes}};
  f << header.dump() << "\n";
  for (const auto& e : manifest.entries) {
    json line{{"schema_version", Manifest::kSchemaVersion},
              {"clean_audio_path", e.clean_audio_path},
              {"rir_path", e.rir_path},
              {"image_path", e.image_path},
              {"reverb_class", {{"index", e.reverb_class}, {"k", e.num_classes}}},
              {"transcript", e.transcript},
              {"speaker_id", e.speaker_id},
              {"split", split_name(e.split)}};
    f << line.dump() << "\n";
  }
}

Manifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(f, line)) throw ValidationError("manifest is empty: " + path);

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": bad manifest header: " + e.what());
  }
  if (!header.contains("schema_version") ||
      header["schema_version"].get<int>() != Manifest::kSchemaVersion) {
    throw ValidationError(path + ": missing or unsupported schema_version");
  }
  if (header.value("kind", "") != "manifest_header") {
    throw ValidationError(path + ": first line must be the manifest header");
  }

  Manifest m;
  m.features = FeatureParams::from_json(header.at("features"));
  m.bins = header.at("bins").get<std::vector<double>>();
  validate_bins(m.bins);
  m.num_classes = header.at("num_classes").get<int>();
  if (m.num_classes != static_cast<int>(m.bins.size()) + 1) {
    throw ValidationError(path + ": num_classes inconsistent with bins");
  }

  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
    }
    if (j.value("schema_version", -1) != Manifest::kSchemaVersion) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": missing schema_version");
    }
    ManifestEntry e;
    e.clean_audio_path = j.at("clean_audio_path").get<std::string>();
    e.rir_path = j.at("rir_path").get<std::string>();
    e.image_path = j.at("image_path").get<std::string>();
    e.reverb_class = j.at("reverb_class").at("index").get<int>();
    e.num_classes = j.at("reverb_class").at("k").get<int>();
    e.transcript = j.at("transcript").get<std::string>();
    e.speaker_id = j.at("speaker_id").get<std::string>();
    e.split = split_from_name(j.at("split").get<std::string>());
    if (e.num_classes != m.num_classes || e.reverb_class < 0 ||
        e.reverb_class >= m.num_classes) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": bad reverb_class");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

RoomImpulseResponse load_rir(const std::string& path, int target_sample_rate) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate != target_sample_rate) {
    clip = resample(clip, target_sample_rate);
  }
  RoomImpulseResponse rir;
  rir.samples = std::move(clip.samples);
  rir.sample_rate = target_sample_rate;
  const std::string stem = fs::path(path).stem().string();
  if (stem.rfind("wide_", 0) == 0) {
    rir.env_label = EnvLabel::wide;
  } else if (stem.rfind("narrow_", 0) == 0) {
    rir.env_label = EnvLabel::narrow_env;
  }
  rir.rt60 = estimate_rt60_detail(rir.samples, rir.sample_rate).seconds;
  return rir;
}

CorpusItem load_corpus_item(const ManifestEntry& entry, int target_sample_rate) {
  CorpusItem item;
  item.clean = read_wav(entry.clean_audio_path);
  if (item.clean.sample_rate != target_sample_rate) {
    item.clean = resample(item.clean, target_sample_rate);
  }
  item.rir = load_rir(entry.rir_path, target_sample_rate);
  item.reverberant = convolve_rir(item.clean, item.rir);
  return item;
}

namespace {

// Split sizes by floor + largest remainder, deterministic.
std::vector<std::size_t> split_sizes(std::size_t n, const double ratios[3]) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  std::vector<std::size_t> sizes(3);
  std::vector<std::pair<double, int>> remainders;
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += sizes[i];
    remainders.emplace_back(exact - std::floor(exact + 1e-9), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < n; ++i, ++used) {
    sizes[static_cast<std::size_t>(remainders[i % 3].second)] += 1;
  }
  return sizes;
}

}  // namespace

Manifest build_manifest(const std::vector<CleanUtterance>& clean,
                        const std::vector<RirImagePair>& pairs,
                        const BuildManifestOptions& options) {
  validate_bins(options.bins);
  options.features.validate();
  if (clean.empty()) throw ValidationError("build_manifest: no clean utterances");
  if (pairs.empty()) throw ValidationError("build_manifest: no RIR/image pairs");

  // Classify each RIR once.
  std::vector<int> pair_class(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const RoomImpulseResponse rir = load_rir(pairs[i].rir_path, options.features.sample_rate);
    pair_class[i] = assign_reverb_class(rir.rt60, options.bins);
  }

  Rng rng(options.seed);
  Manifest m;
  m.features = options.features;
  m.bins = options.bins;
  m.num_classes = static_cast<int>(options.bins.size()) + 1;

  // Uniform RIR/image assignment per utterance.
  std::vector<std::size_t> pair_of(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    pair_of[i] = static_cast<std::size_t>(rng.uniform_index(pairs.size()));
  }

  // Deterministic split assignment.
  std::vector<std::size_t> order(clean.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const double ratios[3] = {options.ratio_train, options.ratio_val, options.ratio_test};
  const std::vector<std::size_t> sizes = split_sizes(clean.size(), ratios);
  std::vector<Split> split_of(clean.size(), Split::train);
  std::size_t pos = 0;
  const Split kinds[3] = {Split::train, Split::val, Split::test};
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < sizes[static_cast<std::size_t>(k)]; ++i, ++pos) {
      split_of[order[pos]] = kinds[k];
    }
  }

  for (std::size_t i = 0; i < clean.size(); ++i) {
    ManifestEntry e;
    e.clean_audio_path = clean[i].path;
    e.rir_path = pairs[pair_of[i]].rir_path;
    e.image_path = pairs[pair_of[i]].image_path;
    e.reverb_class = pair_class[pair_of[i]];
    e.num_classes = m.num_classes;
    e.transcript = clean[i].transcript;
    e.speaker_id = clean[i].speaker_id;
    e.split = split_of[i];
    m.entries.push_back(std::move(e));
  }

  // Every class must be represented in the train split.
  std::set<int> train_classes;
  for (const auto& e : m.entries) {
    if (e.split == Split::train) train_classes.insert(e.reverb_class);
  }
  // Only classes that exist among the provided RIRs can ever appear.
  std::set<int> available(pair_class.begin(), pair_class.end());
  for (int c : available) {
    if (train_classes.count(c) == 0) {
      throw ValidationError(
          "build_manifest: reverb class " + std::to_string(c) +
          " has no training examples; try another seed or different bins");
    }
  }
  return m;
}

std::vector<CleanUtterance> scan_clean_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("clean dir not found: " + dir);
  std::vector<CleanUtterance> out;
  std::vector<std::string> missing;
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".wav") wavs.push_back(entry.path());
  }
  std::sort(wavs.begin(), wavs.end());
  for (const auto& wav : wavs) {
    fs::path txt = wav;
    txt.replace_extension(".txt");
    if (!fs::exists(txt)) {
      missing.push_back(wav.string());
      continue;
    }
    std::ifstream tf(txt);
    std::string transcript((std::istreambuf_iterator<char>(tf)),
                           std::istreambuf_iterator<char>());
    while (!transcript.empty() && (transcript.back() == '\n' || transcript.back() == '\r')) {
      transcript.pop_back();
    }
    const std::string stem = wav.stem().string();
    const std::size_t underscore = stem.find('_');
    CleanUtterance u;
    u.path = wav.string();
    u.transcript = transcript;
    u.speaker_id = underscore == std::string::npos ? "default" : stem.substr(0, underscore);
    out.push_back(std::move(u));
  }
  if (!missing.empty()) {
    std::string msg = "clean utterances missing transcripts:";
    for (const auto& p : missing) msg += " " + p;
    throw ValidationError(msg);
  }
  if (out.empty()) throw ValidationError("no .wav files in clean dir: " + dir);
  return out;
}

std::vector<RirImagePair> pair_rirs_with_images(const std::string& rir_dir,
                                                const std::string& image_dir) {
  if (!fs::is_directory(rir_dir)) throw ValidationError("rir dir not found: " + rir_dir);
  if (!fs::is_directory(image_dir)) throw ValidationError("image dir not found: " + image_dir);
  std::vector<fs::path> rirs;
  for (const auto& entry : fs::directory_iterator(rir_dir)) {
    if (entry.path().extension() == ".wav") rirs.push_back(entry.path());
  }
  std::sort(rirs.begin(), rirs.end());
  if (rirs.empty()) throw ValidationError("no .wav files in rir dir: " + rir_dir);

  std::vector<RirImagePair> out;
  std::vector<std::string> missing;
  for (const auto& rir : rirs) {
    const fs::path image = fs::path(image_dir) / (rir.stem().string() + ".png");
    if (!fs::exists(image)) {
      missing.push_back(rir.string());
      continue;
    }
    out.push_back({rir.string(), image.string()});
  }
  if (!missing.empty()) {
    std::string msg = "RIRs without a paired scene image:";
    for (const auto& p : missing) msg += " " + p;
    throw ValidationError(msg);
  }
  return out;
}

}  // namespace scenetts
