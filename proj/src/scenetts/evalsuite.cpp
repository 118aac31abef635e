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

#include "scenetts/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "scenetts/errors.hpp"

namespace scenetts {

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::stringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

int word_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double word_error_rate(const std::vector<std::string>& reference,
                       const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw ValidationError("WER: empty reference");
  return 100.0 * word_edit_distance(reference, hypothesis) /
         static_cast<double>(reference.size());
}

DtwAlignment dtw_align(const std::vector<double>& a, int ta, const std::vector<double>& b,
                       int tb, int dim) {
  if (ta < 1 || tb < 1 || dim < 1) throw ValidationError("DTW: empty input");
  const auto dist = [&](int i, int j) {
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = a[static_cast<std::size_t>(i) * dim + d] -
                          b[static_cast<std::size_t>(j) * dim + d];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(static_cast<std::size_t>(ta) * tb, inf);
  // 0: diagonal, 1: from (i-1,j), 2: from (i,j-1)
  std::vector<char> from(static_cast<std::size_t>(ta) * tb, 0);
  for (int i = 0; i < ta; ++i) {
    for (int j = 0; j < tb; ++j) {
      const double c = dist(i, j);
      if (i == 0 && j == 0) {
        acc[0] = c;
        continue;
      }
      double best = inf;
      char f = 0;
      if (i > 0 && j > 0 && acc[static_cast<std::size_t>(i - 1) * tb + j - 1] < best) {
        best = acc[static_cast<std::size_t>(i - 1) * tb + j - 1];
        f = 0;
      }
      if (i > 0 && acc[static_cast<std::size_t>(i - 1) * tb + j] < best) {
        best = acc[static_cast<std::size_t>(i - 1) * tb + j];
        f = 1;
      }
      if (j > 0 && acc[static_cast<std::size_t>(i) * tb + j - 1] < best) {
        best = acc[static_cast<std::size_t>(i) * tb + j - 1];
        f = 2;
      }
      acc[static_cast<std::size_t>(i) * tb + j] = best + c;
      from[static_cast<std::size_t>(i) * tb + j] = f;
    }
  }

  DtwAlignment out;
  int i = ta - 1, j = tb - 1;
  while (true) {
    out.path.emplace_back(i, j);
    if (i == 0 && j == 0) break;
    const char f = from[static_cast<std::size_t>(i) * tb + j];
    if (f == 0 && i > 0 && j > 0) {
      --i;
      --j;
    } else if (f == 1 && i > 0) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  double total = 0.0;
  for (const auto& [pi, pj] : out.path) total += dist(pi, pj);
  out.mean_cost = total / static_cast<double>(out.path.size());
  return out;
}

double mcd_db(const AudioClip& reference, const AudioClip& synthesized,
              const FeatureParams& params, int coeffs) {
  const CepstralFrames ca = mel_cepstra(reference, params, coeffs);
  const CepstralFrames cb = mel_cepstra(synthesized, params, coeffs);
  const DtwAlignment al = dtw_align(ca.values, ca.frames, cb.values, cb.frames, coeffs);
  // mean over the path of (10/ln10) * sqrt(2 * sum_d diff^2)
  const double k = 10.0 / std::log(10.0) * std::sqrt(2.0);
  return k * al.mean_cost;
}

double secs(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ValidationError("SECS: embedding dimension mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw ValidationError("SECS: zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sre_percent(const std::vector<SrePrediction>& predictions) {
  if (predictions.empty()) throw ValidationError("SRE: no predictions");
  int wrong = 0;
  for (const auto& p : predictions) {
    if (p.predicted != p.true_class) ++wrong;
  }
  return 100.0 * wrong / static_cast<double>(predictions.size());
}

GradCamHeatmap grad_cam(const SceneImage& image, int target_class,
                        const SceneEncoder& encoder) {
  if (!encoder.has_builtin()) {
    throw ValidationError(
        "Grad-CAM needs spatial feature maps: the file-based feature backbone has none; "
        "use a model with scene.backbone = builtin");
  }
  if (target_class < 0 || target_class >= encoder.config().num_classes) {
    throw ValidationError("Grad-CAM: target class out of range");
  }

  Tensor last_conv;
  Tensor feature = encoder.builtin().forward(image, &last_conv);
  Tensor logits = encoder.class_logits(encoder.encode_feature(feature));
  Tensor score = gather_flat(logits, {target_class});

  const_cast<SceneEncoder&>(encoder).zero_grads();
  backward(score);

  const Shape act_shape = last_conv.shape();  // [C, H', W']
  const int c = act_shape[0], h = act_shape[1], w = act_shape[2];
  const std::vector<double> grads = last_conv.grad();
  const std::vector<double>& acts = last_conv.value();

  std::vector<double> cam(static_cast<std::size_t>(h) * w, 0.0);
  const int hw = h * w;
  for (int ch = 0; ch < c; ++ch) {
    double alpha = 0.0;
    for (int i = 0; i < hw; ++i) alpha += grads[static_cast<std::size_t>(ch) * hw + i];
    alpha /= hw;
    for (int i = 0; i < hw; ++i) {
      cam[static_cast<std::size_t>(i)] += alpha * acts[static_cast<std::size_t>(ch) * hw + i];
    }
  }
  for (double& v : cam) v = std::max(v, 0.0);

  GradCamHeatmap heat;
  heat.target_class = target_class;
  heat.height = image.height;
  heat.width = image.width;
  heat.values = upsample_bilinear(cam, h, w, image.height, image.width);
  double mx = 0.0;
  for (double v : heat.values) mx = std::max(mx, v);
  if (mx > 0.0) {
    for (double& v : heat.values) v /= mx;
  } else {
    std::fill(heat.values.begin(), heat.values.end(), 0.0);
  }
  return heat;
}

TranscriptionProvider echo_transcription_provider() {
  return [](const AudioClip&, const ManifestEntry& entry) { return entry.transcript; };
}

void MetricReport::recompute() {
  total = static_cast<int>(records.size());
  succeeded = 0;
  double wer_sum = 0, mcd_sum = 0, secs_sum = 0;
  int wer_n = 0, mcd_n = 0, secs_n = 0, sre_n = 0, sre_wrong = 0;
  for (const auto& r : records) {
    if (!r.ok) continue;
    ++succeeded;
    if (r.wer) {
      wer_sum += *r.wer;
      ++wer_n;
    }
    if (r.mcd) {
      mcd_sum += *r.mcd;
      ++mcd_n;
    }
    if (r.secs) {
      secs_sum += *r.secs;
      ++secs_n;
    }
    if (r.predicted_class >= 0) {
      ++sre_n;
      if (r.predicted_class != r.true_class) ++sre_wrong;
    }
  }
  mean_wer = wer_n > 0 ? std::optional<double>(wer_sum / wer_n) : std::nullopt;
  mean_mcd = mcd_n > 0 ? std::optional<double>(mcd_sum / mcd_n) : std::nullopt;
  mean_secs = secs_n > 0 ? std::optional<double>(secs_sum / secs_n) : std::nullopt;
  sre = sre_n > 0 ? std::optional<double>(100.0 * sre_wrong / sre_n) : std::nullopt;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json jr{{"id", r.id}, {"ok", r.ok}, {"true_class", r.true_class}};
    if (!r.error.empty()) jr["error"] = r.error;
    if (r.wer) jr["wer"] = *r.wer;
    if (r.mcd) jr["mcd_db"] = *r.mcd;
    if (r.secs) jr["secs"] = *r.secs;
    if (r.predicted_class >= 0) jr["predicted_class"] = r.predicted_class;
    recs.push_back(std::move(jr));
  }
  nlohmann::json agg{{"total", total}, {"succeeded", succeeded}};
  if (mean_wer) agg["wer_percent"] = *mean_wer;
  if (mean_mcd) agg["mean_mcd_db"] = *mean_mcd;
  if (mean_secs) agg["mean_secs"] = *mean_secs;
  if (sre) agg["sre_percent"] = *sre;
  return nlohmann::json{{"records", recs}, {"aggregates", agg}};
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "id,ok,wer,mcd_db,secs,predicted_class,true_class\n";
  for (const auto& r : records) {
    out << r.id << "," << (r.ok ? 1 : 0) << ",";
    if (r.wer) out << *r.wer;
    out << ",";
    if (r.mcd) out << *r.mcd;
    out << ",";
    if (r.secs) out << *r.secs;
    out << ",";
    if (r.predicted_class >= 0) out << r.predicted_class;
    out << "," << r.true_class << "\n";
  }
  return out.str();
}

MetricReport evaluate(const EvalRequest& request) {
  if (request.manifest == nullptr) throw ValidationError("evaluate: no manifest");
  if (request.model == nullptr && !request.synth_override) {
    throw ValidationError("evaluate: no synthesizer");
  }
  const Manifest& manifest = *request.manifest;
  if (request.src != nullptr &&
      request.src->config().num_classes != manifest.num_classes) {
    throw ValidationError("evaluate: SRC has K=" +
                          std::to_string(request.src->config().num_classes) +
                          " but manifest has K=" + std::to_string(manifest.num_classes));
  }
  if (request.model != nullptr && request.model->config.scene.backbone == "file" &&
      request.file_backbone == nullptr && !request.synth_override) {
    throw ValidationError("evaluate: file scene backbone requires a features file");
  }

  const auto entries = manifest.split_entries(request.split);
  if (entries.empty()) {
    throw ValidationError("evaluate: split '" + split_name(request.split) + "' is empty");
  }

  CharFrontend frontend(request.model != nullptr ? request.model->config.backbone.vocab : 256);

  MetricReport report;
  std::uint64_t index = 0;
  for (const ManifestEntry* entry : entries) {
    EvalRecord rec;
    rec.id = std::filesystem::path(entry->clean_audio_path).stem().string();
    rec.true_class = entry->reverb_class;
    try {
      const CorpusItem corpus = load_corpus_item(*entry, manifest.features.sample_rate);
      const MelSpectrogram mel_gt = mel_spectrogram(corpus.reverberant, manifest.features);

      AudioClip synth;
      if (request.synth_override) {
        synth = request.synth_override(*entry, corpus);
      } else {
        SynthesisRequest sr;
        sr.text_ids = frontend.to_ids(entry->transcript);
        sr.speaker_ref = &mel_gt;
        sr.seed = request.seed + index;
        SceneImage image;
        if (request.model->config.scene.backbone == "file") {
          sr.scene_feature = request.file_backbone->lookup(entry->image_path);
        } else {
          image = read_png(entry->image_path);
          sr.image = &image;
        }
        synth = request.model->synthesize(sr);
      }

      rec.mcd = mcd_db(corpus.reverberant, synth, manifest.features, request.mcd_coeffs);

      if (request.model != nullptr) {
        const MelSpectrogram mel_syn = mel_spectrogram(synth, manifest.features);
        const std::vector<double> e_ref =
            request.model->speaker_encoder.forward(mel_gt).value();
        const std::vector<double> e_syn =
            request.model->speaker_encoder.forward(mel_syn).value();
        rec.secs = secs(e_ref, e_syn);
        if (request.src != nullptr) {
          rec.predicted_class = request.src->predict(mel_syn);
        }
      } else if (request.src != nullptr) {
        rec.predicted_class = request.src->predict(mel_spectrogram(synth, manifest.features));
      }

      if (request.asr) {
        const std::string hyp = request.asr(synth, *entry);
        rec.wer = word_error_rate(tokenize_words(entry->transcript), tokenize_words(hyp));
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
    ++index;
  }
  report.recompute();
  return report;
}

double ground_truth_sre(const Manifest& manifest, Split split, const SrcClassifier& src) {
  if (src.config().num_classes != manifest.num_classes) {
    throw ValidationError("ground_truth_sre: class count mismatch");
  }
  const auto entries = manifest.split_entries(split);
  std::vector<SrePrediction> preds;
  for (const ManifestEntry* entry : entries) {
    const CorpusItem corpus = load_corpus_item(*entry, manifest.features.sample_rate);
    const MelSpectrogram mel = mel_spectrogram(corpus.reverberant, manifest.features);
    preds.push_back({src.predict(mel), entry->reverb_class});
  }
  return sre_percent(preds);
}

}  // namespace scenetts
