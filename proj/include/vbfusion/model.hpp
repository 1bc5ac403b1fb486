// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vbfusion/answer_head.hpp"
#include "vbfusion/box_extractor.hpp"
#include "vbfusion/fusion.hpp"
#include "vbfusion/image_encoder.hpp"
#include "vbfusion/params.hpp"
#include "vbfusion/text_pipeline.hpp"

namespace vbf {

/// Resolved hyperparameters of the full model. `vocab_size` and `classes`
/// come from the training split's vocabularies.
struct ModelConfig {
  int bands = 3;
  int l = 2;
  int d = 64;
  int heads = 4;
  int v = 64;
  int max_text_len = 24;
  int b = 10;            // visual tokens per image
  int box_h = 16;        // H' (encoder input height)
  int box_w = 16;        // W'
  double dropout = 0.0;
  int vocab_size = 4;
  int classes = 2;
  uint64_t seed = 1;
  bool mean_pool = false;
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return nlohmann::json{
      {"bands", c.bands},   {"l", c.l},
      {"d", c.d},           {"heads", c.heads},
      {"v", c.v},           {"max_text_len", c.max_text_len},
      {"b", c.b},           {"box_h", c.box_h},
      {"box_w", c.box_w},   {"dropout", c.dropout},
      {"vocab_size", c.vocab_size}, {"classes", c.classes},
      {"seed", c.seed},     {"mean_pool", c.mean_pool}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.bands = j.at("bands").get<int>();
  c.l = j.at("l").get<int>();
  c.d = j.at("d").get<int>();
  c.heads = j.at("heads").get<int>();
  c.v = j.at("v").get<int>();
  c.max_text_len = j.at("max_text_len").get<int>();
  c.b = j.at("b").get<int>();
  c.box_h = j.at("box_h").get<int>();
  c.box_w = j.at("box_w").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.classes = j.at("classes").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  c.mean_pool = j.at("mean_pool").get<bool>();
  return c;
}

/// The full pipeline: frozen conv encoder + trainable projection, the
/// fusion transformer, and the answer classifier.
class VqaModel {
 public:
  explicit VqaModel(const ModelConfig& cfg)
      : cfg_(cfg),
        encoder_(EncoderConfig{cfg.bands,
                               {8, 16, 32},
                               cfg.box_h,
                               cfg.box_w,
                               cfg.v,
                               cfg.seed}),
        fusion_(FusionConfig{cfg.l, cfg.d, cfg.heads, cfg.v, cfg.max_text_len,
                             cfg.b, cfg.vocab_size, cfg.dropout, cfg.seed + 1,
                             cfg.mean_pool}),
        head_(ClassifierConfig{cfg.d, 0, 0, cfg.classes, cfg.seed + 2}) {}

  const ModelConfig& config() const { return cfg_; }
  ImageEncoder& encoder() { return encoder_; }
  const ImageEncoder& encoder() const { return encoder_; }
  FusionModel& fusion() { return fusion_; }
  const FusionModel& fusion() const { return fusion_; }
  Classifier& head() { return head_; }
  const Classifier& head() const { return head_; }

  /// Frozen per-image preprocessing: sample boxes from the image's own
  /// generator stream, crop + resize, run the frozen encoder. The result is
  /// the b x K leaf feature matrix reused across epochs.
  Tensor image_features(const MultispectralImage& img,
                        const BoxExtractorConfig& boxes,
                        uint64_t image_stream) const {
    Pcg32 rng(boxes.seed, image_stream);
    return encoder_.encode(extract(img, boxes, rng));
  }

  /// Pooled fusion vector for one sample.
  Tensor pooled(const Tensor& features, const TokenSequence& tokens,
                Pcg32* dropout_rng = nullptr) const {
    return fusion_.fuse(encoder_.project(features), tokens, dropout_rng).pooled;
  }

  /// Logits for one sample (graph-building; wrap in NoGradGuard for eval).
  Tensor logits(const Tensor& features, const TokenSequence& tokens,
                Pcg32* dropout_rng = nullptr) const {
    return head_.classify(pooled(features, tokens, dropout_rng));
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    encoder_.collect(out);
    fusion_.collect(out);
    head_.collect(out);
    check_unique_names(out);
    return out;
  }

  void save(const std::string& path) { save_checkpoint(path, parameters()); }
  void load(const std::string& path) { load_checkpoint(path, parameters()); }

 private:
  ModelConfig cfg_;
  ImageEncoder encoder_;
  FusionModel fusion_;
  Classifier head_;
};

}  // namespace vbf
