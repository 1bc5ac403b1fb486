// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vbfusion/params.hpp"
#include "vbfusion/rng.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

/// Closed answer set restricted to the K most frequent training answers.
/// Samples whose answer falls outside the set carry the sentinel label
/// `size()` (one past the last class): excluded from the training loss,
/// always wrong in evaluation.
struct AnswerVocabulary {
  std::vector<std::string> answers;
  std::unordered_map<std::string, int> index;
  double coverage = 0.0;

  int size() const { return static_cast<int>(answers.size()); }
  int oov_id() const { return size(); }

  /// Class index, or the sentinel for out-of-vocabulary answers.
  int label_of(const std::string& answer) const {
    auto it = index.find(answer);
    return it == index.end() ? oov_id() : it->second;
  }
};

/// Top-K answers by descending frequency, ties broken lexicographically
/// ascending; coverage is the representable fraction of training instances.
inline AnswerVocabulary build_answer_vocab(
    const std::vector<std::string>& answers, int k_max) {
  if (k_max < 1) throw std::runtime_error("build_answer_vocab: K must be >= 1");
  if (answers.empty()) throw std::runtime_error("build_answer_vocab: no answers");
  std::map<std::string, long> freq;
  for (const std::string& a : answers) ++freq[a];
  std::vector<std::pair<std::string, long>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(entries.size()) > k_max) entries.resize(static_cast<size_t>(k_max));

  AnswerVocabulary vocab;
  long covered = 0;
  for (auto& [answer, count] : entries) {
    vocab.index.emplace(answer, vocab.size());
    vocab.answers.push_back(answer);
    covered += count;
  }
  vocab.coverage = static_cast<double>(covered) / static_cast<double>(answers.size());
  return vocab;
}

struct ClassifierConfig {
  int d = 128;       // pooled input dimension
  int hidden1 = 0;   // 0 defaults to d
  int hidden2 = 0;
  int classes = 2;
  uint64_t seed = 33;
};

/// Three-layer MLP over the pooled vector; the last layer has the dimension
/// of the answer set.
class Classifier {
 public:
  explicit Classifier(const ClassifierConfig& cfg) : cfg_(cfg) {
    if (cfg.classes < 1) throw std::runtime_error("classifier: classes must be >= 1");
    int h1 = cfg.hidden1 > 0 ? cfg.hidden1 : cfg.d;
    int h2 = cfg.hidden2 > 0 ? cfg.hidden2 : cfg.d;
    Pcg32 rng(cfg.seed);
    // fan-in scaled init; the 0.02 convention of the fusion stack is too
    // small here and starves the gradient signal through the two ReLUs
    auto he = [](int fan_in) { return std::sqrt(2.0 / fan_in); };
    w1_ = Parameter("classifier.w1", Tensor::randn({cfg.d, h1}, rng, he(cfg.d)));
    b1_ = Parameter("classifier.b1", Tensor({h1}));
    w2_ = Parameter("classifier.w2", Tensor::randn({h1, h2}, rng, he(h1)));
    b2_ = Parameter("classifier.b2", Tensor({h2}));
    w3_ = Parameter("classifier.w3",
                    Tensor::randn({h2, cfg.classes}, rng, he(h2)));
    b3_ = Parameter("classifier.b3", Tensor({cfg.classes}));
  }

  const ClassifierConfig& config() const { return cfg_; }

  /// Batched logits for m pooled rows: affine-ReLU-affine-ReLU-affine.
  Tensor classify_batch(const Tensor& pooled_rows) const {
    if (pooled_rows.rank() != 2 || pooled_rows.dim(1) != cfg_.d)
      throw std::runtime_error("classify: pooled width mismatch");
    Tensor h = relu(add_rowwise(matmul(pooled_rows, w1_.tensor), b1_.tensor));
    h = relu(add_rowwise(matmul(h, w2_.tensor), b2_.tensor));
    return add_rowwise(matmul(h, w3_.tensor), b3_.tensor);
  }

  /// Logits for a single pooled vector [d] -> [classes].
  Tensor classify(const Tensor& pooled) const {
    if (pooled.rank() != 1)
      throw std::runtime_error("classify: rank-1 pooled vector required");
    Tensor logits = classify_batch(reshape(pooled, {1, cfg_.d}));
    return reshape(logits, {cfg_.classes});
  }

  void collect(std::vector<Parameter*>& out) {
    for (Parameter* p : {&w1_, &b1_, &w2_, &b2_, &w3_, &b3_}) out.push_back(p);
  }

 private:
  ClassifierConfig cfg_;
  Parameter w1_, b1_, w2_, b2_, w3_, b3_;
};

/// Argmax with lowest-index tie-breaking.
inline int predict_index(const Tensor& logits) {
  if (logits.rank() != 1) throw std::runtime_error("predict: rank-1 logits required");
  int best = 0;
  const double* z = logits.data();
  for (int i = 1; i < logits.dim(0); ++i)
    if (z[i] > z[best]) best = i;
  return best;
}

inline std::pair<std::string, int> predict(const Tensor& logits,
                                           const AnswerVocabulary& vocab) {
  if (logits.dim(0) != vocab.size())
    throw std::runtime_error("predict: logit count does not match vocabulary");
  int idx = predict_index(logits);
  return {vocab.answers[static_cast<size_t>(idx)], idx};
}

inline nlohmann::json answer_vocab_to_json(const AnswerVocabulary& vocab) {
  return nlohmann::json{{"answers", vocab.answers}, {"coverage", vocab.coverage}};
}

inline AnswerVocabulary answer_vocab_from_json(const nlohmann::json& j) {
  AnswerVocabulary vocab;
  for (const auto& a : j.at("answers")) {
    std::string answer = a.get<std::string>();
    vocab.index.emplace(answer, vocab.size());
    vocab.answers.push_back(answer);
  }
  vocab.coverage = j.at("coverage").get<double>();
  return vocab;
}

}  // namespace vbf
