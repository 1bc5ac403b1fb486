// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "vbfusion/dataset.hpp"
#include "vbfusion/metrics.hpp"
#include "vbfusion/model.hpp"

namespace vbf {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 32;
  int max_epochs = 30;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; frozen parameters are never touched.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, const TrainConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (Parameter* p : params_) {
      m_.emplace_back(p->frozen ? 0 : p->tensor.size(), 0.0);
      v_.emplace_back(p->frozen ? 0 : p->tensor.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter* p = params_[i];
      if (p->frozen) continue;
      double* x = p->tensor.data();
      const double* g = p->tensor.grad();
      std::vector<double>& m = m_[i];
      std::vector<double>& v = v_[i];
      for (size_t j = 0; j < m.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        x[j] -= cfg_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
      }
    }
  }

  void zero_grad() { zero_grads(params_); }

 private:
  std::vector<Parameter*> params_;
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

/// One triplet ready for the fusion model: cached frozen features, token
/// ids and the class label (possibly the OOV sentinel).
struct PreparedSample {
  Tensor features;  // b x K leaf
  TokenSequence tokens;
  int label = 0;
  std::string answer;
  std::string type;
};

/// Extracts boxes and frozen features once per image (per-image generator
/// streams keyed by image index) and tokenizes every triplet of the split.
inline std::vector<PreparedSample> prepare_samples(
    const SyntheticDataset& ds, Split split, const VqaModel& model,
    const BoxExtractorConfig& boxes, const Vocabulary& vocab,
    const AnswerVocabulary& answers) {
  std::unordered_map<int, Tensor> feature_cache;
  std::vector<PreparedSample> out;
  for (const Triplet& t : ds.triplets) {
    if (ds.splits.split_of_tile(t.tile_id) != split) continue;
    int img_idx = ds.image_index(t.image_id);
    auto it = feature_cache.find(img_idx);
    if (it == feature_cache.end()) {
      Tensor feats = model.image_features(ds.images[static_cast<size_t>(img_idx)],
                                          boxes, static_cast<uint64_t>(img_idx));
      it = feature_cache.emplace(img_idx, std::move(feats)).first;
    }
    PreparedSample s;
    s.features = it->second;
    s.tokens = tokenize(t.question, vocab, model.config().max_text_len);
    s.label = answers.label_of(t.answer);
    s.answer = t.answer;
    s.type = to_string(t.type);
    out.push_back(std::move(s));
  }
  return out;
}

/// Dropout-off deterministic evaluation: a prediction is correct iff the
/// predicted answer string equals the ground truth; OOV-answer samples are
/// counted and always wrong.
inline MetricsReport evaluate(const VqaModel& model,
                              const std::vector<PreparedSample>& samples,
                              const AnswerVocabulary& answers,
                              std::vector<std::string>* predictions = nullptr) {
  if (samples.empty()) throw std::runtime_error("evaluate: empty split");
  NoGradGuard no_grad;
  std::vector<std::string> types;
  std::vector<bool> correct;
  for (const PreparedSample& s : samples) {
    Tensor logits = model.logits(s.features, s.tokens);
    auto [answer, idx] = predict(logits, answers);
    if (predictions) predictions->push_back(answer);
    types.push_back(s.type);
    correct.push_back(answer == s.answer);
  }
  return build_report(types, correct);
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  MetricsReport val;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_oa = 0.0;
};

inline nlohmann::json epoch_to_json(const EpochStats& e) {
  return nlohmann::json{{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val", report_to_json(e.val)}};
}

/// Mini-batch Adam training with seeded per-epoch shuffling. Validation
/// runs after every epoch; the parameter values of the best validation-OA
/// epoch (ties resolved to the earlier epoch) are restored at the end.
inline TrainResult train(VqaModel& model,
                         const std::vector<PreparedSample>& train_samples,
                         const std::vector<PreparedSample>& val_samples,
                         const AnswerVocabulary& answers,
                         const TrainConfig& cfg) {
  if (train_samples.empty()) throw std::runtime_error("train: empty train split");
  std::vector<Parameter*> params = model.parameters();
  Adam opt(params, cfg);
  Pcg32 shuffle_rng(cfg.seed, 1);
  Pcg32 dropout_rng(cfg.seed, 2);

  TrainResult result;
  result.best_val_oa = -1.0;
  std::vector<std::vector<double>> best_values;

  std::vector<size_t> order(train_samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Fisher-Yates with the epoch-independent stream keeps runs bit-identical
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = shuffle_rng.bounded(static_cast<uint32_t>(i));
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    long loss_count = 0;
    size_t pos = 0;
    int step_idx = 0;
    while (pos < order.size()) {
      size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
      std::vector<Tensor> pooled_rows;
      std::vector<int> labels;
      int n_eff = 0;
      for (size_t k = pos; k < end; ++k) {
        const PreparedSample& s = train_samples[order[k]];
        if (s.label < answers.size()) ++n_eff;
      }
      if (n_eff == 0) {
        pos = end;  // every answer in the batch is out of vocabulary
        continue;
      }
      double loss_value;
      try {
        for (size_t k = pos; k < end; ++k) {
          const PreparedSample& s = train_samples[order[k]];
          Pcg32* drop = model.config().dropout > 0.0 ? &dropout_rng : nullptr;
          pooled_rows.push_back(
              reshape(model.pooled(s.features, s.tokens, drop),
                      {1, model.config().d}));
          labels.push_back(s.label);
        }
        Tensor logits = model.head().classify_batch(concat(pooled_rows, 0));
        Tensor loss = cross_entropy_loss(logits, labels);
        loss_value = loss.item();
        if (!std::isfinite(loss_value))
          throw std::runtime_error("non-finite loss");
        opt.zero_grad();
        backward(loss);
        opt.step();
      } catch (const std::exception& e) {
        throw std::runtime_error("training diverged at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(step_idx) + ": " + e.what());
      }
      loss_sum += loss_value * n_eff;
      loss_count += n_eff;
      pos = end;
      ++step_idx;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    stats.val = evaluate(model, val_samples, answers);
    if (stats.val.oa > result.best_val_oa) {
      result.best_val_oa = stats.val.oa;
      result.best_epoch = epoch;
      best_values.clear();
      for (Parameter* p : params) best_values.push_back(p->tensor.values());
    }
    result.history.push_back(std::move(stats));
  }

  if (!best_values.empty())
    for (size_t i = 0; i < params.size(); ++i)
      params[i]->tensor.values() = best_values[i];
  return result;
}

}  // namespace vbf
