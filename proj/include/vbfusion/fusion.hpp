// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vbfusion/params.hpp"
#include "vbfusion/rng.hpp"
#include "vbfusion/tensor.hpp"
#include "vbfusion/text_pipeline.hpp"

namespace vbf {

struct FusionConfig {
  int l = 4;             // transformer layers
  int d = 128;           // hidden dimension
  int heads = 8;
  int v = 64;            // visual embedding dimension
  int max_text_len = 24;
  int b = 10;            // visual token count
  int vocab_size = 4;
  double dropout = 0.0;
  uint64_t seed = 1;
  bool mean_pool = false;  // pool the masked mean instead of the CLS position
};

struct FusedOutput {
  Tensor pooled;    // [d]
  Tensor sequence;  // [(b + max_text_len) x d] last hidden state
  // One tensor per layer, shaped heads x L x L, when requested.
  std::vector<Tensor> attention_maps;
};

/// Multi-modal fusion: projects visual features and embedded text tokens
/// into a joint sequence [Z, T], runs l multi-head self-attention layers over
/// it and pools a single vector.
///
/// Visual tokens come first, so the CLS position is index b. Visual tokens
/// get a segment embedding but no position embedding; boxes are semantically
/// unordered and the pooled output is invariant under their permutation.
class FusionModel {
 public:
  struct Layer {
    Parameter wq, bq, wk, wv, bv, wo, bo;  // key bias omitted: softmax is
    // invariant to per-row constant score shifts, so it would never train
    Parameter ln1_gain, ln1_bias;
    Parameter ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Parameter ln2_gain, ln2_bias;
  };

  explicit FusionModel(const FusionConfig& cfg) : cfg_(cfg) {
    if (cfg.d % cfg.heads != 0)
      throw std::runtime_error("fusion: d must be divisible by heads");
    if (cfg.l < 1) throw std::runtime_error("fusion: l must be >= 1");
    Pcg32 rng(cfg.seed);
    auto w = [&](const std::string& name, int rows, int cols) {
      return Parameter(name, Tensor::randn({rows, cols}, rng, 0.02));
    };
    auto zeros = [&](const std::string& name, int n) {
      return Parameter(name, Tensor({n}));
    };
    auto ones = [&](const std::string& name, int n) {
      return Parameter(name, Tensor::full({n}, 1.0));
    };

    token_emb_ = w("fusion.token_emb", cfg.vocab_size, cfg.d);
    pos_emb_ = w("fusion.pos_emb", cfg.max_text_len, cfg.d);
    seg_emb_ = w("fusion.seg_emb", 2, cfg.d);
    vis_w_ = w("fusion.visual.weight", cfg.v, cfg.d);
    vis_b_ = zeros("fusion.visual.bias", cfg.d);
    for (int i = 0; i < cfg.l; ++i) {
      std::string base = "fusion.layer" + std::to_string(i);
      Layer layer{
          w(base + ".attn.wq", cfg.d, cfg.d), zeros(base + ".attn.bq", cfg.d),
          w(base + ".attn.wk", cfg.d, cfg.d),
          w(base + ".attn.wv", cfg.d, cfg.d), zeros(base + ".attn.bv", cfg.d),
          w(base + ".attn.wo", cfg.d, cfg.d), zeros(base + ".attn.bo", cfg.d),
          ones(base + ".ln1.gain", cfg.d),    zeros(base + ".ln1.bias", cfg.d),
          w(base + ".ffn.w1", cfg.d, 4 * cfg.d), zeros(base + ".ffn.b1", 4 * cfg.d),
          w(base + ".ffn.w2", 4 * cfg.d, cfg.d), zeros(base + ".ffn.b2", cfg.d),
          ones(base + ".ln2.gain", cfg.d),    zeros(base + ".ln2.bias", cfg.d)};
      layers_.push_back(std::move(layer));
    }
    pool_w_ = w("fusion.pooler.weight", cfg.d, cfg.d);
    pool_b_ = zeros("fusion.pooler.bias", cfg.d);
  }

  const FusionConfig& config() const { return cfg_; }
  int sequence_len() const { return cfg_.b + cfg_.max_text_len; }

  /// Token embedding + learned position embedding + text segment (0).
  Tensor embed_text(const TokenSequence& tokens) const {
    if (static_cast<int>(tokens.ids.size()) != cfg_.max_text_len)
      throw std::runtime_error("embed_text: sequence length mismatch");
    std::vector<int> positions(tokens.ids.size());
    for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
    std::vector<int> segment(tokens.ids.size(), 0);
    return add(add(embedding(token_emb_.tensor, tokens.ids),
                   embedding(pos_emb_.tensor, positions)),
               embedding(seg_emb_.tensor, segment));
  }

  /// Affine v -> d projection + visual segment (1); no position embedding.
  Tensor embed_visual(const Tensor& z) const {
    if (z.rank() != 2 || z.dim(1) != cfg_.v)
      throw std::runtime_error("embed_visual: feature width mismatch");
    std::vector<int> segment(static_cast<size_t>(z.dim(0)), 1);
    return add(add_rowwise(matmul(z, vis_w_.tensor), vis_b_.tensor),
               embedding(seg_emb_.tensor, segment));
  }

  /// One pre-softmax-masked multi-head attention block with residual + layer
  /// norm, then a GELU feed-forward (inner dim 4d) with residual + layer
  /// norm. Masked positions contribute exactly zero attention weight.
  Tensor self_attention_layer(const Tensor& x, const std::vector<int>& mask,
                              int layer_idx, Pcg32* dropout_rng = nullptr,
                              Tensor* attention_out = nullptr) const {
    const Layer& layer = layers_.at(static_cast<size_t>(layer_idx));
    int len = x.dim(0);
    int dh = cfg_.d / cfg_.heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = add_rowwise(matmul(x, layer.wq.tensor), layer.bq.tensor);
    Tensor k = matmul(x, layer.wk.tensor);
    Tensor v = add_rowwise(matmul(x, layer.wv.tensor), layer.bv.tensor);

    std::vector<Tensor> head_ctx;
    std::vector<Tensor> head_attn;
    for (int h = 0; h < cfg_.heads; ++h) {
      Tensor qh = slice(q, 1, h * dh, dh);
      Tensor kh = slice(k, 1, h * dh, dh);
      Tensor vh = slice(v, 1, h * dh, dh);
      Tensor scores = mul_scalar(matmul(qh, transpose(kh)), scale);
      Tensor attn = softmax_masked_rows(scores, mask);
      if (attention_out) head_attn.push_back(reshape(attn, {1, len, len}));
      if (dropout_rng && cfg_.dropout > 0.0)
        attn = dropout(attn, cfg_.dropout, *dropout_rng);
      head_ctx.push_back(matmul(attn, vh));
    }
    if (attention_out) *attention_out = concat(head_attn, 0);

    Tensor ctx = concat(head_ctx, 1);
    Tensor attn_out = add_rowwise(matmul(ctx, layer.wo.tensor), layer.bo.tensor);
    if (dropout_rng && cfg_.dropout > 0.0)
      attn_out = dropout(attn_out, cfg_.dropout, *dropout_rng);
    Tensor h1 = layer_norm(add(x, attn_out), layer.ln1_gain.tensor,
                           layer.ln1_bias.tensor);

    Tensor ff = add_rowwise(
        matmul(gelu(add_rowwise(matmul(h1, layer.ffn_w1.tensor),
                                layer.ffn_b1.tensor)),
               layer.ffn_w2.tensor),
        layer.ffn_b2.tensor);
    if (dropout_rng && cfg_.dropout > 0.0)
      ff = dropout(ff, cfg_.dropout, *dropout_rng);
    return layer_norm(add(h1, ff), layer.ln2_gain.tensor, layer.ln2_bias.tensor);
  }

  /// Full fusion pass over the concatenated [Z, T] sequence.
  FusedOutput fuse(const Tensor& z, const TokenSequence& tokens,
                   Pcg32* dropout_rng = nullptr,
                   bool want_attention = false) const {
    if (z.rank() != 2 || z.dim(0) != cfg_.b)
      throw std::runtime_error("fuse: expected exactly b visual rows");
    Tensor x = concat({embed_visual(z), embed_text(tokens)}, 0);
    std::vector<int> mask(static_cast<size_t>(cfg_.b), 1);
    mask.insert(mask.end(), tokens.attention_mask.begin(),
                tokens.attention_mask.end());

    FusedOutput out;
    for (int i = 0; i < cfg_.l; ++i) {
      Tensor attn;
      x = self_attention_layer(x, mask, i, dropout_rng,
                               want_attention ? &attn : nullptr);
      if (want_attention) out.attention_maps.push_back(attn);
    }
    out.sequence = x;

    Tensor pre_pool;
    if (cfg_.mean_pool) {
      double count = 0.0;
      for (int m : mask) count += m;
      Tensor mask_row({1, static_cast<int>(mask.size())});
      for (size_t i = 0; i < mask.size(); ++i)
        mask_row.data()[i] = mask[i] / count;
      pre_pool = matmul(mask_row, x);
    } else {
      pre_pool = slice(x, 0, cfg_.b, 1);  // CLS position
    }
    Tensor pooled =
        tanh(add_rowwise(matmul(pre_pool, pool_w_.tensor), pool_b_.tensor));
    out.pooled = reshape(pooled, {cfg_.d});
    return out;
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&token_emb_);
    out.push_back(&pos_emb_);
    out.push_back(&seg_emb_);
    out.push_back(&vis_w_);
    out.push_back(&vis_b_);
    for (Layer& layer : layers_) {
      for (Parameter* p :
           {&layer.wq, &layer.bq, &layer.wk, &layer.wv, &layer.bv,
            &layer.wo, &layer.bo, &layer.ln1_gain, &layer.ln1_bias,
            &layer.ffn_w1, &layer.ffn_b1, &layer.ffn_w2, &layer.ffn_b2,
            &layer.ln2_gain, &layer.ln2_bias})
        out.push_back(p);
    }
    out.push_back(&pool_w_);
    out.push_back(&pool_b_);
  }

 private:
  FusionConfig cfg_;
  Parameter token_emb_, pos_emb_, seg_emb_, vis_w_, vis_b_;
  std::vector<Layer> layers_;
  Parameter pool_w_, pool_b_;
};

}  // namespace vbf
