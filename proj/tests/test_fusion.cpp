// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "vbfusion/fusion.hpp"
#include "vbfusion/grad_check.hpp"

using vbf::FusionConfig;
using vbf::FusionModel;
using vbf::Tensor;
using vbf::TokenSequence;

namespace {

FusionConfig toy_config() {
  FusionConfig cfg;
  cfg.l = 2;
  cfg.d = 32;
  cfg.heads = 2;
  cfg.v = 8;
  cfg.max_text_len = 8;
  cfg.b = 3;
  cfg.vocab_size = 12;
  cfg.seed = 5;
  return cfg;
}

TokenSequence toy_tokens(int max_len, std::vector<int> word_ids) {
  TokenSequence seq;
  seq.ids.assign(static_cast<size_t>(max_len), 0);
  seq.attention_mask.assign(static_cast<size_t>(max_len), 0);
  size_t pos = 0;
  seq.ids[pos++] = 1;  // CLS
  for (int id : word_ids) seq.ids[pos++] = id;
  seq.ids[pos++] = 2;  // SEP
  seq.true_length = static_cast<int>(pos);
  for (size_t i = 0; i < pos; ++i) seq.attention_mask[i] = 1;
  return seq;
}

}  // namespace

TEST(EmbedText, PositionsMakeTheOnlyDifference) {
  FusionModel model(toy_config());
  TokenSequence seq = toy_tokens(8, {7, 7});
  Tensor emb = model.embed_text(seq);
  ASSERT_EQ(emb.shape(), (std::vector<int>{8, 32}));

  std::vector<vbf::Parameter*> params;
  model.collect(params);
  const Tensor* pos_emb = nullptr;
  for (auto* p : params)
    if (p->name == "fusion.pos_emb") pos_emb = &p->tensor;
  ASSERT_NE(pos_emb, nullptr);
  // rows 1 and 2 hold the same token at different positions
  for (int j = 0; j < 32; ++j) {
    double diff = emb.data()[1 * 32 + j] - emb.data()[2 * 32 + j];
    double pos_diff = pos_emb->data()[1 * 32 + j] - pos_emb->data()[2 * 32 + j];
    EXPECT_NEAR(diff, pos_diff, 1e-12);
  }
}

TEST(EmbedText, OutOfRangeIdIsAnError) {
  FusionModel model(toy_config());
  TokenSequence seq = toy_tokens(8, {100});
  EXPECT_THROW(model.embed_text(seq), std::runtime_error);
}

TEST(EmbedVisual, RowwiseAndPositionFree) {
  FusionModel model(toy_config());
  vbf::Pcg32 rng(3);
  Tensor z = Tensor::randn({3, 8}, rng, 1.0);
  // duplicate row 0 into row 2
  for (int j = 0; j < 8; ++j) z.data()[2 * 8 + j] = z.data()[j];
  Tensor emb = model.embed_visual(z);
  for (int j = 0; j < 32; ++j)
    EXPECT_EQ(emb.data()[j], emb.data()[2 * 32 + j]);
}

TEST(EmbedVisual, ZeroInputGivesSegmentPlusBias) {
  FusionModel model(toy_config());
  Tensor z({3, 8});
  Tensor emb = model.embed_visual(z);
  std::vector<vbf::Parameter*> params;
  model.collect(params);
  const Tensor *seg = nullptr, *bias = nullptr;
  for (auto* p : params) {
    if (p->name == "fusion.seg_emb") seg = &p->tensor;
    if (p->name == "fusion.visual.bias") bias = &p->tensor;
  }
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < 32; ++j)
      EXPECT_NEAR(emb.data()[r * 32 + j],
                  seg->data()[1 * 32 + j] + bias->data()[j], 1e-15);
}

TEST(SelfAttention, ConstantInputGivesUniformWeights) {
  FusionConfig cfg = toy_config();
  FusionModel model(cfg);
  Tensor x = Tensor::full({6, 32}, 0.7);
  std::vector<int> mask = {1, 1, 1, 1, 0, 0};
  Tensor attn;
  model.self_attention_layer(x, mask, 0, nullptr, &attn);
  ASSERT_EQ(attn.shape(), (std::vector<int>{2, 6, 6}));
  for (int h = 0; h < 2; ++h)
    for (int q = 0; q < 6; ++q)
      for (int k = 0; k < 6; ++k) {
        double w = attn.data()[(h * 6 + q) * 6 + k];
        if (mask[static_cast<size_t>(k)])
          EXPECT_NEAR(w, 0.25, 1e-12);
        else
          EXPECT_EQ(w, 0.0);
      }
}

TEST(SelfAttention, SingleUnmaskedPositionAttendsToItself) {
  FusionModel model(toy_config());
  vbf::Pcg32 rng(7);
  Tensor x = Tensor::randn({4, 32}, rng, 0.5);
  std::vector<int> mask = {0, 0, 1, 0};
  Tensor attn;
  model.self_attention_layer(x, mask, 1, nullptr, &attn);
  for (int h = 0; h < 2; ++h)
    for (int q = 0; q < 4; ++q)
      for (int k = 0; k < 4; ++k)
        EXPECT_EQ(attn.data()[(h * 4 + q) * 4 + k], k == 2 ? 1.0 : 0.0);
}

TEST(SelfAttention, MaskedKeysGetZeroWeight) {
  FusionModel model(toy_config());
  vbf::Pcg32 rng(9);
  Tensor x = Tensor::randn({5, 32}, rng, 2.0);
  std::vector<int> mask = {1, 0, 1, 1, 0};
  Tensor attn;
  model.self_attention_layer(x, mask, 0, nullptr, &attn);
  for (int h = 0; h < 2; ++h)
    for (int q = 0; q < 5; ++q) {
      double sum = 0.0;
      for (int k = 0; k < 5; ++k) {
        double w = attn.data()[(h * 5 + q) * 5 + k];
        if (!mask[static_cast<size_t>(k)]) EXPECT_LT(w, 1e-12);
        sum += w;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Fuse, ShapeContract) {
  FusionConfig cfg = toy_config();
  cfg.b = 5;
  cfg.max_text_len = 16;
  FusionModel model(cfg);
  vbf::Pcg32 rng(11);
  Tensor z = Tensor::randn({5, 8}, rng, 0.5);
  TokenSequence seq = toy_tokens(16, {4, 5, 6});
  vbf::FusedOutput out = model.fuse(z, seq);
  EXPECT_EQ(out.sequence.shape(), (std::vector<int>{21, 32}));
  EXPECT_EQ(out.pooled.shape(), (std::vector<int>{32}));
}

TEST(Fuse, PooledInvariantUnderVisualPermutation) {
  FusionConfig cfg = toy_config();
  FusionModel model(cfg);
  vbf::Pcg32 rng(13);
  TokenSequence seq = toy_tokens(8, {4, 7});
  for (int trial = 0; trial < 20; ++trial) {
    Tensor z = Tensor::randn({3, 8}, rng, 0.8);
    Tensor pooled1 = model.fuse(z, seq).pooled;
    // rotate rows 0 <- 1 <- 2 <- 0
    Tensor zp({3, 8});
    for (int j = 0; j < 8; ++j) {
      zp.data()[0 * 8 + j] = z.data()[1 * 8 + j];
      zp.data()[1 * 8 + j] = z.data()[2 * 8 + j];
      zp.data()[2 * 8 + j] = z.data()[0 * 8 + j];
    }
    Tensor pooled2 = model.fuse(zp, seq).pooled;
    for (int j = 0; j < 32; ++j)
      ASSERT_NEAR(pooled1.data()[j], pooled2.data()[j], 1e-9);
  }
}

TEST(Fuse, PadTokenIdChangeIsInvisible) {
  FusionConfig cfg = toy_config();
  FusionModel model(cfg);
  vbf::Pcg32 rng(17);
  Tensor z = Tensor::randn({3, 8}, rng, 0.5);
  TokenSequence seq = toy_tokens(8, {4});  // CLS w SEP PAD*5
  Tensor pooled1 = model.fuse(z, seq).pooled;
  TokenSequence altered = seq;
  altered.ids[6] = 9;  // still masked out
  Tensor pooled2 = model.fuse(z, altered).pooled;
  for (int j = 0; j < 32; ++j)
    ASSERT_EQ(pooled1.data()[j], pooled2.data()[j]);  // exactly zero change
}

TEST(Fuse, AttentionRowsSumToOneInEveryLayerAndHead) {
  FusionConfig cfg = toy_config();
  cfg.l = 3;
  FusionModel model(cfg);
  vbf::Pcg32 rng(19);
  Tensor z = Tensor::randn({3, 8}, rng, 1.0);
  TokenSequence seq = toy_tokens(8, {5, 6, 7});
  vbf::FusedOutput out = model.fuse(z, seq, nullptr, /*want_attention=*/true);
  ASSERT_EQ(out.attention_maps.size(), 3u);
  int len = model.sequence_len();
  for (const Tensor& attn : out.attention_maps) {
    ASSERT_EQ(attn.shape(), (std::vector<int>{2, len, len}));
    for (int h = 0; h < 2; ++h)
      for (int q = 0; q < len; ++q) {
        double sum = 0.0;
        for (int k = 0; k < len; ++k) sum += attn.data()[(h * len + q) * len + k];
        ASSERT_NEAR(sum, 1.0, 1e-9);
      }
  }
}

TEST(Fuse, FullDepthTwelveLayersBuilds) {
  FusionConfig cfg = toy_config();
  cfg.l = 12;
  FusionModel model(cfg);
  std::vector<vbf::Parameter*> params;
  model.collect(params);
  int layer_params = 0;
  for (auto* p : params)
    if (p->name.find("fusion.layer") == 0) ++layer_params;
  EXPECT_EQ(layer_params, 12 * 15);
}

TEST(Fuse, DropoutDeterministicGivenSeed) {
  FusionConfig cfg = toy_config();
  cfg.dropout = 0.3;
  FusionModel model(cfg);
  vbf::Pcg32 rng(23);
  Tensor z = Tensor::randn({3, 8}, rng, 0.5);
  TokenSequence seq = toy_tokens(8, {4, 5});
  vbf::Pcg32 drop1(101), drop2(101), drop3(202);
  Tensor a = model.fuse(z, seq, &drop1).pooled;
  Tensor b = model.fuse(z, seq, &drop2).pooled;
  Tensor c = model.fuse(z, seq, &drop3).pooled;
  bool same_seed_equal = true, diff_seed_equal = true;
  for (int j = 0; j < 32; ++j) {
    same_seed_equal = same_seed_equal && a.data()[j] == b.data()[j];
    diff_seed_equal = diff_seed_equal && a.data()[j] == c.data()[j];
  }
  EXPECT_TRUE(same_seed_equal);
  EXPECT_FALSE(diff_seed_equal);
}

TEST(Fuse, MeanPoolFlagWorks) {
  FusionConfig cfg = toy_config();
  cfg.mean_pool = true;
  FusionModel model(cfg);
  vbf::Pcg32 rng(29);
  Tensor z = Tensor::randn({3, 8}, rng, 0.5);
  TokenSequence seq = toy_tokens(8, {4});
  Tensor pooled = model.fuse(z, seq).pooled;
  EXPECT_EQ(pooled.shape(), (std::vector<int>{32}));
  for (int j = 0; j < 32; ++j) EXPECT_TRUE(std::isfinite(pooled.data()[j]));
}
