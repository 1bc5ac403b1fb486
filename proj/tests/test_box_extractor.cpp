// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "vbfusion/box_extractor.hpp"

using vbf::BoxExtractorConfig;
using vbf::BoxSpec;
using vbf::MultispectralImage;
using vbf::Tensor;

namespace {

// Independent brute-force oracle: plain 16-tap kernel-sum per output pixel,
// no separable passes, no deviation form.
double oracle_pixel(const double* plane, int h, int w, int oy, int ox,
                    int h_out, int w_out) {
  auto kernel = [](double t) {
    t = std::abs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return -0.5 * (((t - 5.0) * t + 8.0) * t - 4.0);
    return 0.0;
  };
  double sy = (oy + 0.5) * (static_cast<double>(h) / h_out) - 0.5;
  double sx = (ox + 0.5) * (static_cast<double>(w) / w_out) - 0.5;
  int iy = static_cast<int>(std::floor(sy));
  int ix = static_cast<int>(std::floor(sx));
  double acc = 0.0;
  for (int j = -1; j <= 2; ++j)
    for (int i = -1; i <= 2; ++i) {
      double wy = kernel(sy - (iy + j));
      double wx = kernel(sx - (ix + i));
      int py = std::clamp(iy + j, 0, h - 1);
      int px = std::clamp(ix + i, 0, w - 1);
      acc += wy * wx * plane[py * w + px];
    }
  return acc;
}

MultispectralImage random_image(int c, int h, int w, uint64_t seed) {
  MultispectralImage img(c, h, w);
  vbf::Pcg32 rng(seed);
  for (double& v : img.values) v = rng.uniform();
  return img;
}

}  // namespace

TEST(SampleBoxes, ConstraintsForceFullImage) {
  BoxExtractorConfig cfg;
  cfg.b = 2;
  cfg.min_h = 4;
  cfg.min_w = 4;
  vbf::Pcg32 rng(1);
  auto boxes = vbf::sample_boxes(4, 4, cfg, rng);
  ASSERT_EQ(boxes.size(), 2u);
  for (const BoxSpec& b : boxes) {
    EXPECT_EQ(b, (BoxSpec{0, 4, 0, 4}));
  }
}

TEST(SampleBoxes, PaperScaleConfigSatisfiesMinima) {
  BoxExtractorConfig cfg;
  cfg.b = 10;
  cfg.min_h = 64;
  cfg.min_w = 64;
  vbf::Pcg32 rng(2);
  auto boxes = vbf::sample_boxes(256, 256, cfg, rng);
  ASSERT_EQ(boxes.size(), 10u);
  for (const BoxSpec& b : boxes) {
    EXPECT_GE(b.height(), 64);
    EXPECT_GE(b.width(), 64);
    EXPECT_GE(b.s_h, 0);
    EXPECT_LE(b.e_h, 256);
  }
}

TEST(SampleBoxes, DeterministicUnderSeed) {
  BoxExtractorConfig cfg;
  cfg.b = 8;
  vbf::Pcg32 rng1(42), rng2(42);
  auto a = vbf::sample_boxes(100, 80, cfg, rng1);
  auto b = vbf::sample_boxes(100, 80, cfg, rng2);
  EXPECT_EQ(a, b);
}

TEST(SampleBoxes, TooSmallImageIsAnError) {
  BoxExtractorConfig cfg;
  cfg.min_h = 10;
  cfg.min_w = 10;
  vbf::Pcg32 rng(1);
  try {
    vbf::sample_boxes(8, 20, cfg, rng);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("image smaller than minimum box"),
              std::string::npos);
  }
}

TEST(SampleBoxes, TenThousandBoxesZeroViolations) {
  vbf::Pcg32 meta(77);
  int boxes_total = 0;
  for (int c = 0; c < 100; ++c) {
    int H = meta.uniform_int(4, 300);
    int W = meta.uniform_int(4, 300);
    BoxExtractorConfig cfg;
    cfg.b = 100;
    cfg.min_h = meta.uniform_int(1, H);
    cfg.min_w = meta.uniform_int(1, W);
    vbf::Pcg32 rng(meta.next_u64());
    auto boxes = vbf::sample_boxes(H, W, cfg, rng);
    for (const BoxSpec& b : boxes) {
      ASSERT_TRUE(0 <= b.s_h && b.s_h < b.e_h && b.e_h <= H);
      ASSERT_TRUE(0 <= b.s_w && b.s_w < b.e_w && b.e_w <= W);
      ASSERT_GE(b.height(), cfg.min_h);
      ASSERT_GE(b.width(), cfg.min_w);
      ++boxes_total;
    }
  }
  EXPECT_EQ(boxes_total, 10000);
}

TEST(Crop, FullImageBoxIsIdentity) {
  MultispectralImage img = random_image(3, 5, 7, 9);
  Tensor out = vbf::crop(img, {0, 5, 0, 7});
  ASSERT_EQ(out.shape(), (std::vector<int>{3, 5, 7}));
  for (size_t i = 0; i < img.values.size(); ++i)
    EXPECT_EQ(out.data()[i], img.values[i]);
}

TEST(Crop, SinglePixelBox) {
  MultispectralImage img = random_image(4, 6, 6, 10);
  Tensor out = vbf::crop(img, {2, 3, 4, 5});
  ASSERT_EQ(out.shape(), (std::vector<int>{4, 1, 1}));
  for (int band = 0; band < 4; ++band)
    EXPECT_EQ(out.data()[band], img.at(band, 2, 4));
}

TEST(Crop, CompositionMatchesSingleCrop) {
  MultispectralImage img = random_image(2, 10, 10, 11);
  Tensor once = vbf::crop(img, {2, 8, 3, 9});
  // crop the crop with its own full box
  MultispectralImage sub(2, 6, 6);
  sub.values.assign(once.data(), once.data() + once.size());
  Tensor twice = vbf::crop(sub, {0, 6, 0, 6});
  for (size_t i = 0; i < once.size(); ++i)
    EXPECT_EQ(twice.data()[i], once.data()[i]);
}

TEST(Crop, OutOfBoundsIsAnError) {
  MultispectralImage img = random_image(1, 4, 4, 12);
  EXPECT_THROW(vbf::crop(img, {0, 5, 0, 4}), std::runtime_error);
  EXPECT_THROW(vbf::crop(img, {2, 2, 0, 4}), std::runtime_error);
}

TEST(Bicubic, ConstantReproductionExact) {
  Tensor src = Tensor::full({2, 6, 5}, 5.0);
  for (auto [ho, wo] : {std::pair{3, 9}, {13, 2}, {6, 5}, {1, 1}}) {
    Tensor out = vbf::bicubic_resize(src, ho, wo);
    for (size_t i = 0; i < out.size(); ++i)
      ASSERT_EQ(out.data()[i], 5.0);  // bit-exact
  }
}

TEST(Bicubic, SameSizeResizeIsIdentity) {
  vbf::Pcg32 rng(13);
  Tensor src({3, 7, 9});
  for (double& v : src.values()) v = rng.uniform();
  Tensor out = vbf::bicubic_resize(src, 7, 9);
  for (size_t i = 0; i < src.size(); ++i)
    ASSERT_NEAR(out.data()[i], src.data()[i], 1e-12);
}

TEST(Bicubic, LinearRampReproducedInInterior) {
  // f(x, y) = x, upscaled 2x; interior pixels with four genuine taps per
  // axis must reproduce the linear map exactly.
  int h = 8, w = 8, h_out = 16, w_out = 16;
  Tensor src({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) src.data()[y * w + x] = static_cast<double>(x);
  Tensor out = vbf::bicubic_resize(src, h_out, w_out);
  for (int oy = 0; oy < h_out; ++oy)
    for (int ox = 3; ox <= 12; ++ox) {
      double sx = (ox + 0.5) * 0.5 - 0.5;
      ASSERT_NEAR(out.data()[oy * w_out + ox], sx, 1e-9);
    }
}

TEST(Bicubic, MatchesBruteForceOracle) {
  vbf::Pcg32 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    int h = rng.uniform_int(1, 12);
    int w = rng.uniform_int(1, 12);
    int ho = rng.uniform_int(1, 15);
    int wo = rng.uniform_int(1, 15);
    Tensor src({h, w});
    for (double& v : src.values()) v = rng.uniform();
    Tensor out = vbf::bicubic_resize(src, ho, wo);
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        ASSERT_NEAR(out.data()[oy * wo + ox],
                    oracle_pixel(src.data(), h, w, oy, ox, ho, wo), 1e-9)
            << h << "x" << w << " -> " << ho << "x" << wo;
  }
}

TEST(Bicubic, OvershootWithinCatmullRomBound) {
  // One interpolation pass can overshoot by at most 12.5% of the value
  // range (the a = -0.5 kernel's negative lobes sum to 0.125 at f = 0.5).
  // Single-axis resizes see exactly that bound; a full 2D resize composes
  // two passes, so the range grows to 1.25x before the second pass:
  // 0.125 + 1.25 * 0.125 = 0.28125 of the input range.
  vbf::Pcg32 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    int h = rng.uniform_int(2, 10);
    int w = rng.uniform_int(2, 10);
    bool single_axis = trial % 2 == 0;
    int ho = single_axis ? h : rng.uniform_int(1, 20);
    int wo = rng.uniform_int(1, 20);
    Tensor src({h, w});
    for (double& v : src.values()) v = rng.uniform();
    double lo = *std::min_element(src.values().begin(), src.values().end());
    double hi = *std::max_element(src.values().begin(), src.values().end());
    double range = hi - lo;
    double bound = single_axis ? 0.125 : 0.28125;
    Tensor out = vbf::bicubic_resize(src, ho, wo);
    for (size_t i = 0; i < out.size(); ++i) {
      ASSERT_GE(out.data()[i], lo - bound * range);
      ASSERT_LE(out.data()[i], hi + bound * range);
    }
  }
}

TEST(Extract, ConstantImageGivesConstantBoxes) {
  MultispectralImage img(2, 12, 12);
  std::fill(img.values.begin(), img.values.end(), 0.25);
  BoxExtractorConfig cfg;
  cfg.b = 4;
  cfg.h_out = 8;
  cfg.w_out = 8;
  vbf::Pcg32 rng(3);
  Tensor out = vbf::extract(img, cfg, rng);
  ASSERT_EQ(out.shape(), (std::vector<int>{4, 2, 8, 8}));
  for (size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out.data()[i], 0.25);
}

TEST(Extract, ForcedFullImageBoxEqualsResizedImage) {
  MultispectralImage img = random_image(3, 9, 9, 14);
  BoxExtractorConfig cfg;
  cfg.b = 1;
  cfg.min_h = 9;
  cfg.min_w = 9;
  cfg.h_out = 5;
  cfg.w_out = 6;
  vbf::Pcg32 rng(4);
  Tensor out = vbf::extract(img, cfg, rng);
  Tensor full({3, 9, 9}, img.values);
  Tensor expected = vbf::bicubic_resize(full, 5, 6);
  ASSERT_EQ(out.shape(), (std::vector<int>{1, 3, 5, 6}));
  for (size_t i = 0; i < expected.size(); ++i)
    EXPECT_EQ(out.data()[i], expected.data()[i]);
}

TEST(Extract, PureFunctionOfImageConfigSeed) {
  MultispectralImage img = random_image(3, 20, 20, 15);
  BoxExtractorConfig cfg;
  cfg.b = 6;
  vbf::Pcg32 rng1(9, 5), rng2(9, 5);
  Tensor a = vbf::extract(img, cfg, rng1);
  Tensor b = vbf::extract(img, cfg, rng2);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
}
