// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vbfusion/image.hpp"
#include "vbfusion/rng.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

/// Half-open pixel rectangle: rows [s_h, e_h), columns [s_w, e_w).
struct BoxSpec {
  int s_h = 0;
  int e_h = 0;
  int s_w = 0;
  int e_w = 0;

  int height() const { return e_h - s_h; }
  int width() const { return e_w - s_w; }
  bool operator==(const BoxSpec&) const = default;
};

struct BoxExtractorConfig {
  int b = 10;        // boxes per image
  int min_h = 0;     // 0 derives max(1, H/4) at use time
  int min_w = 0;     // 0 derives max(1, W/4)
  int h_out = 16;
  int w_out = 16;
  uint64_t seed = 0;

  int resolved_min_h(int H) const { return min_h > 0 ? min_h : std::max(1, H / 4); }
  int resolved_min_w(int W) const { return min_w > 0 ? min_w : std::max(1, W / 4); }
};

/// Draws b boxes; start points are uniform over the feasible range, end
/// points uniform over what keeps the minimum extent. Draw order per box is
/// s_h, e_h, s_w, e_w, which pins the sequence for a given generator state.
inline std::vector<BoxSpec> sample_boxes(int H, int W,
                                         const BoxExtractorConfig& cfg,
                                         Pcg32& rng) {
  int min_h = cfg.resolved_min_h(H);
  int min_w = cfg.resolved_min_w(W);
  if (min_h > H || min_w > W)
    throw std::runtime_error("sample_boxes: image smaller than minimum box");
  if (cfg.b < 1) throw std::runtime_error("sample_boxes: box count must be >= 1");
  std::vector<BoxSpec> boxes;
  boxes.reserve(static_cast<size_t>(cfg.b));
  for (int i = 0; i < cfg.b; ++i) {
    BoxSpec box;
    box.s_h = rng.uniform_int(0, H - min_h);
    box.e_h = rng.uniform_int(box.s_h + min_h, H);
    box.s_w = rng.uniform_int(0, W - min_w);
    box.e_w = rng.uniform_int(box.s_w + min_w, W);
    boxes.push_back(box);
  }
  return boxes;
}

/// Exact sub-array copy of all bands over the box region, as a c x h x w
/// tensor.
inline Tensor crop(const MultispectralImage& img, const BoxSpec& box) {
  if (box.s_h < 0 || box.s_w < 0 || box.e_h > img.H || box.e_w > img.W ||
      box.s_h >= box.e_h || box.s_w >= box.e_w)
    throw std::runtime_error("crop: box out of image bounds");
  int h = box.height(), w = box.width();
  Tensor out({img.c, h, w});
  double* po = out.data();
  for (int band = 0; band < img.c; ++band)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        *po++ = img.at(band, box.s_h + y, box.s_w + x);
  return out;
}

namespace detail {

/// Cubic convolution kernel, a = -0.5 (Catmull-Rom). Reproduces degree-1
/// polynomials away from clamped borders.
inline double cubic_kernel(double t) {
  t = std::abs(t);
  if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return -0.5 * (((t - 5.0) * t + 8.0) * t - 4.0);
  return 0.0;
}

struct CubicTap {
  int idx[4];
  double w[4];  // weights of the three non-anchor taps live in w[0], w[2], w[3]
};

/// Precomputes taps for one axis: destination x maps to
/// (x + 0.5) * (src / dst) - 0.5; out-of-range taps clamp to the edge.
inline std::vector<CubicTap> cubic_taps(int src, int dst) {
  std::vector<CubicTap> taps(static_cast<size_t>(dst));
  double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int x = 0; x < dst; ++x) {
    double sx = (x + 0.5) * scale - 0.5;
    int ix = static_cast<int>(std::floor(sx));
    double f = sx - ix;
    CubicTap& t = taps[static_cast<size_t>(x)];
    for (int k = 0; k < 4; ++k) {
      int p = ix - 1 + k;
      t.idx[k] = std::clamp(p, 0, src - 1);
    }
    t.w[0] = cubic_kernel(1.0 + f);
    t.w[1] = 0.0;  // anchor coefficient is implicit (weights sum to 1)
    t.w[2] = cubic_kernel(1.0 - f);
    t.w[3] = cubic_kernel(2.0 - f);
  }
  return taps;
}

/// One interpolated value in deviation form around the anchor tap: since the
/// kernel weights sum to 1 algebraically, out = p1 + sum_k w_k (p_k - p1),
/// which reproduces constant inputs bit-exactly.
inline double cubic_apply(const CubicTap& t, const double* line, size_t stride) {
  double anchor = line[static_cast<size_t>(t.idx[1]) * stride];
  return anchor + t.w[0] * (line[static_cast<size_t>(t.idx[0]) * stride] - anchor) +
         t.w[2] * (line[static_cast<size_t>(t.idx[2]) * stride] - anchor) +
         t.w[3] * (line[static_cast<size_t>(t.idx[3]) * stride] - anchor);
}

}  // namespace detail

/// Cubic-convolution (bicubic, a = -0.5) resize of a c x h x w or h x w
/// tensor to the given output size, separable horizontal-then-vertical
/// passes with clamp-to-edge borders.
inline Tensor bicubic_resize(const Tensor& src, int h_out, int w_out) {
  if (src.rank() != 2 && src.rank() != 3)
    throw std::runtime_error("bicubic_resize: rank-2 or rank-3 tensor required");
  if (h_out < 1 || w_out < 1)
    throw std::runtime_error("bicubic_resize: output size must be >= 1");
  int c = src.rank() == 3 ? src.dim(0) : 1;
  int h = src.dim(src.rank() - 2);
  int w = src.dim(src.rank() - 1);

  auto tx = detail::cubic_taps(w, w_out);
  auto ty = detail::cubic_taps(h, h_out);

  std::vector<int> out_shape = src.rank() == 3
                                   ? std::vector<int>{c, h_out, w_out}
                                   : std::vector<int>{h_out, w_out};
  Tensor out(out_shape);
  std::vector<double> tmp(static_cast<size_t>(h) * w_out);
  for (int band = 0; band < c; ++band) {
    const double* plane = src.data() + static_cast<size_t>(band) * h * w;
    // horizontal pass
    for (int y = 0; y < h; ++y) {
      const double* row = plane + static_cast<size_t>(y) * w;
      double* trow = tmp.data() + static_cast<size_t>(y) * w_out;
      for (int x = 0; x < w_out; ++x)
        trow[x] = detail::cubic_apply(tx[static_cast<size_t>(x)], row, 1);
    }
    // vertical pass
    double* oplane = out.data() + static_cast<size_t>(band) * h_out * w_out;
    for (int y = 0; y < h_out; ++y)
      for (int x = 0; x < w_out; ++x)
        oplane[static_cast<size_t>(y) * w_out + x] = detail::cubic_apply(
            ty[static_cast<size_t>(y)], tmp.data() + x, static_cast<size_t>(w_out));
  }
  return out;
}

/// The box extractor B: samples b constrained boxes, crops them and resizes
/// each to h_out x w_out, producing a b x c x h_out x w_out stack. Pure in
/// (image, config, generator state).
inline Tensor extract(const MultispectralImage& img,
                      const BoxExtractorConfig& cfg, Pcg32& rng) {
  std::vector<BoxSpec> boxes = sample_boxes(img.H, img.W, cfg, rng);
  Tensor out({cfg.b, img.c, cfg.h_out, cfg.w_out});
  size_t plane = static_cast<size_t>(img.c) * cfg.h_out * cfg.w_out;
  for (int i = 0; i < cfg.b; ++i) {
    Tensor resized = bicubic_resize(crop(img, boxes[static_cast<size_t>(i)]),
                                    cfg.h_out, cfg.w_out);
    std::copy(resized.data(), resized.data() + plane,
              out.data() + static_cast<size_t>(i) * plane);
  }
  return out;
}

}  // namespace vbf
