// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vbfusion/params.hpp"
#include "vbfusion/rng.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

struct EncoderConfig {
  int c = 3;                              // input bands
  std::vector<int> channels = {8, 16, 32};  // per-stage output channels
  int h_in = 16;                          // expected box height H'
  int w_in = 16;                          // expected box width W'
  int v = 64;                             // visual embedding dimension
  uint64_t seed = 17;                     // frozen-weight init seed
  double input_mean = 0.40;               // subtracted before the conv stack
};

/// Plain conv2d forward (no gradient tracking). weight is
/// out_c x in_c x kh x kw; the output is a leaf tensor.
inline Tensor conv2d_forward(const Tensor& input, const Tensor& weight,
                             const Tensor& bias, int stride, int pad) {
  if (input.rank() != 3 || weight.rank() != 4)
    throw std::runtime_error("conv2d: bad input/weight rank");
  int in_c = input.dim(0), h = input.dim(1), w = input.dim(2);
  int out_c = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != in_c) throw std::runtime_error("conv2d: band mismatch");
  int h_out = (h + 2 * pad - kh) / stride + 1;
  int w_out = (w + 2 * pad - kw) / stride + 1;
  if (h_out < 1 || w_out < 1)
    throw std::runtime_error("conv2d: output would be empty");

  Tensor out({out_c, h_out, w_out});
  const double* in = input.data();
  const double* wt = weight.data();
  const double* bs = bias.data();
  double* po = out.data();
  for (int oc = 0; oc < out_c; ++oc) {
    for (int oy = 0; oy < h_out; ++oy) {
      for (int ox = 0; ox < w_out; ++ox) {
        double acc = bs[oc];
        int y0 = oy * stride - pad;
        int x0 = ox * stride - pad;
        for (int ic = 0; ic < in_c; ++ic) {
          const double* plane = in + (static_cast<size_t>(ic) * h) * w;
          const double* ker =
              wt + ((static_cast<size_t>(oc) * in_c + ic) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            int y = y0 + ky;
            if (y < 0 || y >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              int x = x0 + kx;
              if (x < 0 || x >= w) continue;
              acc += plane[static_cast<size_t>(y) * w + x] *
                     ker[static_cast<size_t>(ky) * kw + kx];
            }
          }
        }
        *po++ = acc;
      }
    }
  }
  return out;
}

/// The image encoder f plus the trainable projection: a frozen stack of
/// stride-2 3x3 conv + ReLU stages flattened to b x K, then an affine map to
/// b x v. Only the projection receives gradients.
class ImageEncoder {
 public:
  explicit ImageEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
    Pcg32 rng(cfg.seed);
    int in_c = cfg.c;
    int h = cfg.h_in, w = cfg.w_in;
    for (size_t s = 0; s < cfg.channels.size(); ++s) {
      int out_c = cfg.channels[s];
      std::string base = "encoder.stage" + std::to_string(s);
      conv_w_.emplace_back(base + ".weight",
                           random_mixing_filters(out_c, in_c, rng),
                           /*frozen=*/true);
      conv_b_.emplace_back(base + ".bias", Tensor({out_c}), /*frozen=*/true);
      in_c = out_c;
      h = (h + 2 - 3) / 2 + 1;
      w = (w + 2 - 3) / 2 + 1;
      if (h < 1 || w < 1)
        throw std::runtime_error("encoder: input too small for conv stack");
    }
    K_ = in_c * h * w;
    proj_w_ = Parameter("encoder.proj.weight",
                        Tensor::randn({K_, cfg.v}, rng,
                                      1.0 / std::sqrt(static_cast<double>(K_))));
    proj_b_ = Parameter("encoder.proj.bias", Tensor({cfg.v}));
  }

  int feature_dim() const { return K_; }
  const EncoderConfig& config() const { return cfg_; }

  /// Frozen forward over a b x c x H' x W' box stack; returns the b x K
  /// feature matrix as a leaf (no gradient flows into the encoder).
  Tensor encode(const Tensor& boxes) const {
    if (boxes.rank() != 4)
      throw std::runtime_error("encode: b x c x h x w stack required");
    if (boxes.dim(1) != cfg_.c) throw std::runtime_error("encode: band mismatch");
    if (boxes.dim(2) != cfg_.h_in || boxes.dim(3) != cfg_.w_in)
      throw std::runtime_error("encode: box size mismatch");
    int b = boxes.dim(0);
    Tensor out({b, K_});
    size_t plane = static_cast<size_t>(cfg_.c) * cfg_.h_in * cfg_.w_in;
    for (int i = 0; i < b; ++i) {
      // centered input, the usual companion of a frozen pretrained stack
      std::vector<double> centered(boxes.data() + i * plane,
                                   boxes.data() + (i + 1) * plane);
      for (double& v : centered) v -= cfg_.input_mean;
      Tensor x({cfg_.c, cfg_.h_in, cfg_.w_in}, std::move(centered));
      for (size_t s = 0; s < conv_w_.size(); ++s) {
        NoGradGuard ng;
        x = relu(conv2d_forward(x, conv_w_[s].tensor, conv_b_[s].tensor, 2, 1));
      }
      std::copy(x.data(), x.data() + static_cast<size_t>(K_),
                out.data() + static_cast<size_t>(i) * K_);
    }
    return out;
  }

  /// Trainable affine projection Z = features * W + bias.
  Tensor project(const Tensor& features) const {
    if (features.rank() != 2 || features.dim(1) != K_)
      throw std::runtime_error("project: feature width mismatch");
    return add_rowwise(matmul(features, proj_w_.tensor), proj_b_.tensor);
  }

  void collect(std::vector<Parameter*>& out) {
    for (auto& p : conv_w_) out.push_back(&p);
    for (auto& p : conv_b_) out.push_back(&p);
    out.push_back(&proj_w_);
    out.push_back(&proj_b_);
  }

 private:
  // Frozen filters are drawn as a random channel-mixing smoothing bank:
  // each filter is a random positive per-channel mix times a near-uniform
  // 3x3 spatial profile, normalized to sum 1. Channels then carry diverse
  // band mixtures while spatially flat statistics (object areas) stay
  // linearly recoverable from the downsampled grid. Plain i.i.d. random
  // filters scramble the spatial weighting enough to bury those statistics.
  static Tensor random_mixing_filters(int out_c, int in_c, Pcg32& rng) {
    Tensor w({out_c, in_c, 3, 3});
    size_t per_filter = static_cast<size_t>(in_c) * 9;
    for (int o = 0; o < out_c; ++o) {
      double total = 0.0;
      double* filter = w.data() + static_cast<size_t>(o) * per_filter;
      for (int i = 0; i < in_c; ++i) {
        double mix = rng.uniform(0.1, 1.0);
        for (int k = 0; k < 9; ++k) {
          double v = mix * (1.0 + 0.25 * rng.uniform(-1.0, 1.0));
          filter[static_cast<size_t>(i) * 9 + k] = v;
          total += v;
        }
      }
      for (size_t k = 0; k < per_filter; ++k) filter[k] /= total;
    }
    return w;
  }

  EncoderConfig cfg_;
  std::vector<Parameter> conv_w_;
  std::vector<Parameter> conv_b_;
  Parameter proj_w_;
  Parameter proj_b_;
  int K_ = 0;
};

}  // namespace vbf
