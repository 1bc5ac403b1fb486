// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "vbfusion/binio.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

/// A c x H x W stack of reflectance-like values in [0, 1], band-major then
/// row-major.
struct MultispectralImage {
  int c = 0;
  int H = 0;
  int W = 0;
  std::vector<double> values;

  MultispectralImage() = default;
  MultispectralImage(int c_, int H_, int W_)
      : c(c_), H(H_), W(W_),
        values(static_cast<size_t>(c_) * H_ * W_, 0.0) {}

  double& at(int band, int y, int x) {
    return values[(static_cast<size_t>(band) * H + y) * W + x];
  }
  double at(int band, int y, int x) const {
    return values[(static_cast<size_t>(band) * H + y) * W + x];
  }
};

/// Keeps the first `bands` bands (used to derive an RGB view of a
/// multispectral image).
inline MultispectralImage slice_bands(const MultispectralImage& img, int bands) {
  if (bands < 1 || bands > img.c)
    throw std::runtime_error("slice_bands: band count out of range");
  MultispectralImage out(bands, img.H, img.W);
  std::copy(img.values.begin(),
            img.values.begin() + static_cast<size_t>(bands) * img.H * img.W,
            out.values.begin());
  return out;
}

// RSB format: magic "RSB1", u32 c, u32 H, u32 W, then c*H*W f64 values,
// all little-endian. Round-trips bit-exactly.

inline void append_rsb(BinWriter& w, const MultispectralImage& img) {
  w.str("RSB1");
  w.u32(static_cast<uint32_t>(img.c));
  w.u32(static_cast<uint32_t>(img.H));
  w.u32(static_cast<uint32_t>(img.W));
  for (double v : img.values) w.f64(v);
}

inline void write_rsb(const std::string& path, const MultispectralImage& img) {
  BinWriter w;
  append_rsb(w, img);
  w.write_file(path);
}

inline MultispectralImage read_rsb_from(BinReader& r) {
  r.expect_magic("RSB1", 4);
  uint32_t c = r.u32("band count");
  uint32_t H = r.u32("height");
  uint32_t W = r.u32("width");
  if (c == 0 || c > 4096)
    throw ParseError(r.file(), r.offset(), "implausible band count");
  if (H == 0 || W == 0 || H > (1u << 20) || W > (1u << 20))
    throw ParseError(r.file(), r.offset(), "implausible image dimensions");
  size_t n = static_cast<size_t>(c) * H * W;
  r.need(n * 8, "image values");
  MultispectralImage img(static_cast<int>(c), static_cast<int>(H),
                         static_cast<int>(W));
  r.f64_array(img.values.data(), n, "image values");
  return img;
}

inline MultispectralImage read_rsb(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  MultispectralImage img = read_rsb_from(r);
  if (!r.eof())
    throw ParseError(r.file(), r.offset(), "trailing bytes after image");
  return img;
}

/// Reads a file holding consecutive RSB records (e.g. a box stack).
inline std::vector<MultispectralImage> read_rsb_stack(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  std::vector<MultispectralImage> out;
  while (!r.eof()) out.push_back(read_rsb_from(r));
  if (out.empty()) throw ParseError(path, 0, "empty RSB stack");
  return out;
}

}  // namespace vbf
