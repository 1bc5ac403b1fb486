// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vbf {

/// Parse failure for the binary file formats; carries the byte offset at
/// which the reader gave up.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, uint64_t offset, const std::string& what)
      : std::runtime_error(file + ": " + what + " (byte offset " +
                           std::to_string(offset) + ")"),
        offset_(offset) {}
  uint64_t offset() const { return offset_; }

 private:
  uint64_t offset_;
};

/// Little-endian writer over a growable byte buffer.
class BinWriter {
 public:
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void bytes(const void* p, size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void str(const std::string& s) { bytes(s.data(), s.size()); }

  const std::vector<char>& buffer() const { return buf_; }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw std::runtime_error(path + ": write failed");
  }

 private:
  std::vector<char> buf_;
};

/// Little-endian reader with bounds checking; every failure names the file
/// and the offending byte offset.
class BinReader {
 public:
  BinReader(std::string file, std::vector<char> data)
      : file_(std::move(file)), data_(std::move(data)) {}

  static BinReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<char> data((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    return BinReader(path, std::move(data));
  }

  uint64_t offset() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  bool eof() const { return pos_ == data_.size(); }
  const std::string& file() const { return file_; }

  void expect_magic(const char* magic, size_t len) {
    if (remaining() < len)
      throw ParseError(file_, pos_, "truncated file, expected magic");
    if (std::memcmp(data_.data() + pos_, magic, len) != 0)
      throw ParseError(file_, pos_,
                       std::string("bad magic, expected \"") + magic + "\"");
    pos_ += len;
  }

  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)])) << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  void f64_array(double* out, size_t count, const char* what) {
    need(count * 8, what);
    for (size_t i = 0; i < count; ++i) out[i] = f64(what);
  }

  std::string str(size_t len, const char* what) {
    need(len, what);
    std::string s(data_.data() + pos_, len);
    pos_ += len;
    return s;
  }

  void need(size_t n, const char* what) {
    if (remaining() < n)
      throw ParseError(file_, pos_, std::string("truncated file, expected ") +
                                        std::to_string(n) + " bytes of " + what +
                                        ", have " + std::to_string(remaining()));
  }

 private:
  std::string file_;
  std::vector<char> data_;
  size_t pos_ = 0;
};

}  // namespace vbf
