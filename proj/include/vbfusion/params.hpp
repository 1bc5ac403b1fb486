// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vbfusion/binio.hpp"
#include "vbfusion/tensor.hpp"

namespace vbf {

/// A named trainable (or frozen) tensor. Frozen parameters participate in
/// forward passes and checkpoints but never receive optimizer updates and
/// are skipped by the gradient checker.
struct Parameter {
  std::string name;
  Tensor tensor;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor t, bool f = false)
      : name(std::move(n)), tensor(std::move(t)), frozen(f) {
    if (!frozen) tensor.enable_grad();
  }
};

inline void check_unique_names(const std::vector<Parameter*>& params) {
  std::unordered_set<std::string> seen;
  for (const Parameter* p : params)
    if (!seen.insert(p->name).second)
      throw std::runtime_error("duplicate parameter name: " + p->name);
}

inline void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->tensor.zero_grad();
}

// Checkpoint format: magic "VBF1", u32 parameter count, then per parameter
// u32 name length, the UTF-8 name, u32 rank, u32 dims, f64 values, all
// little-endian. Round-trips bit-exactly.

inline void save_checkpoint(const std::string& path,
                            const std::vector<Parameter*>& params) {
  check_unique_names(params);
  BinWriter w;
  w.str("VBF1");
  w.u32(static_cast<uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.u32(static_cast<uint32_t>(p->name.size()));
    w.str(p->name);
    w.u32(static_cast<uint32_t>(p->tensor.rank()));
    for (int d : p->tensor.shape()) w.u32(static_cast<uint32_t>(d));
    for (double v : p->tensor.values()) w.f64(v);
  }
  w.write_file(path);
}

struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
};

inline std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  r.expect_magic("VBF1", 4);
  uint32_t count = r.u32("parameter count");
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    uint32_t name_len = r.u32("name length");
    if (name_len > (1u << 20))
      throw ParseError(r.file(), r.offset(), "implausible name length");
    e.name = r.str(name_len, "parameter name");
    uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 8)
      throw ParseError(r.file(), r.offset(), "implausible rank");
    size_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      uint32_t dim = r.u32("dimension");
      if (dim == 0 || dim > (1u << 28))
        throw ParseError(r.file(), r.offset(), "implausible dimension");
      e.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    r.need(n * 8, "parameter values");
    e.values.resize(n);
    r.f64_array(e.values.data(), n, "parameter values");
    entries.push_back(std::move(e));
  }
  if (!r.eof())
    throw ParseError(r.file(), r.offset(), "trailing bytes after last parameter");
  return entries;
}

/// Loads values into an existing parameter set by name; every model
/// parameter must be present in the file with a matching shape.
inline void load_checkpoint(const std::string& path,
                            const std::vector<Parameter*>& params) {
  check_unique_names(params);
  auto entries = read_checkpoint(path);
  std::unordered_map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end())
      throw std::runtime_error(path + ": missing parameter " + p->name);
    const CheckpointEntry& e = *it->second;
    if (e.shape != p->tensor.shape())
      throw std::runtime_error(path + ": shape mismatch for " + p->name);
    p->tensor.values() = e.values;
  }
}

}  // namespace vbf
