// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>

#include <json.hpp>

namespace vbf {

/// Usage-level configuration error (bad key, bad value); the CLI maps this
/// to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The complete run configuration. Unknown keys are rejected, missing keys
/// fall back to the defaults below, and the fully resolved document is
/// echoed into every output directory.
struct RunConfig {
  struct Data {
    int n_images = 700;
    int bands = 3;
    int image_size = 32;
    uint64_t seed = 0;
  } data;
  struct Boxes {
    int b = 10;
    int min_h = 0;  // 0 resolves to image_size / 4
    int min_w = 0;
    int h_out = 16;
    int w_out = 16;
  } boxes;
  struct Model {
    int l = 4;
    int d = 64;
    int heads = 4;
    int v = 64;
    int max_text_len = 24;
    double dropout = 0.0;
  } model;
  struct Train {
    double lr = 1e-3;
    int batch = 32;
    int epochs = 30;
    uint64_t seed = 0;
  } train;
  struct Answers {
    int k_max = 1000;
  } answers;
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& path,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw ConfigError("config section \"" + path + "\" must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key: " +
                        (path.empty() ? key : path + "." + key));
}

template <typename T>
void get_if_present(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("bad value for config key: ") + key);
    }
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::check_keys(j, "", {"data", "boxes", "model", "train", "answers"});
  RunConfig cfg;
  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::check_keys(d, "data", {"n_images", "bands", "image_size", "seed"});
    detail::get_if_present(d, "n_images", cfg.data.n_images);
    detail::get_if_present(d, "bands", cfg.data.bands);
    detail::get_if_present(d, "image_size", cfg.data.image_size);
    detail::get_if_present(d, "seed", cfg.data.seed);
  }
  if (j.contains("boxes")) {
    const auto& b = j.at("boxes");
    detail::check_keys(b, "boxes", {"b", "min_h", "min_w", "h_out", "w_out"});
    detail::get_if_present(b, "b", cfg.boxes.b);
    detail::get_if_present(b, "min_h", cfg.boxes.min_h);
    detail::get_if_present(b, "min_w", cfg.boxes.min_w);
    detail::get_if_present(b, "h_out", cfg.boxes.h_out);
    detail::get_if_present(b, "w_out", cfg.boxes.w_out);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::check_keys(m, "model",
                       {"l", "d", "heads", "v", "max_text_len", "dropout"});
    detail::get_if_present(m, "l", cfg.model.l);
    detail::get_if_present(m, "d", cfg.model.d);
    detail::get_if_present(m, "heads", cfg.model.heads);
    detail::get_if_present(m, "v", cfg.model.v);
    detail::get_if_present(m, "max_text_len", cfg.model.max_text_len);
    detail::get_if_present(m, "dropout", cfg.model.dropout);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::check_keys(t, "train", {"lr", "batch", "epochs", "seed"});
    detail::get_if_present(t, "lr", cfg.train.lr);
    detail::get_if_present(t, "batch", cfg.train.batch);
    detail::get_if_present(t, "epochs", cfg.train.epochs);
    detail::get_if_present(t, "seed", cfg.train.seed);
  }
  if (j.contains("answers")) {
    const auto& a = j.at("answers");
    detail::check_keys(a, "answers", {"k_max"});
    detail::get_if_present(a, "k_max", cfg.answers.k_max);
  }
  if (cfg.data.bands != 3 && cfg.data.bands != 10)
    throw ConfigError("unsupported bands preset: " +
                      std::to_string(cfg.data.bands));
  if (cfg.train.lr <= 0) throw ConfigError("train.lr must be > 0");
  if (cfg.train.batch < 1) throw ConfigError("train.batch must be >= 1");
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"data",
       {{"n_images", c.data.n_images},
        {"bands", c.data.bands},
        {"image_size", c.data.image_size},
        {"seed", c.data.seed}}},
      {"boxes",
       {{"b", c.boxes.b},
        {"min_h", c.boxes.min_h},
        {"min_w", c.boxes.min_w},
        {"h_out", c.boxes.h_out},
        {"w_out", c.boxes.w_out}}},
      {"model",
       {{"l", c.model.l},
        {"d", c.model.d},
        {"heads", c.model.heads},
        {"v", c.model.v},
        {"max_text_len", c.model.max_text_len},
        {"dropout", c.model.dropout}}},
      {"train",
       {{"lr", c.train.lr},
        {"batch", c.train.batch},
        {"epochs", c.train.epochs},
        {"seed", c.train.seed}}},
      {"answers", {{"k_max", c.answers.k_max}}}};
}

}  // namespace vbf
