// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbfusion/box_extractor.hpp"
#include "vbfusion/image.hpp"
#include "vbfusion/rng.hpp"

namespace vbf {

enum class QuestionType { presence, count, comparison, scene, spectral };

inline const char* to_string(QuestionType t) {
  switch (t) {
    case QuestionType::presence: return "presence";
    case QuestionType::count: return "count";
    case QuestionType::comparison: return "comparison";
    case QuestionType::scene: return "scene";
    case QuestionType::spectral: return "spectral";
  }
  throw std::runtime_error("unknown question type");
}

inline QuestionType question_type_from_string(const std::string& s) {
  if (s == "presence") return QuestionType::presence;
  if (s == "count") return QuestionType::count;
  if (s == "comparison") return QuestionType::comparison;
  if (s == "scene") return QuestionType::scene;
  if (s == "spectral") return QuestionType::spectral;
  throw std::runtime_error("unknown question type: \"" + s + "\"");
}

struct Triplet {
  std::string image_id;
  std::string question;
  std::string answer;
  QuestionType type = QuestionType::presence;
  int tile_id = 0;
};

enum class ShapeKind { disc, square, triangle };

inline const char* to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::disc: return "disc";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
  }
  throw std::runtime_error("unknown shape kind");
}

inline ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "disc") return ShapeKind::disc;
  if (s == "square") return ShapeKind::square;
  if (s == "triangle") return ShapeKind::triangle;
  throw std::runtime_error("unknown shape kind: \"" + s + "\"");
}

/// One rendered object. `band_contrast` holds the additive brightness per
/// band; each kind concentrates its contrast in a characteristic band, the
/// synthetic analog of a spectral signature. Hidden objects carry exactly
/// zero contrast in the first three (RGB) bands.
struct SceneObject {
  ShapeKind kind = ShapeKind::disc;
  double cx = 0.0, cy = 0.0;  // center, full-resolution pixel coordinates
  double size = 0.0;          // radius / half-extent in pixels
  bool hidden = false;
  std::vector<double> band_contrast;
};

/// Ground-truth record for one image; every generated answer is a pure
/// function of this graph.
struct SceneGraph {
  std::string image_id;
  bool dense = false;
  std::vector<SceneObject> objects;

  int visible_count(ShapeKind k) const {
    int n = 0;
    for (const auto& o : objects)
      if (!o.hidden && o.kind == k) ++n;
    return n;
  }
  bool hidden_present(ShapeKind k) const {
    for (const auto& o : objects)
      if (o.hidden && o.kind == k) return true;
    return false;
  }
};

enum class Split { train, validation, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  throw std::runtime_error("unknown split");
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::runtime_error("unknown split: \"" + s + "\"");
}

/// Pure tile -> split mapping; every image's split follows from its tile.
struct SplitAssignment {
  std::map<int, Split> tiles;

  Split split_of_tile(int tile_id) const {
    auto it = tiles.find(tile_id);
    if (it == tiles.end())
      throw std::runtime_error("unknown tile id: " + std::to_string(tile_id));
    return it->second;
  }
};

struct DatasetConfig {
  int n_images = 700;
  int bands = 3;  // 3 or 10
  int image_size = 32;
  int questions_per_image = 4;
  std::vector<QuestionType> templates = {
      QuestionType::presence, QuestionType::count, QuestionType::comparison,
      QuestionType::scene};
  uint64_t seed = 0;
  int max_objects = 5;

  static constexpr int kTiles = 7;  // 5 train / 1 validation / 1 test
};

struct SyntheticDataset {
  DatasetConfig config;
  std::vector<std::string> image_ids;
  std::vector<MultispectralImage> images;
  std::vector<Triplet> triplets;
  std::vector<SceneGraph> graphs;
  SplitAssignment splits;

  int image_index(const std::string& id) const {
    auto it = std::lower_bound(image_ids.begin(), image_ids.end(), id);
    if (it == image_ids.end() || *it != id)
      throw std::runtime_error("unknown image id: " + id);
    return static_cast<int>(it - image_ids.begin());
  }
};

// ---------------------------------------------------------------------------
// Band resampling
// ---------------------------------------------------------------------------

/// Cubic upsampling of a single band by an integer factor; shares the kernel
/// and sample mapping with bicubic_resize.
inline Tensor resample_band(const Tensor& band, int factor) {
  if (band.rank() != 2) throw std::runtime_error("resample_band: rank-2 required");
  if (factor < 1) throw std::runtime_error("resample_band: factor must be >= 1");
  return bicubic_resize(band, band.dim(0) * factor, band.dim(1) * factor);
}

/// Stacks bands into an image, upsampling lower-resolution bands to the
/// target size; output band order equals input order.
inline MultispectralImage stack_bands(const std::vector<Tensor>& bands, int H,
                                      int W) {
  if (bands.empty()) throw std::runtime_error("stack_bands: no bands");
  MultispectralImage img(static_cast<int>(bands.size()), H, W);
  for (size_t i = 0; i < bands.size(); ++i) {
    const Tensor& band = bands[i];
    if (band.rank() != 2) throw std::runtime_error("stack_bands: rank-2 bands required");
    int h = band.dim(0), w = band.dim(1);
    Tensor full = band;
    if (h != H || w != W) {
      if (H % h != 0 || W % w != 0 || H / h != W / w)
        throw std::runtime_error("stack_bands: non-integer factor for band " +
                                 std::to_string(i));
      full = resample_band(band, H / h);
    }
    std::copy(full.data(), full.data() + static_cast<size_t>(H) * W,
              img.values.begin() + static_cast<size_t>(i) * H * W);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Scene rendering
// ---------------------------------------------------------------------------

namespace detail {

inline bool inside_shape(ShapeKind kind, double cx, double cy, double r,
                         double x, double y) {
  double dx = x - cx, dy = y - cy;
  switch (kind) {
    case ShapeKind::disc:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::square:
      return std::max(std::abs(dx), std::abs(dy)) <= r;
    case ShapeKind::triangle: {
      // up-pointing isoceles triangle inscribed in the 2r box
      double ax = cx, ay = cy - r;
      double bx = cx - r, by = cy + r;
      double ex = cx + r, ey = cy + r;
      auto side = [](double px, double py, double qx, double qy, double tx,
                     double ty) {
        return (qx - px) * (ty - py) - (qy - py) * (tx - px);
      };
      double s1 = side(ax, ay, bx, by, x, y);
      double s2 = side(bx, by, ex, ey, x, y);
      double s3 = side(ex, ey, ax, ay, x, y);
      bool neg = s1 < 0 || s2 < 0 || s3 < 0;
      bool pos = s1 > 0 || s2 > 0 || s3 > 0;
      return !(neg && pos);
    }
  }
  return false;
}

/// Anti-aliased coverage of pixel (px, py) by 4x4 supersampling at the given
/// render scale (0.5 for half-resolution bands).
inline double pixel_coverage(const SceneObject& obj, int px, int py,
                             double scale) {
  double cx = obj.cx * scale, cy = obj.cy * scale, r = obj.size * scale;
  // cheap reject: pixel farther than r + pixel diagonal from center
  double pcx = px + 0.5, pcy = py + 0.5;
  double dx = pcx - cx, dy = pcy - cy;
  double reach = r + 1.0;
  if (dx * dx + dy * dy > 2.0 * reach * reach + 2.0) return 0.0;
  int hit = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx) {
      double x = px + (sx + 0.5) / 4.0;
      double y = py + (sy + 0.5) / 4.0;
      if (inside_shape(obj.kind, cx, cy, r, x, y)) ++hit;
    }
  return hit / 16.0;
}

/// Renders one band plane at (h x w): background + noise + object contrast.
inline void render_band(const SceneGraph& graph, int band, double base,
                        double noise_amp, double scale, int h, int w,
                        Pcg32& rng, double* out) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[static_cast<size_t>(y) * w + x] = base + rng.uniform(-noise_amp, noise_amp);
  for (const SceneObject& obj : graph.objects) {
    double contrast = obj.band_contrast[static_cast<size_t>(band)];
    if (contrast == 0.0) continue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double cov = pixel_coverage(obj, x, y, scale);
        if (cov > 0.0) out[static_cast<size_t>(y) * w + x] += contrast * cov;
      }
  }
  for (int i = 0; i < h * w; ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
}

constexpr double kSparseNoise = 0.02;
constexpr double kDenseNoise = 0.10;

}  // namespace detail

/// Renders the image for a scene graph. The 3-band preset renders three
/// full-resolution bands. The 10-band preset renders bands 0-3 at full
/// resolution and bands 4-9 at half resolution, then upsamples the half-
/// resolution bands with the shared cubic kernel (the 10m/20m analog).
inline MultispectralImage render_scene(const SceneGraph& graph,
                                       const DatasetConfig& cfg, Pcg32& rng) {
  int H = cfg.image_size, W = cfg.image_size;
  double noise = graph.dense ? detail::kDenseNoise : detail::kSparseNoise;
  // fixed background level: the texture (noise) carries the density class,
  // and a flat base keeps per-band statistics comparable across images
  std::vector<double> base(static_cast<size_t>(cfg.bands), 0.40);

  std::vector<Tensor> bands;
  int full_res_bands = cfg.bands == 10 ? 4 : cfg.bands;
  for (int b = 0; b < cfg.bands; ++b) {
    bool full = b < full_res_bands;
    int h = full ? H : H / 2;
    int w = full ? W : W / 2;
    double scale = full ? 1.0 : 0.5;
    Tensor plane({h, w});
    detail::render_band(graph, b, base[static_cast<size_t>(b)], noise, scale, h,
                        w, rng, plane.data());
    bands.push_back(std::move(plane));
  }
  return stack_bands(bands, H, W);
}

// ---------------------------------------------------------------------------
// Question oracle
// ---------------------------------------------------------------------------

inline std::string shape_noun(ShapeKind k) { return to_string(k); }

/// Recomputes the ground-truth answer for a generated question from the
/// scene graph alone. Throws on questions that do not match a known
/// template.
inline std::string oracle_answer(const SceneGraph& graph,
                                 const std::string& question) {
  auto starts_with = [&](const std::string& prefix) {
    return question.rfind(prefix, 0) == 0;
  };
  if (question == "is the scene dense or sparse")
    return graph.dense ? "dense" : "sparse";
  if (starts_with("is there a hidden ")) {
    ShapeKind k = shape_kind_from_string(question.substr(18));
    return graph.hidden_present(k) ? "yes" : "no";
  }
  if (starts_with("is there a ")) {
    ShapeKind k = shape_kind_from_string(question.substr(11));
    return graph.visible_count(k) > 0 ? "yes" : "no";
  }
  if (starts_with("how many ")) {
    // "how many <shape>s are there"
    std::string rest = question.substr(9);
    size_t cut = rest.find("s are there");
    if (cut == std::string::npos)
      throw std::runtime_error("oracle: unrecognized question: " + question);
    ShapeKind k = shape_kind_from_string(rest.substr(0, cut));
    return std::to_string(graph.visible_count(k));
  }
  if (starts_with("are there more ")) {
    // "are there more <a>s than <b>s"
    std::string rest = question.substr(15);
    size_t cut = rest.find("s than ");
    if (cut == std::string::npos || rest.empty() || rest.back() != 's')
      throw std::runtime_error("oracle: unrecognized question: " + question);
    ShapeKind a = shape_kind_from_string(rest.substr(0, cut));
    ShapeKind b = shape_kind_from_string(
        rest.substr(cut + 7, rest.size() - cut - 8));
    return graph.visible_count(a) > graph.visible_count(b) ? "yes" : "no";
  }
  throw std::runtime_error("oracle: unrecognized question: " + question);
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

constexpr ShapeKind kKinds[3] = {ShapeKind::disc, ShapeKind::square,
                                 ShapeKind::triangle};

// Per-kind size multipliers that equalize covered area at a given nominal
// radius (disc pi r^2, square 4 r^2, triangle 2 r^2), so every object adds
// the same increment to its band's statistics.
inline double kind_size_factor(ShapeKind k) {
  switch (k) {
    case ShapeKind::disc: return 1.0;
    case ShapeKind::square: return 0.8862;   // sqrt(pi / 4)
    case ShapeKind::triangle: return 1.2533; // sqrt(pi / 2)
  }
  return 1.0;
}

inline SceneGraph sample_scene(const std::string& image_id,
                               const DatasetConfig& cfg, Pcg32& rng) {
  SceneGraph graph;
  graph.image_id = image_id;
  graph.dense = rng.coin();
  double extent = static_cast<double>(cfg.image_size);

  auto place = [&](SceneObject& obj) {
    // keep objects mostly disjoint so counts stay visually unambiguous
    for (int attempt = 0; attempt < 30; ++attempt) {
      obj.cx = rng.uniform(obj.size + 1.0, extent - obj.size - 1.0);
      obj.cy = rng.uniform(obj.size + 1.0, extent - obj.size - 1.0);
      bool ok = true;
      for (const SceneObject& other : graph.objects) {
        double dx = obj.cx - other.cx, dy = obj.cy - other.cy;
        double min_dist = 0.8 * (obj.size + other.size);
        if (dx * dx + dy * dy < min_dist * min_dist) {
          ok = false;
          break;
        }
      }
      if (ok) break;
    }
  };

  // Each kind owns one characteristic band (disc/square/triangle map to the
  // first three bands), so a kind's footprint is readable from a single
  // plane. Sizes and contrasts are kept in narrow ranges so per-kind counts
  // stay decodable from that plane's excess area.
  int n_visible = rng.uniform_int(0, cfg.max_objects);
  for (int i = 0; i < n_visible; ++i) {
    SceneObject obj;
    obj.kind = kKinds[rng.uniform_int(0, 2)];
    obj.size = rng.uniform(0.145, 0.165) * extent * kind_size_factor(obj.kind);
    obj.hidden = false;
    place(obj);
    obj.band_contrast.assign(static_cast<size_t>(cfg.bands), 0.0);
    obj.band_contrast[static_cast<size_t>(obj.kind)] = rng.uniform(0.37, 0.43);
    graph.objects.push_back(std::move(obj));
  }

  // Hidden objects exist only in the 10-band preset: zero contrast in the
  // RGB planes, a kind-specific band among the extra bands (3, 4, 5) plus a
  // mild footprint across the remaining non-RGB bands. Each kind appears
  // hidden with probability 1/2, which keeps the spectral questions'
  // yes/no answers balanced.
  bool spectral = cfg.bands == 10 &&
                  std::find(cfg.templates.begin(), cfg.templates.end(),
                            QuestionType::spectral) != cfg.templates.end();
  if (spectral) {
    for (int k = 0; k < 3; ++k) {
      if (!rng.coin()) continue;
      SceneObject obj;
      obj.kind = kKinds[k];
      obj.size = rng.uniform(0.145, 0.165) * extent * kind_size_factor(obj.kind);
      obj.hidden = true;
      place(obj);
      obj.band_contrast.assign(static_cast<size_t>(cfg.bands), 0.0);
      int primary = 3 + k;
      for (int b = 3; b < cfg.bands; ++b)
        obj.band_contrast[static_cast<size_t>(b)] =
            b == primary ? rng.uniform(0.37, 0.43) : rng.uniform(0.08, 0.12);
      graph.objects.push_back(std::move(obj));
    }
  }
  return graph;
}

/// Picks a shape kind whose presence flag matches a fair coin when possible,
/// which keeps yes/no answers balanced regardless of the scene distribution.
inline ShapeKind pick_balanced_kind(const std::vector<bool>& present,
                                    Pcg32& rng) {
  bool want_present = rng.coin();
  std::vector<ShapeKind> pool;
  for (int k = 0; k < 3; ++k)
    if (present[static_cast<size_t>(k)] == want_present) pool.push_back(kKinds[k]);
  if (pool.empty())
    for (int k = 0; k < 3; ++k)
      if (present[static_cast<size_t>(k)] != want_present) pool.push_back(kKinds[k]);
  return pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
}

inline Triplet make_question(const SceneGraph& graph, QuestionType type,
                             int tile_id, Pcg32& rng) {
  Triplet t;
  t.image_id = graph.image_id;
  t.type = type;
  t.tile_id = tile_id;
  switch (type) {
    case QuestionType::presence: {
      std::vector<bool> present(3);
      for (int k = 0; k < 3; ++k) present[static_cast<size_t>(k)] = graph.visible_count(kKinds[k]) > 0;
      ShapeKind kind = pick_balanced_kind(present, rng);
      t.question = "is there a " + shape_noun(kind);
      break;
    }
    case QuestionType::count: {
      ShapeKind kind = kKinds[rng.uniform_int(0, 2)];
      t.question = "how many " + shape_noun(kind) + "s are there";
      break;
    }
    case QuestionType::comparison: {
      int a = rng.uniform_int(0, 2);
      int b = rng.uniform_int(0, 1);
      if (b >= a) ++b;  // distinct second kind
      t.question = "are there more " + shape_noun(kKinds[a]) + "s than " +
                   shape_noun(kKinds[b]) + "s";
      break;
    }
    case QuestionType::scene:
      t.question = "is the scene dense or sparse";
      break;
    case QuestionType::spectral: {
      std::vector<bool> present(3);
      for (int k = 0; k < 3; ++k) present[static_cast<size_t>(k)] = graph.hidden_present(kKinds[k]);
      ShapeKind kind = pick_balanced_kind(present, rng);
      t.question = "is there a hidden " + shape_noun(kind);
      break;
    }
  }
  t.answer = oracle_answer(graph, t.question);
  return t;
}

}  // namespace detail

inline std::string make_image_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "img_%05d", index);
  return buf;
}

/// Deterministic synthetic dataset: per-image generator streams (stream id =
/// image index), contiguous tile blocks, 5/1/1 tile split. The 10-band
/// preset adds spectrally hidden objects whose RGB planes are statistically
/// indistinguishable from scenes without them.
inline SyntheticDataset generate_synthetic(const DatasetConfig& cfg) {
  if (cfg.bands != 3 && cfg.bands != 10)
    throw std::runtime_error("unsupported bands preset: " +
                             std::to_string(cfg.bands));
  if (cfg.n_images < 1)
    throw std::runtime_error("generate_synthetic: n_images must be >= 1");
  if (cfg.questions_per_image < 1)
    throw std::runtime_error("generate_synthetic: questions_per_image must be >= 1");
  if (cfg.templates.empty())
    throw std::runtime_error("generate_synthetic: no question templates");
  if (cfg.bands == 10 && cfg.image_size % 2 != 0)
    throw std::runtime_error("generate_synthetic: 10-band preset needs an even image size");

  SyntheticDataset ds;
  ds.config = cfg;
  for (int tile = 0; tile < DatasetConfig::kTiles; ++tile)
    ds.splits.tiles[tile] = tile < 5 ? Split::train
                           : tile == 5 ? Split::validation
                                       : Split::test;

  for (int i = 0; i < cfg.n_images; ++i) {
    std::string id = make_image_id(i);
    int tile = static_cast<int>(
        (static_cast<long>(i) * DatasetConfig::kTiles) / cfg.n_images);
    Pcg32 rng(cfg.seed, static_cast<uint64_t>(i));
    SceneGraph graph = detail::sample_scene(id, cfg, rng);
    MultispectralImage img = render_scene(graph, cfg, rng);
    for (int q = 0; q < cfg.questions_per_image; ++q) {
      QuestionType type =
          cfg.templates[static_cast<size_t>(q) % cfg.templates.size()];
      ds.triplets.push_back(detail::make_question(graph, type, tile, rng));
    }
    ds.image_ids.push_back(id);
    ds.images.push_back(std::move(img));
    ds.graphs.push_back(std::move(graph));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json triplet_to_json(const Triplet& t) {
  return nlohmann::json{{"image_id", t.image_id},
                        {"question", t.question},
                        {"answer", t.answer},
                        {"type", to_string(t.type)},
                        {"tile", t.tile_id}};
}

inline Triplet triplet_from_json(const nlohmann::json& j) {
  Triplet t;
  t.image_id = j.at("image_id").get<std::string>();
  t.question = j.at("question").get<std::string>();
  t.answer = j.at("answer").get<std::string>();
  t.type = question_type_from_string(j.at("type").get<std::string>());
  t.tile_id = j.at("tile").get<int>();
  return t;
}

inline nlohmann::json scene_graph_to_json(const SceneGraph& g) {
  nlohmann::json objects = nlohmann::json::array();
  for (const SceneObject& o : g.objects)
    objects.push_back(nlohmann::json{{"kind", to_string(o.kind)},
                                     {"cx", o.cx},
                                     {"cy", o.cy},
                                     {"size", o.size},
                                     {"hidden", o.hidden},
                                     {"contrast", o.band_contrast}});
  return nlohmann::json{{"image_id", g.image_id},
                        {"density", g.dense ? "dense" : "sparse"},
                        {"objects", objects}};
}

inline SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph g;
  g.image_id = j.at("image_id").get<std::string>();
  std::string density = j.at("density").get<std::string>();
  if (density != "dense" && density != "sparse")
    throw std::runtime_error("unknown density class: " + density);
  g.dense = density == "dense";
  for (const auto& jo : j.at("objects")) {
    SceneObject o;
    o.kind = shape_kind_from_string(jo.at("kind").get<std::string>());
    o.cx = jo.at("cx").get<double>();
    o.cy = jo.at("cy").get<double>();
    o.size = jo.at("size").get<double>();
    o.hidden = jo.at("hidden").get<bool>();
    o.band_contrast = jo.at("contrast").get<std::vector<double>>();
    g.objects.push_back(std::move(o));
  }
  return g;
}

inline nlohmann::json splits_to_json(const SplitAssignment& s) {
  nlohmann::json tiles = nlohmann::json::object();
  for (const auto& [tile, split] : s.tiles)
    tiles[std::to_string(tile)] = to_string(split);
  return nlohmann::json{{"tiles", tiles}};
}

inline SplitAssignment splits_from_json(const nlohmann::json& j) {
  SplitAssignment s;
  for (const auto& [key, value] : j.at("tiles").items())
    s.tiles[std::stoi(key)] = split_from_string(value.get<std::string>());
  return s;
}

inline nlohmann::json dataset_config_to_json(const DatasetConfig& cfg) {
  std::vector<std::string> templates;
  for (QuestionType t : cfg.templates) templates.push_back(to_string(t));
  return nlohmann::json{{"n_images", cfg.n_images},
                        {"bands", cfg.bands},
                        {"image_size", cfg.image_size},
                        {"questions_per_image", cfg.questions_per_image},
                        {"templates", templates},
                        {"seed", cfg.seed},
                        {"max_objects", cfg.max_objects}};
}

inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig cfg;
  cfg.n_images = j.at("n_images").get<int>();
  cfg.bands = j.at("bands").get<int>();
  cfg.image_size = j.at("image_size").get<int>();
  cfg.questions_per_image = j.at("questions_per_image").get<int>();
  cfg.templates.clear();
  for (const auto& t : j.at("templates"))
    cfg.templates.push_back(question_type_from_string(t.get<std::string>()));
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.max_objects = j.at("max_objects").get<int>();
  return cfg;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes images/, triplets.jsonl, splits.json, scene_graphs.jsonl and a
/// dataset.json manifest; rewrites are byte-identical for identical inputs.
inline void write_dataset(const std::string& dir, const SyntheticDataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  write_text_file((fs::path(dir) / "dataset.json").string(),
                  dataset_config_to_json(ds.config).dump(2) + "\n");
  for (size_t i = 0; i < ds.images.size(); ++i)
    write_rsb((fs::path(dir) / "images" / (ds.image_ids[i] + ".rsb")).string(),
              ds.images[i]);
  std::string lines;
  for (const Triplet& t : ds.triplets) lines += triplet_to_json(t).dump() + "\n";
  write_text_file((fs::path(dir) / "triplets.jsonl").string(), lines);
  lines.clear();
  for (const SceneGraph& g : ds.graphs)
    lines += scene_graph_to_json(g).dump() + "\n";
  write_text_file((fs::path(dir) / "scene_graphs.jsonl").string(), lines);
  write_text_file((fs::path(dir) / "splits.json").string(),
                  splits_to_json(ds.splits).dump(2) + "\n");
}

inline SyntheticDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw std::runtime_error(dir + ": not a dataset directory");
  SyntheticDataset ds;
  ds.config = dataset_config_from_json(
      nlohmann::json::parse(read_text_file((fs::path(dir) / "dataset.json").string())));
  ds.splits = splits_from_json(
      nlohmann::json::parse(read_text_file((fs::path(dir) / "splits.json").string())));
  for (int i = 0; i < ds.config.n_images; ++i) {
    std::string id = make_image_id(i);
    ds.image_ids.push_back(id);
    ds.images.push_back(
        read_rsb((fs::path(dir) / "images" / (id + ".rsb")).string()));
  }
  std::istringstream triplets(read_text_file((fs::path(dir) / "triplets.jsonl").string()));
  std::string line;
  while (std::getline(triplets, line)) {
    if (line.empty()) continue;
    ds.triplets.push_back(triplet_from_json(nlohmann::json::parse(line)));
  }
  std::istringstream graphs(read_text_file((fs::path(dir) / "scene_graphs.jsonl").string()));
  while (std::getline(graphs, line)) {
    if (line.empty()) continue;
    ds.graphs.push_back(scene_graph_from_json(nlohmann::json::parse(line)));
  }
  return ds;
}

}  // namespace vbf
