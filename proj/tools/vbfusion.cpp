// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0
//
// Single binary entry point: dataset generation, training, evaluation and
// box inspection. Exit codes: 0 success, 2 usage/config error, 1 runtime
// failure. All randomness flows from explicit seeds and no output file
// carries a timestamp, so reruns with identical inputs are byte-identical.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbfusion/dataset.hpp"
#include "vbfusion/model.hpp"
#include "vbfusion/run_config.hpp"
#include "vbfusion/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

vbf::RunConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return vbf::RunConfig{};
  json j;
  try {
    j = json::parse(vbf::read_text_file(config_path));
  } catch (const json::exception& e) {
    throw vbf::ConfigError(config_path + ": " + e.what());
  }
  return vbf::run_config_from_json(j);
}

void write_resolved_config(const std::string& dir, const vbf::RunConfig& cfg) {
  vbf::write_text_file((fs::path(dir) / "config.resolved.json").string(),
                       vbf::run_config_to_json(cfg).dump(2) + "\n");
}

vbf::DatasetConfig dataset_config_from(const vbf::RunConfig& cfg) {
  vbf::DatasetConfig dc;
  dc.n_images = cfg.data.n_images;
  dc.bands = cfg.data.bands;
  dc.image_size = cfg.data.image_size;
  dc.seed = cfg.data.seed;
  dc.questions_per_image = 4;
  dc.templates = {vbf::QuestionType::presence, vbf::QuestionType::count,
                  vbf::QuestionType::comparison, vbf::QuestionType::scene};
  if (dc.bands == 10) dc.templates.push_back(vbf::QuestionType::spectral);
  return dc;
}

int cmd_generate_data(const std::string& out_dir, const vbf::RunConfig& cfg) {
  vbf::SyntheticDataset ds = vbf::generate_synthetic(dataset_config_from(cfg));
  fs::create_directories(out_dir);
  vbf::write_dataset(out_dir, ds);
  write_resolved_config(out_dir, cfg);
  std::cout << "wrote " << ds.images.size() << " images, "
            << ds.triplets.size() << " triplets to " << out_dir << "\n";
  return 0;
}

struct ModelBundle {
  vbf::ModelConfig model_cfg;
  vbf::BoxExtractorConfig box_cfg;
  vbf::TrainConfig train_cfg;
};

ModelBundle resolve_bundle(const vbf::RunConfig& cfg, int bands,
                           int image_size, int vocab_size, int classes) {
  ModelBundle b;
  b.model_cfg.bands = bands;
  b.model_cfg.l = cfg.model.l;
  b.model_cfg.d = cfg.model.d;
  b.model_cfg.heads = cfg.model.heads;
  b.model_cfg.v = cfg.model.v;
  b.model_cfg.max_text_len = cfg.model.max_text_len;
  b.model_cfg.b = cfg.boxes.b;
  b.model_cfg.box_h = cfg.boxes.h_out;
  b.model_cfg.box_w = cfg.boxes.w_out;
  b.model_cfg.dropout = cfg.model.dropout;
  b.model_cfg.vocab_size = vocab_size;
  b.model_cfg.classes = classes;
  b.model_cfg.seed = cfg.train.seed + 101;
  b.box_cfg.b = cfg.boxes.b;
  b.box_cfg.min_h = cfg.boxes.min_h > 0 ? cfg.boxes.min_h : std::max(1, image_size / 4);
  b.box_cfg.min_w = cfg.boxes.min_w > 0 ? cfg.boxes.min_w : std::max(1, image_size / 4);
  b.box_cfg.h_out = cfg.boxes.h_out;
  b.box_cfg.w_out = cfg.boxes.w_out;
  b.box_cfg.seed = cfg.train.seed;
  b.train_cfg.lr = cfg.train.lr;
  b.train_cfg.batch_size = cfg.train.batch;
  b.train_cfg.max_epochs = cfg.train.epochs;
  b.train_cfg.seed = cfg.train.seed;
  return b;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              vbf::RunConfig cfg) {
  if (!fs::is_directory(data_dir))
    throw vbf::ConfigError(data_dir + ": missing data directory");
  vbf::SyntheticDataset ds = vbf::read_dataset(data_dir);

  std::vector<std::string> train_questions, train_answers;
  for (const vbf::Triplet& t : ds.triplets) {
    if (ds.splits.split_of_tile(t.tile_id) != vbf::Split::train) continue;
    train_questions.push_back(t.question);
    train_answers.push_back(t.answer);
  }
  if (train_questions.empty())
    throw std::runtime_error("train split is empty");
  vbf::Vocabulary vocab = vbf::build_vocab(train_questions);
  vbf::AnswerVocabulary answers =
      vbf::build_answer_vocab(train_answers, cfg.answers.k_max);

  // resolve the derived minimum box extents into the echoed config
  cfg.boxes.min_h = cfg.boxes.min_h > 0 ? cfg.boxes.min_h
                                        : std::max(1, ds.config.image_size / 4);
  cfg.boxes.min_w = cfg.boxes.min_w > 0 ? cfg.boxes.min_w
                                        : std::max(1, ds.config.image_size / 4);
  cfg.data.bands = ds.config.bands;
  cfg.data.n_images = ds.config.n_images;
  cfg.data.image_size = ds.config.image_size;
  cfg.data.seed = ds.config.seed;

  ModelBundle bundle = resolve_bundle(cfg, ds.config.bands,
                                      ds.config.image_size, vocab.size(),
                                      answers.size());
  vbf::VqaModel model(bundle.model_cfg);

  auto train_samples = vbf::prepare_samples(ds, vbf::Split::train, model,
                                            bundle.box_cfg, vocab, answers);
  auto val_samples = vbf::prepare_samples(ds, vbf::Split::validation, model,
                                          bundle.box_cfg, vocab, answers);

  vbf::TrainResult result =
      vbf::train(model, train_samples, val_samples, answers, bundle.train_cfg);

  fs::create_directories(out_dir);
  model.save((fs::path(out_dir) / "model.vbf").string());
  std::string history;
  for (const vbf::EpochStats& e : result.history)
    history += vbf::epoch_to_json(e).dump() + "\n";
  vbf::write_text_file((fs::path(out_dir) / "history.jsonl").string(), history);
  vbf::write_text_file((fs::path(out_dir) / "vocab.json").string(),
                       vbf::vocab_to_json(vocab).dump(2) + "\n");
  vbf::write_text_file((fs::path(out_dir) / "answers.json").string(),
                       vbf::answer_vocab_to_json(answers).dump(2) + "\n");
  json resolved = vbf::run_config_to_json(cfg);
  resolved["model"]["resolved"] = vbf::model_config_to_json(bundle.model_cfg);
  resolved["train"]["best_epoch"] = result.best_epoch;
  vbf::write_text_file((fs::path(out_dir) / "config.resolved.json").string(),
                       resolved.dump(2) + "\n");

  std::cout << "best epoch " << result.best_epoch << ", validation OA "
            << result.best_val_oa << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& split_name, const std::string& report_path) {
  vbf::Split split;
  try {
    split = vbf::split_from_string(split_name);
  } catch (const std::exception&) {
    throw vbf::ConfigError("unknown split: " + split_name);
  }
  if (!fs::is_regular_file(model_path))
    throw vbf::ConfigError(model_path + ": missing model file");
  if (!fs::is_directory(data_dir))
    throw vbf::ConfigError(data_dir + ": missing data directory");

  fs::path model_dir = fs::path(model_path).parent_path();
  json resolved = json::parse(
      vbf::read_text_file((model_dir / "config.resolved.json").string()));
  vbf::ModelConfig model_cfg =
      vbf::model_config_from_json(resolved.at("model").at("resolved"));
  vbf::Vocabulary vocab = vbf::vocab_from_json(
      json::parse(vbf::read_text_file((model_dir / "vocab.json").string())));
  vbf::AnswerVocabulary answers = vbf::answer_vocab_from_json(
      json::parse(vbf::read_text_file((model_dir / "answers.json").string())));

  vbf::SyntheticDataset ds = vbf::read_dataset(data_dir);
  if (ds.config.bands != model_cfg.bands)
    throw vbf::ConfigError("band mismatch: model expects " +
                           std::to_string(model_cfg.bands) + " bands, data has " +
                           std::to_string(ds.config.bands));

  vbf::VqaModel model(model_cfg);
  model.load(model_path);

  vbf::RunConfig run_cfg = vbf::run_config_from_json(
      [&] {
        json j = resolved;
        j["model"].erase("resolved");
        j["train"].erase("best_epoch");
        return j;
      }());
  vbf::BoxExtractorConfig box_cfg;
  box_cfg.b = model_cfg.b;
  box_cfg.min_h = run_cfg.boxes.min_h;
  box_cfg.min_w = run_cfg.boxes.min_w;
  box_cfg.h_out = model_cfg.box_h;
  box_cfg.w_out = model_cfg.box_w;
  box_cfg.seed = run_cfg.train.seed;

  auto samples = vbf::prepare_samples(ds, split, model, box_cfg, vocab, answers);
  vbf::MetricsReport report = vbf::evaluate(model, samples, answers);

  vbf::write_text_file(report_path, vbf::report_to_json(report).dump(2) + "\n");
  std::printf("%-12s %8s %8s\n", "type", "count", "acc");
  for (const auto& [type, acc] : report.per_type)
    std::printf("%-12s %8d %8.2f\n", type.c_str(), report.counts.at(type),
                100.0 * acc);
  std::printf("%-12s %8d %8.2f\n", "AA", report.total, 100.0 * report.aa);
  std::printf("%-12s %8d %8.2f\n", "OA", report.total, 100.0 * report.oa);
  return 0;
}

int cmd_extract_boxes(const std::string& image_path,
                      const std::string& boxes_config, uint64_t seed,
                      const std::string& out_path) {
  vbf::BoxExtractorConfig cfg;
  if (!boxes_config.empty()) {
    json j;
    try {
      j = json::parse(vbf::read_text_file(boxes_config));
    } catch (const json::exception& e) {
      throw vbf::ConfigError(boxes_config + ": " + e.what());
    }
    json boxes = j.contains("boxes") ? j.at("boxes") : j;
    vbf::detail::check_keys(boxes, "boxes",
                            {"b", "min_h", "min_w", "h_out", "w_out"});
    vbf::detail::get_if_present(boxes, "b", cfg.b);
    vbf::detail::get_if_present(boxes, "min_h", cfg.min_h);
    vbf::detail::get_if_present(boxes, "min_w", cfg.min_w);
    vbf::detail::get_if_present(boxes, "h_out", cfg.h_out);
    vbf::detail::get_if_present(boxes, "w_out", cfg.w_out);
  }
  cfg.seed = seed;
  vbf::MultispectralImage img = vbf::read_rsb(image_path);
  if (cfg.resolved_min_h(img.H) > img.H || cfg.resolved_min_w(img.W) > img.W ||
      cfg.b < 1 || cfg.h_out < 1 || cfg.w_out < 1)
    throw vbf::ConfigError("box constraints violate image dimensions");

  vbf::Pcg32 rng(cfg.seed, 0);
  std::vector<vbf::BoxSpec> boxes = vbf::sample_boxes(img.H, img.W, cfg, rng);
  vbf::Pcg32 rng_again(cfg.seed, 0);
  vbf::Tensor stack = vbf::extract(img, cfg, rng_again);

  vbf::BinWriter w;
  size_t plane = static_cast<size_t>(img.c) * cfg.h_out * cfg.w_out;
  for (int i = 0; i < cfg.b; ++i) {
    vbf::MultispectralImage box(img.c, cfg.h_out, cfg.w_out);
    std::copy(stack.data() + i * plane, stack.data() + (i + 1) * plane,
              box.values.begin());
    vbf::append_rsb(w, box);
  }
  w.write_file(out_path);

  json sidecar;
  sidecar["boxes"] = json::array();
  for (const vbf::BoxSpec& box : boxes)
    sidecar["boxes"].push_back(json{{"s_h", box.s_h},
                                    {"e_h", box.e_h},
                                    {"s_w", box.s_w},
                                    {"e_w", box.e_w}});
  vbf::write_text_file(out_path + ".json", sidecar.dump(2) + "\n");
  std::cout << "wrote " << cfg.b << " boxes to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale multi-modal VQA: dataset generation, training, "
               "evaluation and box inspection"};
  app.require_subcommand(1);

  std::string out_dir, data_dir, config_path, model_path, split_name,
      report_path, image_path, boxes_config;
  int n_images = -1, bands = -1, image_size = -1;
  int64_t seed_flag = -1;
  uint64_t box_seed = 0;

  CLI::App* gen = app.add_subcommand("generate-data",
                                     "generate a synthetic dataset directory");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--config", config_path, "run config JSON");
  gen->add_option("--n", n_images, "number of images");
  gen->add_option("--bands", bands, "bands preset (3 or 10)");
  gen->add_option("--size", image_size, "image height/width in pixels");
  gen->add_option("--seed", seed_flag, "generation seed");

  CLI::App* tr = app.add_subcommand("train", "train a model on a dataset");
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  tr->add_option("--config", config_path, "run config JSON");

  CLI::App* ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
  ev->add_option("--model", model_path, "model.vbf checkpoint")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--split", split_name, "train | validation | test")->required();
  ev->add_option("--report", report_path, "metrics report JSON output")->required();

  CLI::App* ex = app.add_subcommand("extract-boxes",
                                    "sample and resize boxes from an image");
  ex->add_option("--image", image_path, "RSB image file")->required();
  ex->add_option("--boxes", boxes_config, "box config JSON");
  ex->add_option("--seed", box_seed, "sampling seed");
  ex->add_option("--out", out_dir, "output RSB stack path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      vbf::RunConfig cfg = load_config(config_path);
      if (n_images >= 0) cfg.data.n_images = n_images;
      if (bands >= 0) cfg.data.bands = bands;
      if (image_size >= 0) cfg.data.image_size = image_size;
      if (seed_flag >= 0) cfg.data.seed = static_cast<uint64_t>(seed_flag);
      if (cfg.data.bands != 3 && cfg.data.bands != 10)
        throw vbf::ConfigError("unsupported bands preset: " +
                               std::to_string(cfg.data.bands));
      return cmd_generate_data(out_dir, cfg);
    }
    if (tr->parsed()) return cmd_train(data_dir, out_dir, load_config(config_path));
    if (ev->parsed())
      return cmd_evaluate(model_path, data_dir, split_name, report_path);
    if (ex->parsed())
      return cmd_extract_boxes(image_path, boxes_config, box_seed, out_dir);
  } catch (const vbf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
