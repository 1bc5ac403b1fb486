// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "vbfusion/dataset.hpp"

using vbf::DatasetConfig;
using vbf::MultispectralImage;
using vbf::QuestionType;
using vbf::SyntheticDataset;
using vbf::Tensor;

namespace fs = std::filesystem;

namespace {

DatasetConfig small_config() {
  DatasetConfig cfg;
  cfg.n_images = 21;
  cfg.bands = 3;
  cfg.image_size = 24;
  cfg.questions_per_image = 4;
  cfg.seed = 99;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("vbf_dataset_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Generate, OracleConsistencyOnEveryTriplet) {
  SyntheticDataset ds = vbf::generate_synthetic(small_config());
  ASSERT_EQ(ds.triplets.size(), 21u * 4u);
  for (const vbf::Triplet& t : ds.triplets) {
    const vbf::SceneGraph& g = ds.graphs[static_cast<size_t>(ds.image_index(t.image_id))];
    EXPECT_EQ(vbf::oracle_answer(g, t.question), t.answer) << t.question;
  }
}

TEST(Generate, SplitPurity) {
  SyntheticDataset ds = vbf::generate_synthetic(small_config());
  std::map<std::string, std::set<vbf::Split>> seen;
  for (const vbf::Triplet& t : ds.triplets)
    seen[t.image_id].insert(ds.splits.split_of_tile(t.tile_id));
  for (const auto& [id, splits] : seen) EXPECT_EQ(splits.size(), 1u);
  // all three splits are populated
  std::set<vbf::Split> all;
  for (const auto& [tile, split] : ds.splits.tiles) all.insert(split);
  EXPECT_EQ(all.size(), 3u);
}

TEST(Generate, DeterministicUnderSeed) {
  SyntheticDataset a = vbf::generate_synthetic(small_config());
  SyntheticDataset b = vbf::generate_synthetic(small_config());
  ASSERT_EQ(a.images.size(), b.images.size());
  for (size_t i = 0; i < a.images.size(); ++i)
    ASSERT_EQ(a.images[i].values, b.images[i].values);  // bitwise
  ASSERT_EQ(a.triplets.size(), b.triplets.size());
  for (size_t i = 0; i < a.triplets.size(); ++i) {
    EXPECT_EQ(a.triplets[i].question, b.triplets[i].question);
    EXPECT_EQ(a.triplets[i].answer, b.triplets[i].answer);
  }
}

TEST(Generate, ValuesInUnitInterval) {
  SyntheticDataset ds = vbf::generate_synthetic(small_config());
  for (const MultispectralImage& img : ds.images)
    for (double v : img.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
}

TEST(Generate, CountAnswersMatchDigitStrings) {
  SyntheticDataset ds = vbf::generate_synthetic(small_config());
  bool saw_count = false;
  for (const vbf::Triplet& t : ds.triplets) {
    if (t.type != QuestionType::count) continue;
    saw_count = true;
    EXPECT_GE(t.answer.size(), 1u);
    for (char c : t.answer) EXPECT_TRUE(c >= '0' && c <= '9');
  }
  EXPECT_TRUE(saw_count);
}

TEST(Generate, UnsupportedBandsPresetIsAnError) {
  DatasetConfig cfg = small_config();
  cfg.bands = 11;
  try {
    vbf::generate_synthetic(cfg);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported bands preset"),
              std::string::npos);
  }
}

TEST(Generate, TenBandHiddenObjectsInvisibleInRgb) {
  DatasetConfig cfg = small_config();
  cfg.bands = 10;
  cfg.templates.push_back(QuestionType::spectral);
  SyntheticDataset ds = vbf::generate_synthetic(cfg);

  bool saw_hidden = false;
  for (const vbf::SceneGraph& g : ds.graphs)
    for (const vbf::SceneObject& o : g.objects)
      if (o.hidden) {
        saw_hidden = true;
        for (int b = 0; b < 3; ++b) EXPECT_EQ(o.band_contrast[static_cast<size_t>(b)], 0.0);
        bool any_spectral = false;
        for (int b = 3; b < 10; ++b)
          any_spectral = any_spectral || o.band_contrast[static_cast<size_t>(b)] > 0.0;
        EXPECT_TRUE(any_spectral);
      }
  EXPECT_TRUE(saw_hidden);

  // constructive guarantee: re-rendering a scene with its hidden objects
  // deleted produces bitwise-identical RGB planes
  for (size_t i = 0; i < ds.graphs.size() && i < 8; ++i) {
    vbf::SceneGraph stripped = ds.graphs[i];
    stripped.objects.erase(
        std::remove_if(stripped.objects.begin(), stripped.objects.end(),
                       [](const vbf::SceneObject& o) { return o.hidden; }),
        stripped.objects.end());
    vbf::Pcg32 rng_a(cfg.seed, static_cast<uint64_t>(i));
    vbf::Pcg32 rng_b(cfg.seed, static_cast<uint64_t>(i));
    // reproduce the generator's draw sequence up to rendering
    vbf::SceneGraph replay = vbf::detail::sample_scene(ds.graphs[i].image_id, cfg, rng_a);
    (void)vbf::detail::sample_scene(ds.graphs[i].image_id, cfg, rng_b);
    MultispectralImage with = vbf::render_scene(ds.graphs[i], cfg, rng_a);
    MultispectralImage without = vbf::render_scene(stripped, cfg, rng_b);
    size_t rgb = static_cast<size_t>(3) * cfg.image_size * cfg.image_size;
    for (size_t k = 0; k < rgb; ++k)
      ASSERT_EQ(with.values[k], without.values[k]);
  }
}

TEST(Generate, SpectralQuestionsOnlyInTenBandPreset) {
  DatasetConfig cfg = small_config();
  cfg.bands = 10;
  cfg.templates = {QuestionType::spectral};
  cfg.questions_per_image = 2;
  SyntheticDataset ds = vbf::generate_synthetic(cfg);
  int yes = 0, no = 0;
  for (const vbf::Triplet& t : ds.triplets) {
    EXPECT_EQ(t.type, QuestionType::spectral);
    EXPECT_EQ(t.question.rfind("is there a hidden ", 0), 0u);
    (t.answer == "yes" ? yes : no) += 1;
  }
  EXPECT_GT(yes, 0);
  EXPECT_GT(no, 0);
}

TEST(ResampleBand, ConstantBandStaysConstant) {
  Tensor band = Tensor::full({60, 60}, 0.37);
  Tensor up = vbf::resample_band(band, 2);
  ASSERT_EQ(up.shape(), (std::vector<int>{120, 120}));
  for (size_t i = 0; i < up.size(); ++i) ASSERT_EQ(up.data()[i], 0.37);
}

TEST(ResampleBand, FactorOneIsIdentity) {
  vbf::Pcg32 rng(5);
  Tensor band({9, 7});
  for (double& v : band.values()) v = rng.uniform();
  Tensor same = vbf::resample_band(band, 1);
  for (size_t i = 0; i < band.size(); ++i)
    ASSERT_NEAR(same.data()[i], band.data()[i], 1e-12);
}

TEST(ResampleBand, SharedKernelWithBicubicResize) {
  vbf::Pcg32 rng(6);
  Tensor band({11, 13});
  for (double& v : band.values()) v = rng.uniform();
  Tensor a = vbf::resample_band(band, 3);
  Tensor b = vbf::bicubic_resize(band, 33, 39);
  ASSERT_EQ(a.shape(), b.shape());
  for (size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
}

TEST(StackBands, FullResolutionPassThrough) {
  vbf::Pcg32 rng(7);
  std::vector<Tensor> bands;
  for (int i = 0; i < 3; ++i) {
    Tensor b({8, 8});
    for (double& v : b.values()) v = rng.uniform();
    bands.push_back(b);
  }
  MultispectralImage img = vbf::stack_bands(bands, 8, 8);
  EXPECT_EQ(img.c, 3);
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 64; ++i)
      ASSERT_EQ(img.values[static_cast<size_t>(b) * 64 + i], bands[static_cast<size_t>(b)].data()[i]);
}

TEST(StackBands, MixedResolutionTenBand) {
  vbf::Pcg32 rng(8);
  std::vector<Tensor> bands;
  for (int i = 0; i < 4; ++i) {
    Tensor b({12, 12});
    for (double& v : b.values()) v = rng.uniform();
    bands.push_back(b);
  }
  for (int i = 0; i < 6; ++i) {
    Tensor b({6, 6});
    for (double& v : b.values()) v = rng.uniform();
    bands.push_back(b);
  }
  MultispectralImage img = vbf::stack_bands(bands, 12, 12);
  EXPECT_EQ(img.c, 10);
  // band order preserved; upsampled bands equal resample_band output
  Tensor up4 = vbf::resample_band(bands[4], 2);
  for (int i = 0; i < 144; ++i)
    ASSERT_EQ(img.values[static_cast<size_t>(4) * 144 + i], up4.data()[i]);
}

TEST(StackBands, NonIntegerFactorIsAnError) {
  std::vector<Tensor> bands;
  bands.push_back(Tensor({5, 5}));
  EXPECT_THROW(vbf::stack_bands(bands, 12, 12), std::runtime_error);
}

TEST(DatasetIo, RoundTripBitExact) {
  fs::path dir = fresh_dir("roundtrip");
  SyntheticDataset ds = vbf::generate_synthetic(small_config());
  vbf::write_dataset(dir.string(), ds);
  SyntheticDataset back = vbf::read_dataset(dir.string());

  ASSERT_EQ(back.images.size(), ds.images.size());
  for (size_t i = 0; i < ds.images.size(); ++i)
    ASSERT_EQ(back.images[i].values, ds.images[i].values);
  ASSERT_EQ(back.triplets.size(), ds.triplets.size());
  for (size_t i = 0; i < ds.triplets.size(); ++i) {
    EXPECT_EQ(back.triplets[i].question, ds.triplets[i].question);
    EXPECT_EQ(back.triplets[i].answer, ds.triplets[i].answer);
    EXPECT_EQ(back.triplets[i].type, ds.triplets[i].type);
    EXPECT_EQ(back.triplets[i].tile_id, ds.triplets[i].tile_id);
  }
  EXPECT_EQ(back.splits.tiles, ds.splits.tiles);

  // writing the read-back dataset reproduces identical bytes
  fs::path dir2 = fresh_dir("roundtrip2");
  vbf::write_dataset(dir2.string(), back);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    fs::path rel = fs::relative(entry.path(), dir);
    std::string a = vbf::read_text_file(entry.path().string());
    std::string b = vbf::read_text_file((dir2 / rel).string());
    ASSERT_EQ(a, b) << rel;
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(DatasetIo, UnknownQuestionTypeRejected) {
  EXPECT_THROW(vbf::question_type_from_string("riddle"), std::runtime_error);
  nlohmann::json j{{"image_id", "img_00000"}, {"question", "q"},
                   {"answer", "a"}, {"type", "riddle"}, {"tile", 0}};
  EXPECT_THROW(vbf::triplet_from_json(j), std::runtime_error);
}

TEST(DatasetIo, TruncatedImageFileNamesFileAndLength) {
  fs::path dir = fresh_dir("truncated");
  MultispectralImage img(2, 4, 4);
  std::string path = (dir / "img.rsb").string();
  vbf::write_rsb(path, img);
  std::string bytes = vbf::read_text_file(path);
  vbf::write_text_file(path, bytes.substr(0, bytes.size() / 2));
  try {
    vbf::read_rsb(path);
    FAIL() << "expected an error";
  } catch (const vbf::ParseError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("img.rsb"), std::string::npos);
    EXPECT_NE(msg.find("truncated"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(SliceBands, KeepsLeadingBands) {
  DatasetConfig cfg = small_config();
  cfg.bands = 10;
  cfg.templates.push_back(QuestionType::spectral);
  cfg.n_images = 3;
  SyntheticDataset ds = vbf::generate_synthetic(cfg);
  MultispectralImage rgb = vbf::slice_bands(ds.images[0], 3);
  EXPECT_EQ(rgb.c, 3);
  size_t n = static_cast<size_t>(3) * cfg.image_size * cfg.image_size;
  for (size_t i = 0; i < n; ++i) ASSERT_EQ(rgb.values[i], ds.images[0].values[i]);
}
