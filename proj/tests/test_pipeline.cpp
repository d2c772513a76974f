#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "flarecast/error.hpp"
#include "flarecast/image.hpp"
#include "flarecast/ingest.hpp"
#include "flarecast/pipeline.hpp"
#include "test_util.hpp"

using namespace flarecast;
using namespace flarecast::pipeline;
namespace fs = std::filesystem;

TEST(Synthetic, SceneTruthMatchesEllipse) {
  SyntheticSceneSpec spec;
  const auto s = render_scene(spec, 10.0, 15.0, 1);
  EXPECT_NEAR(s.true_length_m, 3.0, 1e-12);
  EXPECT_NEAR(s.true_area_m2, std::numbers::pi * 150.0 / 100.0, 1e-12);
  const double pixels = cv::countNonZero(s.mask);
  EXPECT_NEAR(pixels, std::numbers::pi * 150.0, 0.05 * std::numbers::pi * 150.0);
  EXPECT_EQ(s.visible.size(), cv::Size(spec.content_width, spec.content_height));
}

TEST(Synthetic, PaperEllipseArea) {
  SyntheticSceneSpec spec;
  spec.content_width = 64;
  spec.content_height = 160;
  spec.canvas_width = 64;
  spec.canvas_height = 160;
  spec.nozzle = {32, 150};
  spec.a_max = 20;
  spec.b_max = 60;
  const auto s = render_scene(spec, 20.0, 60.0, 0);
  EXPECT_NEAR(s.true_area_m2, 37.70, 0.005);
}

TEST(Synthetic, ZonesAreNested) {
  const auto s = render_scene(SyntheticSceneSpec{}, 12.0, 20.0, 2);
  cv::Mat inner = s.mask >= 3;
  cv::Mat outer = s.mask >= 1;
  EXPECT_GT(cv::countNonZero(inner), 0);
  EXPECT_EQ(cv::countNonZero(inner & ~outer), 0);
}

TEST(Synthetic, DatasetIsPureFunctionOfSeed) {
  test::TempDir a, b;
  const auto da = generate_synthetic_dataset(SyntheticSceneSpec{}, 5, 9, a.path());
  const auto db = generate_synthetic_dataset(SyntheticSceneSpec{}, 5, 9, b.path());
  ASSERT_EQ(da.truth.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(da.truth[k].true_length_m, db.truth[k].true_length_m);
    const std::string f = "frame_000" + std::to_string(k) + ".png";
    EXPECT_EQ(sha256_file(a.path() / "visible" / f), sha256_file(b.path() / "visible" / f));
    EXPECT_EQ(sha256_file(a.path() / "ir" / f), sha256_file(b.path() / "ir" / f));
  }
  const auto m = ingest::load_manifest(da.manifest);
  ASSERT_TRUE(m.canvas.has_value());
  EXPECT_EQ(m.canvas->width, 64);
  EXPECT_EQ(m.entries.size(), 5u);
}

TEST(Config, RoundTrip) {
  test::TempDir dir;
  const auto ds = generate_synthetic_dataset(SyntheticSceneSpec{}, 2, 4, dir.path());
  const auto c = load_config(ds.config);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.manifest, ds.manifest);
  EXPECT_DOUBLE_EQ(c.pixels_per_metric, 10.0);
  EXPECT_EQ(c.segmentation.filters, desk_segmenter(4).filters);
  EXPECT_DOUBLE_EQ(c.translation_train.lr_generator * 10.0, c.translation_train.lr_discriminator);
  save_config(c, dir.path() / "again.toml");
  const auto d = load_config(dir.path() / "again.toml");
  EXPECT_EQ(d.translation_checkpoint, c.translation_checkpoint);
  EXPECT_EQ(d.generator.encoder_filters, c.generator.encoder_filters);
  EXPECT_EQ(d.synth.zone_radii, c.synth.zone_radii);
}

TEST(Config, UnknownKeyRejected) {
  test::TempDir dir;
  std::ofstream(dir.path() / "c.toml") << "seed = 1\n[segmentation]\nlearning_rate = 0.1\n";
  try {
    load_config(dir.path() / "c.toml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(Config, CalibrationFromReferenceDistance) {
  PipelineConfig c;
  c.reference_distance_px = 300;
  c.reference_distance_m = 1.5;
  EXPECT_DOUBLE_EQ(c.calibration().pixels_per_metric, 200.0);
  c.reference_distance_m = 0;
  EXPECT_THROW(c.calibration(), Error);
}

TEST(Run, MissingCheckpointIsReported) {
  test::TempDir dir;
  const auto ds = generate_synthetic_dataset(SyntheticSceneSpec{}, 2, 1, dir.path());
  auto c = load_config(ds.config);
  try {
    run_pipeline(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpointNotFound);
    EXPECT_NE(std::string(e.what()).find("translation"), std::string::npos);
  }
}

TEST(Run, TrainValSplit) {
  test::TempDir dir;
  const auto ds = generate_synthetic_dataset(SyntheticSceneSpec{}, 10, 1, dir.path());
  const auto [train, val] = train_val(ds.manifest, {}, 3);
  EXPECT_EQ(train.entries.size(), 8u);
  EXPECT_EQ(val.entries.size(), 2u);
}
