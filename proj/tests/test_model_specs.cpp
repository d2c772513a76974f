#include <cmath>

#include <gtest/gtest.h>

#include "flarecast/error.hpp"
#include "flarecast/segmentation.hpp"
#include "flarecast/translation.hpp"
#include "test_util.hpp"

using namespace flarecast;
using namespace flarecast::segmentation;

TEST(ClassWeights, ClosedForm) {
  const std::vector<double> a{0.98, 0.02};
  const auto w = compute_class_weights(a);
  EXPECT_NEAR(w[0], 1.0 / std::log(2.0), 1e-12);
  EXPECT_NEAR(w[0], 1.4427, 1e-3);
  const std::vector<double> b{0.5, 0.5};
  EXPECT_NEAR(compute_class_weights(b)[0], 2.3875, 1e-3);
}

TEST(ClassWeights, RawCountsAreNormalised) {
  const std::vector<double> counts{980, 20}, freqs{0.98, 0.02};
  const auto a = compute_class_weights(counts), b = compute_class_weights(freqs);
  EXPECT_NEAR(a[1], b[1], 1e-12);
}

TEST(ClassWeights, ZeroFrequencyThrows) {
  const std::vector<double> f{1.0, 0.0};
  try {
    compute_class_weights(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kZeroFrequencyClass);
  }
}

TEST(ClassWeights, PixelCounts) {
  cv::Mat m = cv::Mat::zeros(4, 4, CV_8UC1);
  m.row(0).setTo(2);
  const std::vector<cv::Mat> masks{m, m};
  const auto c = class_pixel_counts(masks, 3);
  EXPECT_EQ(c, (std::vector<double>{24, 0, 8}));
}

TEST(EarlyStop, PatienceCountsStaleEvaluations) {
  EarlyStopping es(2, 100);
  EXPECT_FALSE(es.update(1.0));
  EXPECT_TRUE(es.improved());
  EXPECT_FALSE(es.update(1.5));
  EXPECT_FALSE(es.improved());
  EXPECT_TRUE(es.update(1.2));
  EXPECT_EQ(es.best(), 1.0);
}

TEST(EarlyStop, ImprovementResetsAndCapStops) {
  EarlyStopping es(3, 4);
  EXPECT_FALSE(es.update(3.0));
  EXPECT_FALSE(es.update(2.0));
  EXPECT_FALSE(es.update(1.0));
  EXPECT_TRUE(es.update(0.5));
  EXPECT_EQ(es.evaluations(), 4);
}

TEST(MeanIou, PerfectAndHalf) {
  cv::Mat t = cv::Mat::zeros(4, 4, CV_8UC1);
  t.colRange(0, 2).setTo(1);
  EXPECT_DOUBLE_EQ(mean_iou(t, t, 4), 1.0);
  cv::Mat p = cv::Mat::zeros(4, 4, CV_8UC1);
  p.colRange(0, 1).setTo(1);
  // class 0: 8/12, class 1: 4/8
  EXPECT_NEAR(mean_iou(p, t, 2), (8.0 / 12.0 + 0.5) / 2.0, 1e-12);
}

TEST(Masks, RoundTripWithSidecar) {
  test::TempDir dir;
  cv::Mat m(6, 5, CV_8UC1);
  cv::randu(m, 0, 4);
  write_mask(dir.path() / "m.png", m);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "m.json"));
  EXPECT_EQ(cv::norm(read_mask(dir.path() / "m.png"), m, cv::NORM_INF), 0.0);
}

TEST(Variant, ParseAndName) {
  EXPECT_EQ(parse_variant("unet"), Variant::kUnet);
  EXPECT_EQ(parse_variant("attention"), Variant::kAttentionUnet);
  EXPECT_EQ(to_string(Variant::kAttentionUnet), "attention_unet");
  EXPECT_THROW(parse_variant("segnet"), Error);
}

TEST(SegSpec, StrideFromDepth) {
  SegmentationModelSpec s;
  EXPECT_EQ(s.depth(), 5);
  EXPECT_EQ(s.stride(), 16);
  s.filters.clear();
  EXPECT_THROW(s.validate(), Error);
}

TEST(GeneratorSpec, DefaultsValidate) {
  translation::GeneratorSpec g;
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.depth(), 8);
  EXPECT_EQ(g.out_channels(), 3);
  g.decoder_filters.pop_back();
  EXPECT_THROW(g.validate(), Error);
}

TEST(GeneratorSpec, CanvasMustDivideByStride) {
  translation::GeneratorSpec g;
  g.width = 500;
  EXPECT_THROW(g.validate(), Error);
}

TEST(Discriminator, SeventyPixelPatches) {
  translation::DiscriminatorSpec d;
  EXPECT_EQ(d.receptive_field(), 70);
}

TEST(Discriminator, GridFollowsStrideProduct) {
  translation::DiscriminatorSpec d;
  d.stride_one_stages = 0;
  EXPECT_EQ(d.feature_grid({512, 1024}), cv::Size(32, 64));
  EXPECT_EQ(d.output_grid({512, 1024}), cv::Size(31, 63));
}

TEST(TrainConfigs, PaperDefaultsValidate) {
  translation::TranslationTrainConfig t;
  EXPECT_NO_THROW(t.validate());
  EXPECT_DOUBLE_EQ(t.lr_generator * 10.0, t.lr_discriminator);
  SegTrainConfig s;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.patience, 50);
  s.lr = 0.0;
  EXPECT_THROW(s.validate(), Error);
}
