#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flarecast/brightness.hpp"
#include "flarecast/error.hpp"

using namespace flarecast;
using namespace flarecast::translation;

namespace {

double direct_rms(const cv::Mat& m) {
  double s = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < m.rows; ++r) {
    const auto* p = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols * m.channels(); ++c, ++n) s += double(p[c]) * p[c];
  }
  return std::sqrt(s / n);
}

}  // namespace

TEST(Rms, HalfZeroHalfTwoHundred) {
  cv::Mat m(4, 4, CV_8UC1, cv::Scalar(0));
  m.rowRange(0, 2).setTo(200);
  EXPECT_NEAR(rms_brightness(m), std::sqrt(20000.0), 1e-12);
}

TEST(Rms, CoversEveryChannel) {
  std::mt19937_64 rng(1);
  cv::Mat m(9, 7, CV_8UC3);
  cv::randu(m, 0, 255);
  EXPECT_NEAR(rms_brightness(m), direct_rms(m), 1e-9);
}

TEST(Brightness, WorkedExample) {
  const cv::Mat art(10, 10, CV_8UC1, cv::Scalar(150));
  const auto out = adjust_brightness(art, 90.0);
  EXPECT_TRUE(out.applied);
  EXPECT_NEAR(out.scale, 0.9, 1e-12);
  EXPECT_NEAR(out.rms_target, 135.0, 1e-12);
  EXPECT_NEAR(rms_brightness(out.image), 135.0, 1.0);
}

TEST(Brightness, SmallGapIsBitIdentical) {
  cv::Mat art(10, 10, CV_8UC3);
  cv::randu(art, 0, 255);
  const double ref = rms_brightness(art) - 20.0;
  const auto out = adjust_brightness(art, ref);
  EXPECT_FALSE(out.applied);
  EXPECT_EQ(out.scale, 1.0);
  EXPECT_EQ(cv::norm(out.image, art, cv::NORM_INF), 0.0);
}

TEST(Brightness, DimmerNeverTriggers) {
  const cv::Mat art(10, 10, CV_8UC1, cv::Scalar(40));
  const auto out = adjust_brightness(art, 200.0);
  EXPECT_FALSE(out.applied);
  EXPECT_EQ(cv::norm(out.image, art, cv::NORM_INF), 0.0);
}

TEST(Brightness, CustomPolicy) {
  const cv::Mat art(4, 4, CV_8UC1, cv::Scalar(100));
  BrightnessPolicy p;
  p.threshold = 5.0;
  p.factor = 1.0;
  const auto out = adjust_brightness(art, 80.0, p);
  EXPECT_TRUE(out.applied);
  EXPECT_NEAR(rms_brightness(out.image), 80.0, 1.0);
}

TEST(Brightness, ParseReferenceMode) {
  EXPECT_EQ(parse_reference_mode("paired"), ReferenceMode::kPairedReal);
  EXPECT_EQ(parse_reference_mode("corpus_mean"), ReferenceMode::kCorpusMean);
  EXPECT_THROW(parse_reference_mode("nope"), Error);
}
