#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flarecast/error.hpp"
#include "flarecast/metrics.hpp"
#include "oracles.hpp"

using namespace flarecast;

namespace {

cv::Mat constant(int rows, int cols, int v) { return cv::Mat(rows, cols, CV_8UC1, cv::Scalar(v)); }

}  // namespace

TEST(Entropy, TwoEqualBinsIsOneBit) {
  cv::Mat m = constant(4, 4, 0);
  m.rowRange(0, 2).setTo(255);
  EXPECT_DOUBLE_EQ(metrics::entropy(m), 1.0);
}

TEST(Entropy, UniformHistogramIsEightBits) {
  cv::Mat m(16, 16, CV_8UC1);
  for (int i = 0; i < 256; ++i) m.at<std::uint8_t>(i / 16, i % 16) = static_cast<std::uint8_t>(i);
  EXPECT_DOUBLE_EQ(metrics::entropy(m), 8.0);
}

TEST(Entropy, ConstantIsExactlyZero) {
  const double en = metrics::entropy(constant(7, 9, 42));
  EXPECT_EQ(en, 0.0);
  EXPECT_FALSE(std::signbit(en));
}

TEST(Correlation, MatchesDirectCovariance) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const cv::Mat a = oracle::random_image(rng, 8, 8, false);
    const cv::Mat b = oracle::random_image(rng, 8, 8, false);
    EXPECT_NEAR(metrics::correlation(a, b),
                oracle::correlation(oracle::from_mat(a), oracle::from_mat(b)), 1e-12);
  }
}

TEST(Correlation, ZeroVarianceThrows) {
  std::mt19937_64 rng(1);
  try {
    metrics::correlation(constant(8, 8, 3), oracle::random_image(rng, 8, 8, false));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedCorrelation);
  }
}

TEST(Correlation, NegatedImageIsMinusOne) {
  std::mt19937_64 rng(2);
  const cv::Mat a = oracle::random_image(rng, 10, 10, false);
  const cv::Mat b = 255 - a;
  EXPECT_NEAR(metrics::correlation(a, b), -1.0, 1e-12);
}

TEST(Psnr, ConstantSixteenOffset) {
  const double db = metrics::psnr(constant(8, 8, 100), constant(8, 8, 116));
  EXPECT_NEAR(db, 10.0 * std::log10(65025.0 / 256.0), 1e-12);
  EXPECT_NEAR(db, 24.05, 0.005);
  EXPECT_TRUE(metrics::psnr_deteriorated(db));
}

TEST(Psnr, IdenticalIsInfinite) {
  std::mt19937_64 rng(3);
  const cv::Mat a = oracle::random_image(rng, 8, 8, false);
  const double db = metrics::psnr(a, a);
  EXPECT_TRUE(std::isinf(db) && db > 0);
  EXPECT_FALSE(metrics::psnr_deteriorated(db));
}

TEST(Psnr, SizeMismatchThrows) {
  EXPECT_THROW(metrics::psnr(constant(4, 4, 0), constant(4, 5, 0)), Error);
}

TEST(Ssim, IdentityIsOne) {
  std::mt19937_64 rng(4);
  const cv::Mat a = oracle::random_image(rng, 16, 16, true);
  EXPECT_EQ(metrics::ssim(a, a), 1.0);
}

TEST(Ssim, InvertedMidContrastIsLow) {
  cv::Mat a(16, 16, CV_8UC1);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) a.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(64 + 8 * ((r + c) % 16));
  }
  EXPECT_LT(metrics::ssim(a, 255 - a), 0.1);
}

TEST(Ssim, MatchesWindowedOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const cv::Mat a = oracle::random_image(rng, 16, 16, true);
    const cv::Mat b = oracle::perturb(rng, a, 30);
    const double got = metrics::ssim(a, b);
    EXPECT_LT(oracle::relative_error(got, oracle::ssim(oracle::from_mat(a), oracle::from_mat(b))), 1e-9);
    EXPECT_DOUBLE_EQ(got, metrics::ssim(b, a));
  }
}

TEST(Ssim, ColourUsesLuminance) {
  cv::Mat bgr(12, 12, CV_8UC3, cv::Scalar(10, 200, 30));
  cv::Mat grey(12, 12, CV_8UC1, cv::Scalar(0));
  const double luma = 0.114 * 10 + 0.587 * 200 + 0.299 * 30;
  cv::Mat lf(12, 12, CV_64FC1, cv::Scalar(luma));
  EXPECT_NEAR(metrics::psnr(bgr, grey), metrics::psnr(lf, grey), 1e-12);
}

TEST(Hausdorff, SinglePair) {
  const std::vector<cv::Point> a{{0, 0}}, b{{3, 4}};
  EXPECT_DOUBLE_EQ(metrics::hausdorff(a, b), 5.0);
}

TEST(Hausdorff, RandomPointSetsMatchBruteForce) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> d(0, 50);
  for (int t = 0; t < 20; ++t) {
    std::vector<cv::Point> a, b;
    for (int i = 0; i < 20; ++i) {
      a.emplace_back(d(rng), d(rng));
      b.emplace_back(d(rng), d(rng));
    }
    EXPECT_EQ(metrics::hausdorff(a, b), oracle::hausdorff(a, b));
  }
}

TEST(Hausdorff, MasksMatchPointScan) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const cv::Mat a = oracle::random_mask(rng, 24, 24, 0.05);
    const cv::Mat b = oracle::random_mask(rng, 24, 24, 0.05);
    EXPECT_EQ(metrics::hausdorff(a, b), oracle::hausdorff(oracle::nonzero(a), oracle::nonzero(b)));
  }
}

TEST(Hausdorff, EmptyMaskThrows) {
  try {
    metrics::hausdorff(cv::Mat::zeros(4, 4, CV_8UC1), cv::Mat::ones(4, 4, CV_8UC1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyMask);
  }
}

TEST(EvaluatePair, ReturnsFourLabelledMetrics) {
  std::mt19937_64 rng(8);
  const cv::Mat a = oracle::random_image(rng, 16, 16, true);
  const cv::Mat b = oracle::perturb(rng, a, 10);
  const auto values = metrics::evaluate_pair(a, b);
  ASSERT_EQ(values.size(), 4u);
  EXPECT_EQ(values[0].name, metrics::MetricName::kEntropy);
  EXPECT_EQ(values[2].units(), "dB");
}
