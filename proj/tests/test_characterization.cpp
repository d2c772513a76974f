#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flarecast/characterization.hpp"
#include "flarecast/error.hpp"
#include "flarecast/segmentation.hpp"
#include "test_util.hpp"

using namespace flarecast;
using namespace flarecast::characterization;

namespace {

CalibrationInfo ppm(double v) { return calibrate(v, 1.0); }

cv::Mat rect_mask(cv::Size size, cv::Rect r, int label = 1) {
  cv::Mat m = cv::Mat::zeros(size, CV_8UC1);
  m(r).setTo(label);
  return m;
}

}  // namespace

TEST(Contour, SquareIsFourCorners) {
  const auto c = extract_contour(rect_mask({20, 20}, {0, 0, 10, 10}));
  EXPECT_EQ(c.points.size(), 4u);
  EXPECT_EQ(c.component_pixels, 100u);
  EXPECT_DOUBLE_EQ(polygon_area_px(c.points), 100.0);
}

TEST(Contour, SinglePixelHasUnitArea) {
  const auto c = extract_contour(rect_mask({5, 5}, {2, 2, 1, 1}));
  EXPECT_DOUBLE_EQ(polygon_area_px(c.points), 1.0);
}

TEST(Contour, MergesClassesAndPicksLargestComponent) {
  cv::Mat m = rect_mask({40, 40}, {2, 2, 4, 4}, 3);
  m(cv::Rect(10, 10, 10, 5)).setTo(1);
  m(cv::Rect(10, 15, 10, 5)).setTo(2);
  const auto c = extract_contour(m);
  EXPECT_EQ(c.component_pixels, 100u);
  EXPECT_DOUBLE_EQ(polygon_area_px(c.points), 100.0);
}

TEST(Contour, EmptyMaskIsNoFlame) {
  try {
    extract_contour(cv::Mat::zeros(8, 8, CV_8UC1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoFlame);
  }
}

TEST(Contour, LShapeAreaMatchesPixelCount) {
  cv::Mat m = rect_mask({30, 30}, {5, 5, 4, 20});
  m(cv::Rect(5, 21, 15, 4)).setTo(1);
  const auto c = extract_contour(m);
  EXPECT_EQ(c.points.size(), 6u);
  EXPECT_DOUBLE_EQ(polygon_area_px(c.points), double(cv::countNonZero(m)));
}

TEST(Topmost, TiesGoToSmallerX) {
  const std::vector<cv::Point2d> pts{{5, 3}, {2, 3}, {4, 9}};
  EXPECT_EQ(topmost_point(pts), cv::Point2d(2, 3));
}

TEST(Length, VerticalFlame) {
  const cv::Mat m = rect_mask({250, 250}, {50, 80, 10, 120});
  const auto g = characterize(m, {{50, 200}}, ppm(10));
  EXPECT_EQ(g.topmost_point, cv::Point2d(50, 80));
  EXPECT_NEAR(g.total_length_m, 12.0, 1e-12);
}

TEST(Length, ThreeFourFive) {
  const std::vector<cv::Point2d> contour{{30, 60}, {40, 70}, {30, 70}};
  EXPECT_NEAR(flame_length(contour, {{0, 100}}, ppm(50), {200, 200}), 1.0, 1e-12);
}

TEST(Length, NozzleOutsideImageThrows) {
  const std::vector<cv::Point2d> contour{{1, 1}};
  EXPECT_THROW(flame_length(contour, {{-5, 0}}, ppm(1), {10, 10}), Error);
}

TEST(Area, SquareAndTriangle) {
  const cv::Mat sq = rect_mask({120, 120}, {0, 0, 100, 100});
  EXPECT_NEAR(characterize(sq, {{0, 100}}, ppm(10)).area_m2, 100.0, 1e-12);
  const std::vector<cv::Point2d> tri{{0, 0}, {30, 0}, {0, 40}};
  EXPECT_NEAR(flame_area(tri, ppm(10)), 6.0, 1e-12);
}

TEST(Area, DegenerateIsZero) {
  const std::vector<cv::Point2d> two{{0, 0}, {3, 0}};
  EXPECT_EQ(flame_area(two, ppm(1)), 0.0);
}

TEST(Calibration, PixelsPerMetric) {
  const auto c = calibrate(250.0, 0.5, "thermocouples");
  EXPECT_DOUBLE_EQ(c.pixels_per_metric, 500.0);
  EXPECT_EQ(c.source, "thermocouples");
  EXPECT_THROW(calibrate(0.0, 1.0), Error);
}

TEST(Directory, SkipsEmptyMasksAndSortsById) {
  test::TempDir dir;
  segmentation::write_mask(dir.path() / "b.png", rect_mask({20, 20}, {5, 5, 4, 4}));
  segmentation::write_mask(dir.path() / "a.png", rect_mask({20, 20}, {5, 2, 4, 10}));
  segmentation::write_mask(dir.path() / "c.png", cv::Mat::zeros(20, 20, CV_8UC1));
  const auto rows = characterize_directory(dir.path(), {{5, 19}}, ppm(1));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].frame_id, "a");
  EXPECT_DOUBLE_EQ(rows[0].area_m2, 40.0);
  write_geometry_csv(dir.path() / "g.csv", rows);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "g.csv"));
}
