#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "flarecast/csv.hpp"
#include "flarecast/error.hpp"
#include "flarecast/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flarecast;
using namespace flarecast::evaluation;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Mape, HandFixtures) {
  const std::vector<double> t{100, 200}, p{90, 210};
  EXPECT_NEAR(mape(t, p), 7.5, 1e-9);
  const std::vector<double> t1{50}, p1{60};
  EXPECT_NEAR(mape(t1, p1), 20.0, 1e-9);
}

TEST(Rmspe, HandFixtures) {
  const std::vector<double> t{100, 200}, p{90, 210};
  const double want = 100.0 * std::sqrt((std::pow(10.0 / 90.0, 2) + std::pow(10.0 / 210.0, 2)) / 2.0);
  EXPECT_NEAR(rmspe(t, p), want, 1e-9);
  EXPECT_NEAR(rmspe(t, p), 8.548, 5e-4);
  const std::vector<double> t1{50}, p1{60};
  EXPECT_NEAR(rmspe(t1, p1), 100.0 / 6.0, 1e-9);
}

TEST(Errors, DivisionByZeroNamesIndex) {
  const std::vector<double> t{1, 0}, p{1, 1};
  try {
    mape(t, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivisionByZero);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_THROW(rmspe(p, t), Error);
}

TEST(Errors, SpreadFromPublishedCells) {
  EXPECT_NEAR(error_spread(4.591, 5.952), 1.361, 1e-12);
}

TEST(GroundTruth, RoundTrip) {
  test::TempDir dir;
  const std::vector<GroundTruthRecord> rows{{"f0", 1.5, 2.25}, {"f1", 3.0, 37.699111843}};
  write_ground_truth(dir.path() / "gt.csv", rows);
  const auto back = load_ground_truth(dir.path() / "gt.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].frame_id, "f1");
  EXPECT_NEAR(back[1].true_area_m2, 37.699111843, 1e-6);
}

TEST(Hausdorff, GroupMeanMatchesPerFrameOracle) {
  std::mt19937_64 rng(3);
  std::vector<MaskPair> pairs;
  for (int i = 0; i < 6; ++i) {
    pairs.push_back({i < 4 ? "e1" : "e2", "unet", "f" + std::to_string(i),
                     oracle::random_mask(rng, 16, 16, 0.1), oracle::random_mask(rng, 16, 16, 0.1)});
  }
  const auto groups = aggregate_hausdorff(std::span<const MaskPair>(pairs));
  ASSERT_EQ(groups.size(), 2u);
  double sum = 0.0, lo = 1e9, hi = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = oracle::hausdorff(oracle::nonzero(pairs[i].original), oracle::nonzero(pairs[i].generated));
    sum += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  EXPECT_EQ(groups[0].experiment, "e1");
  EXPECT_EQ(groups[0].n, 4u);
  EXPECT_NEAR(groups[0].mean, sum / 4, 1e-12);
  EXPECT_EQ(groups[0].min, lo);
  EXPECT_EQ(groups[0].max, hi);
}

TEST(Report, GroupsAndPercentChange) {
  const std::vector<GroundTruthRecord> truth{{"a", 100, 10}, {"b", 200, 20}};
  std::vector<GeometryResult> geo{{"e", "m", kOriginalIr, "a", 90, 11},
                                  {"e", "m", kOriginalIr, "b", 210, 20},
                                  {"e", "m", kGeneratedIr, "a", 100, 10},
                                  {"e", "m", kGeneratedIr, "zzz", 1, 1}};
  const auto r = build_report(geo, truth);
  ASSERT_EQ(r.length.size(), 2u);
  const auto& orig = r.length[0].source == kOriginalIr ? r.length[0] : r.length[1];
  EXPECT_NEAR(orig.mape, 7.5, 1e-9);
  EXPECT_EQ(orig.n, 2u);
  ASSERT_EQ(r.skipped_frames.size(), 1u);
  bool found = false;
  for (const auto& c : r.changes) {
    if (c.frame_id == "a" && c.quantity == "area" && c.source == kOriginalIr) {
      EXPECT_NEAR(c.percent, 10.0, 1e-9);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Report, NoGeometryThrows) {
  const std::vector<GroundTruthRecord> truth{{"a", 1, 1}};
  EXPECT_THROW(build_report({}, truth), Error);
}

TEST(Report, AdvisoryWhenRmspeBelowMape) {
  ErrorCell c;
  c.mape = 5.0;
  c.rmspe = 4.0;
  EXPECT_TRUE(c.advisory());
  EXPECT_DOUBLE_EQ(c.spread(), -1.0);
}

TEST(Report, FilesAreWrittenAndStable) {
  test::TempDir dir;
  const std::vector<GroundTruthRecord> truth{{"a", 100, 10}, {"b", 200, 20}};
  const std::vector<GeometryResult> geo{{"e", "m", kOriginalIr, "a", 90, 11},
                                        {"e", "m", kOriginalIr, "b", 210, 20}};
  cv::Mat x(16, 16, CV_8UC1, cv::Scalar(100)), y(16, 16, CV_8UC1, cv::Scalar(116));
  x.at<std::uint8_t>(0, 0) = 0;
  y.at<std::uint8_t>(0, 0) = 16;
  const std::vector<ImageMetricRow> images{{"a", metrics::evaluate_pair(x, y)},
                                           {"b", metrics::evaluate_pair(x, x)}};
  const auto r = build_report(geo, truth, images);
  ASSERT_EQ(r.psnr_flags.size(), 1u);
  EXPECT_EQ(r.psnr_flags[0], "a");
  write_report(r, dir.path() / "r1");
  write_report(r, dir.path() / "r2");
  for (const char* f : {"length_errors.csv", "area_errors.csv", "hausdorff.csv",
                        "percentage_change.csv", "image_metrics.csv", "report.json"}) {
    ASSERT_TRUE(std::filesystem::exists(dir.path() / "r1" / f)) << f;
    EXPECT_EQ(slurp(dir.path() / "r1" / f), slurp(dir.path() / "r2" / f)) << f;
  }
  const auto table = csv::read(dir.path() / "r1" / "length_errors.csv");
  ASSERT_GE(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0][1], "MAPE");
  EXPECT_EQ(table.rows[0][2], "7.500");
  const std::string metrics_csv = slurp(dir.path() / "r1" / "image_metrics.csv");
  EXPECT_NE(metrics_csv.find("significant_deterioration"), std::string::npos);
  EXPECT_NE(metrics_csv.find("inf"), std::string::npos);
}

TEST(Csv, FormatIsFixed) {
  EXPECT_EQ(csv::format(1.0 / 3.0), "0.333333");
  EXPECT_EQ(csv::format(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(csv::format(2.0, 3), "2.000");
}
